#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace gclab {

// Raised when stored artifacts do not match their recorded hashes or an
// inconsistent resume is attempted.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& p);
// Write-then-rename so partially written files never shadow completed ones.
void write_file(const std::filesystem::path& p, const std::string& content);
std::uint64_t file_hash(const std::filesystem::path& p);
std::string hash_hex(std::uint64_t h);

struct RunManifest {
  int format_version = 1;
  std::string run_id;
  std::string algorithm;
  std::string maze_id;
  std::string regime;          // "constant" | "scheduled"
  double explore_ratio = 0.0;  // constant regime only
  std::vector<std::int64_t> plan_boundaries;
  int n_configs = 0;
  int n_seeds = 0;
  std::uint64_t root_seed = 0;
  std::string config_set_hash;
  std::vector<std::string> phase_explore_ratios;  // rendered per phase
  std::vector<std::string> dataset_hashes;        // per phase
  std::string created_at;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string now_iso8601();

// Minimal CSV emitter; all report tables go through this.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const { return out_; }
  static std::string num(double v);

 private:
  std::size_t width_;
  std::string out_;
};

}  // namespace gclab
