#include "gclab/run_io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gclab/rng.hpp"

namespace gclab {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write file: " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::uint64_t file_hash(const fs::path& p) {
  const std::string data = read_file(p);
  return fnv1a(data.data(), data.size());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = format_version;
  j["run_id"] = run_id;
  j["algorithm"] = algorithm;
  j["maze_id"] = maze_id;
  j["regime"] = regime;
  j["explore_ratio"] = explore_ratio;
  j["plan_boundaries"] = plan_boundaries;
  j["n_configs"] = n_configs;
  j["n_seeds"] = n_seeds;
  j["root_seed"] = root_seed;
  j["config_set_hash"] = config_set_hash;
  j["phase_explore_ratios"] = phase_explore_ratios;
  j["dataset_hashes"] = dataset_hashes;
  j["created_at"] = created_at;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.format_version = j.at("format_version").get<int>();
  m.run_id = j.at("run_id").get<std::string>();
  m.algorithm = j.at("algorithm").get<std::string>();
  m.maze_id = j.at("maze_id").get<std::string>();
  m.regime = j.at("regime").get<std::string>();
  m.explore_ratio = j.at("explore_ratio").get<double>();
  m.plan_boundaries = j.at("plan_boundaries").get<std::vector<std::int64_t>>();
  m.n_configs = j.at("n_configs").get<int>();
  m.n_seeds = j.at("n_seeds").get<int>();
  m.root_seed = j.at("root_seed").get<std::uint64_t>();
  m.config_set_hash = j.at("config_set_hash").get<std::string>();
  m.phase_explore_ratios =
      j.at("phase_explore_ratios").get<std::vector<std::string>>();
  m.dataset_hashes = j.at("dataset_hashes").get<std::vector<std::string>>();
  m.created_at = j.at("created_at").get<std::string>();
  return m;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw std::invalid_argument("CsvWriter: row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

std::string CsvWriter::num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace gclab
