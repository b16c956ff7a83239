#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gclab {

enum class DimKind { continuous, integer, boolean };

struct HyperparamDim {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool log_scale = false;
  DimKind kind = DimKind::continuous;

  // Maps a unit-hypercube coordinate into the dimension's native range.
  double from_unit(double u) const;
};

class ConfigSpace {
 public:
  ConfigSpace() = default;
  explicit ConfigSpace(std::vector<HyperparamDim> dims);

  const std::vector<HyperparamDim>& dims() const { return dims_; }
  int size() const { return static_cast<int>(dims_.size()); }
  const HyperparamDim& dim(int i) const { return dims_.at(i); }
  // Index of a named dimension; throws std::invalid_argument if unknown.
  int index_of(const std::string& name) const;
  bool contains(double value, int dim_index) const;

  // Text schema, one "dim" line per dimension:
  //   dim name=lr lower=1e-6 upper=1e-2 log_scale=true kind=continuous
  // '#' starts a comment. Booleans may omit lower/upper (implied 0/1).
  static ConfigSpace parse(const std::string& text);
  static ConfigSpace load(const std::string& path);
  std::string to_text() const;

 private:
  void validate() const;
  std::vector<HyperparamDim> dims_;
};

struct Configuration {
  int id = 0;
  std::vector<double> values;  // aligned with ConfigSpace::dims(); booleans 0/1

  double get(const ConfigSpace& space, const std::string& name) const;
};

// Scrambled Sobol design over the space. Scrambling is a per-dimension
// random digital shift keyed by `seed`; index 0 of the underlying sequence
// (the all-zeros point) is skipped. Deterministic in (space, n, seed).
std::vector<Configuration> sobol_sample(const ConfigSpace& space, int n,
                                        std::uint64_t seed);

// Configurations that vary only (dim_a, dim_b) on a Sobol design, with all
// other dimensions pinned to `defaults`.
std::vector<Configuration> slice_pair(const ConfigSpace& space, int n,
                                      const std::string& dim_a,
                                      const std::string& dim_b,
                                      const Configuration& defaults,
                                      std::uint64_t seed);

// JSON lines, one configuration per line: {"id":..,"values":{name:value,..}}
std::string configs_to_jsonl(const ConfigSpace& space,
                             const std::vector<Configuration>& configs);
std::vector<Configuration> configs_from_jsonl(const ConfigSpace& space,
                                              const std::string& text);

}  // namespace gclab
