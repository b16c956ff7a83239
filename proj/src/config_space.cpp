#include "gclab/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gclab/rng.hpp"
#include "gclab/sobol.hpp"
#include "json.hpp"

namespace gclab {

double HyperparamDim::from_unit(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  if (kind == DimKind::boolean) return u >= 0.5 ? 1.0 : 0.0;
  double x;
  if (log_scale) {
    x = std::exp(std::log(lower) + u * (std::log(upper) - std::log(lower)));
  } else {
    x = lower + u * (upper - lower);
  }
  if (kind == DimKind::integer) {
    x = std::round(x);
    x = std::clamp(x, std::ceil(lower), std::floor(upper));
  } else {
    x = std::clamp(x, lower, upper);
  }
  return x;
}

ConfigSpace::ConfigSpace(std::vector<HyperparamDim> dims)
    : dims_(std::move(dims)) {
  validate();
}

void ConfigSpace::validate() const {
  std::set<std::string> seen;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw std::invalid_argument("dimension without name");
    if (!seen.insert(d.name).second)
      throw std::invalid_argument("duplicate dimension name: " + d.name);
    if (d.kind != DimKind::boolean) {
      if (!(d.lower < d.upper))
        throw std::invalid_argument("dim " + d.name + ": lower must be < upper");
      if (d.log_scale && !(d.lower > 0))
        throw std::invalid_argument("dim " + d.name +
                                    ": log scale requires lower > 0");
    }
  }
}

int ConfigSpace::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (dims_[i].name == name) return i;
  throw std::invalid_argument("unknown dimension: " + name);
}

bool ConfigSpace::contains(double value, int dim_index) const {
  const auto& d = dims_.at(dim_index);
  if (d.kind == DimKind::boolean) return value == 0.0 || value == 1.0;
  return value >= d.lower && value <= d.upper;
}

namespace {

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("bad boolean: " + s);
}

DimKind parse_kind(const std::string& s) {
  if (s == "continuous") return DimKind::continuous;
  if (s == "integer") return DimKind::integer;
  if (s == "boolean") return DimKind::boolean;
  throw std::invalid_argument("bad kind: " + s);
}

const char* kind_name(DimKind k) {
  switch (k) {
    case DimKind::continuous: return "continuous";
    case DimKind::integer: return "integer";
    case DimKind::boolean: return "boolean";
  }
  return "?";
}

}  // namespace

ConfigSpace ConfigSpace::parse(const std::string& text) {
  std::vector<HyperparamDim> dims;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok != "dim")
      throw std::invalid_argument("space schema line " + std::to_string(lineno) +
                                  ": expected 'dim', got '" + tok + "'");
    HyperparamDim d;
    bool have_lower = false, have_upper = false;
    while (ls >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("space schema line " +
                                    std::to_string(lineno) + ": bad token " + tok);
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "name") d.name = val;
      else if (key == "lower") { d.lower = std::stod(val); have_lower = true; }
      else if (key == "upper") { d.upper = std::stod(val); have_upper = true; }
      else if (key == "log_scale") d.log_scale = parse_bool(val);
      else if (key == "kind") d.kind = parse_kind(val);
      else throw std::invalid_argument("space schema: unknown key " + key);
    }
    if (d.kind == DimKind::boolean && !have_lower && !have_upper) {
      d.lower = 0.0;
      d.upper = 1.0;
    }
    dims.push_back(std::move(d));
  }
  return ConfigSpace(std::move(dims));
}

ConfigSpace ConfigSpace::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open space schema: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string ConfigSpace::to_text() const {
  std::ostringstream out;
  for (const auto& d : dims_) {
    out << "dim name=" << d.name;
    if (d.kind != DimKind::boolean) {
      out << " lower=" << d.lower << " upper=" << d.upper
          << " log_scale=" << (d.log_scale ? "true" : "false");
    }
    out << " kind=" << kind_name(d.kind) << "\n";
  }
  return out.str();
}

double Configuration::get(const ConfigSpace& space,
                          const std::string& name) const {
  return values.at(space.index_of(name));
}

std::vector<Configuration> sobol_sample(const ConfigSpace& space, int n,
                                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sobol_sample: n must be >= 1");
  if (space.size() < 1) throw std::invalid_argument("sobol_sample: empty space");
  SobolSequence seq(space.size());  // throws for dim > table bound

  Rng mask_rng = substream_rng(seed, "sobol-scramble");
  std::vector<std::uint32_t> masks(space.size());
  for (auto& m : masks) m = static_cast<std::uint32_t>(mask_rng.next_u64());
  seq.set_digital_shift(masks);

  std::vector<Configuration> out;
  out.reserve(n);
  std::vector<double> u;
  for (int i = 0; i < n; ++i) {
    seq.next(u);
    Configuration c;
    c.id = i;
    c.values.resize(space.size());
    for (int d = 0; d < space.size(); ++d)
      c.values[d] = space.dim(d).from_unit(u[d]);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Configuration> slice_pair(const ConfigSpace& space, int n,
                                      const std::string& dim_a,
                                      const std::string& dim_b,
                                      const Configuration& defaults,
                                      std::uint64_t seed) {
  if (dim_a == dim_b)
    throw std::invalid_argument("slice_pair: dim_a and dim_b must differ");
  const int ia = space.index_of(dim_a);
  const int ib = space.index_of(dim_b);
  if (static_cast<int>(defaults.values.size()) != space.size())
    throw std::invalid_argument("slice_pair: defaults do not match space");

  ConfigSpace plane(std::vector<HyperparamDim>{space.dim(ia), space.dim(ib)});
  auto pts = sobol_sample(plane, n, seed);

  std::vector<Configuration> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Configuration c = defaults;
    c.id = i;
    c.values[ia] = pts[i].values[0];
    c.values[ib] = pts[i].values[1];
    out.push_back(std::move(c));
  }
  return out;
}

std::string configs_to_jsonl(const ConfigSpace& space,
                             const std::vector<Configuration>& configs) {
  std::ostringstream out;
  for (const auto& c : configs) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    nlohmann::ordered_json vals;
    for (int d = 0; d < space.size(); ++d) vals[space.dim(d).name] = c.values[d];
    j["values"] = vals;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<Configuration> configs_from_jsonl(const ConfigSpace& space,
                                              const std::string& text) {
  std::vector<Configuration> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    Configuration c;
    c.id = j.at("id").get<int>();
    c.values.resize(space.size());
    for (int d = 0; d < space.size(); ++d)
      c.values[d] = j.at("values").at(space.dim(d).name).get<double>();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace gclab
