// Brute-force reference implementations, independent of the library code
// paths they are used to check. Test-only.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

namespace oracle {

// ---- Sobol via direct binary expansion of the Gray-coded index ----------
// Direction numbers recomputed here from the Joe-Kuo table rows for
// dimensions 1 and 2 (all the oracle checks need).
inline std::vector<std::uint32_t> sobol_v_table(int dim) {
  constexpr int kBits = 32;
  std::vector<std::uint32_t> m(kBits);
  if (dim == 1) {
    for (int k = 0; k < kBits; ++k) m[k] = 1;
  } else if (dim == 2) {
    // degree 1, a = 0, m_1 = 1; recursion m_k = 2*m_{k-1} XOR m_{k-1}
    m[0] = 1;
    for (int k = 1; k < kBits; ++k) m[k] = (m[k - 1] << 1) ^ m[k - 1];
  } else {
    throw std::invalid_argument("oracle supports dims 1 and 2");
  }
  std::vector<std::uint32_t> v(kBits);
  for (int k = 0; k < kBits; ++k) v[k] = m[k] << (kBits - 1 - k);
  return v;
}

// Point `index` (>= 1) of the Gray-code-ordered Sobol sequence.
inline std::vector<double> sobol_point(int dims, std::uint64_t index) {
  std::vector<double> out(dims);
  const std::uint64_t gray = index ^ (index >> 1);
  for (int d = 1; d <= dims; ++d) {
    const auto v = sobol_v_table(d);
    std::uint32_t x = 0;
    for (int b = 0; b < 32; ++b)
      if ((gray >> b) & 1ULL) x ^= v[b];
    out[d - 1] = double(x) * 0x1.0p-32;
  }
  return out;
}

// ---- landscape metric references ----------------------------------------
inline double max_of(const std::map<int, double>& m) {
  double best = -1e300;
  for (auto& [_, v] : m) best = std::max(best, v);
  return best;
}

inline double epsilon_mass(const std::map<int, double>& scores, double eps) {
  const double mx = max_of(scores);
  int hits = 0;
  for (auto& [_, v] : scores)
    if (v >= eps * mx) ++hits;
  return double(hits) / double(scores.size());
}

inline double phase_drift(const std::map<int, double>& a,
                          const std::map<int, double>& b) {
  const double ma = max_of(a), mb = max_of(b);
  double acc = 0;
  for (auto& [id, va] : a) acc += std::abs(b.at(id) / mb - va / ma);
  return acc / double(a.size());
}

inline double early_regret(const std::map<int, double>& future, int id) {
  return 1.0 - future.at(id) / max_of(future);
}

inline std::set<int> top_set(const std::map<int, double>& scores,
                             double fraction) {
  std::vector<std::pair<int, double>> v(scores.begin(), scores.end());
  std::stable_sort(v.begin(), v.end(), [](auto& x, auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(fraction * double(v.size())));
  std::set<int> out;
  for (std::size_t i = 0; i < std::max<std::size_t>(k, 1) && i < v.size(); ++i)
    out.insert(v[i].first);
  return out;
}

inline double optimum_overlap(const std::map<int, double>& a,
                              const std::map<int, double>& b,
                              double fraction) {
  auto ta = top_set(a, fraction), tb = top_set(b, fraction);
  int inter = 0;
  for (int id : ta)
    if (tb.count(id)) ++inter;
  const int uni = static_cast<int>(ta.size() + tb.size()) - inter;
  return double(inter) / double(uni);
}

inline double iqm(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t drop = v.size() / 4;
  double s = 0;
  for (std::size_t i = drop; i < v.size() - drop; ++i) s += v[i];
  return s / double(v.size() - 2 * drop);
}

inline double perplexity(const std::vector<double>& v) {
  double h = 0;
  for (double p : v)
    if (p > 0) h -= p * std::log(p);
  return std::exp(h);
}

inline double cosine_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 1.0 - dot / std::sqrt(na * nb);
}

// chi-squared critical values at p = 0.01 for small dof
inline double chi2_crit_p01(int dof) {
  switch (dof) {
    case 1: return 6.635;
    case 2: return 9.210;
    case 3: return 11.345;
    case 4: return 13.277;
    case 5: return 15.086;
  }
  throw std::invalid_argument("chi2_crit_p01: unsupported dof");
}

}  // namespace oracle
