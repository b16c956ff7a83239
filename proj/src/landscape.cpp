#include "gclab/landscape.hpp"

#include <algorithm>
#include <cmath>

namespace gclab {

namespace {

double max_score(const PhaseScores& s) {
  if (s.scores.empty())
    throw std::invalid_argument("landscape metric: empty score table");
  double m = -INFINITY;
  for (const auto& [_, v] : s.scores) m = std::max(m, v);
  return m;
}

void require_same_configs(const PhaseScores& a, const PhaseScores& b) {
  if (a.scores.size() != b.scores.size())
    throw std::invalid_argument("landscape metric: config sets differ");
  for (const auto& [id, _] : a.scores)
    if (!b.scores.count(id))
      throw std::invalid_argument("landscape metric: config sets differ");
}

}  // namespace

double epsilon_mass(const PhaseScores& scores, double epsilon) {
  const double mx = max_score(scores);
  if (mx <= 0.0)
    throw UndefinedMetricError("epsilon_mass: non-positive phase maximum");
  std::size_t hits = 0;
  for (const auto& [_, v] : scores.scores)
    if (v >= epsilon * mx) ++hits;
  return double(hits) / double(scores.scores.size());
}

double phase_drift(const PhaseScores& a, const PhaseScores& b) {
  require_same_configs(a, b);
  const double ma = max_score(a), mb = max_score(b);
  if (ma <= 0.0 || mb <= 0.0)
    throw UndefinedMetricError("phase_drift: non-positive phase maximum");
  double acc = 0.0;
  for (const auto& [id, va] : a.scores)
    acc += std::abs(b.scores.at(id) / mb - va / ma);
  return acc / double(a.scores.size());
}

double early_regret(const PhaseScores& future, int config_id) {
  const auto it = future.scores.find(config_id);
  if (it == future.scores.end())
    throw std::invalid_argument("early_regret: unknown config id");
  const double mx = max_score(future);
  if (mx <= 0.0)
    throw UndefinedMetricError("early_regret: non-positive phase maximum");
  return 1.0 - it->second / mx;
}

std::vector<int> top_fraction_set(const PhaseScores& s, double top_fraction) {
  if (s.scores.empty())
    throw std::invalid_argument("top_fraction_set: empty score table");
  std::vector<std::pair<int, double>> items(s.scores.begin(), s.scores.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;  // ties resolved toward the lower config id
  });
  const auto k = static_cast<std::size_t>(
      std::ceil(top_fraction * double(items.size())));
  std::vector<int> out;
  for (std::size_t i = 0; i < std::max<std::size_t>(k, 1) && i < items.size();
       ++i)
    out.push_back(items[i].first);
  return out;
}

double optimum_overlap(const PhaseScores& a, const PhaseScores& b,
                       double top_fraction) {
  require_same_configs(a, b);
  auto ta = top_fraction_set(a, top_fraction);
  auto tb = top_fraction_set(b, top_fraction);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  std::vector<int> inter, uni;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                        std::back_inserter(inter));
  std::set_union(ta.begin(), ta.end(), tb.begin(), tb.end(),
                 std::back_inserter(uni));
  return double(inter.size()) / double(uni.size());
}

double across_phase_change(const std::vector<PhaseScores>& phases) {
  if (phases.size() < 2)
    throw std::invalid_argument("across_phase_change: need >= 2 phases");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < phases.size(); ++i)
    acc += phase_drift(phases[i], phases[i + 1]);
  return acc / double(phases.size() - 1);
}

}  // namespace gclab
