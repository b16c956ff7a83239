#include "gclab/grad_align.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gclab {

std::vector<Gradient> goal_gradients(const HiqlState& state, const Maze& maze,
                                     const CriticBatch& batch,
                                     const std::vector<Cell>& goals) {
  if (goals.size() < 2)
    throw std::invalid_argument("goal_gradients: need at least 2 goals");
  std::vector<Gradient> out;
  out.reserve(goals.size());
  for (Cell g : goals)
    out.push_back(hiql_critic_grad_for_goal(state, maze, batch, g));
  return out;
}

std::vector<Gradient> goal_gradients(const QrlState& state, const Maze& maze,
                                     const CriticBatch& batch,
                                     const std::vector<Cell>& goals) {
  if (goals.size() < 2)
    throw std::invalid_argument("goal_gradients: need at least 2 goals");
  std::vector<Gradient> out;
  out.reserve(goals.size());
  for (Cell g : goals)
    out.push_back(qrl_critic_grad_for_goal(state, maze, batch, g));
  return out;
}

PairwiseKappa pairwise_kappa(const std::vector<Gradient>& grads) {
  constexpr double kZeroNorm = 1e-12;
  PairwiseKappa out;
  std::vector<const Gradient*> usable;
  std::vector<double> norms;
  for (const auto& g : grads) {
    double sq = 0.0;
    for (double v : g.values) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < kZeroNorm) {
      ++out.excluded;
      continue;
    }
    usable.push_back(&g);
    norms.push_back(norm);
  }
  if (usable.size() < 2)
    throw std::invalid_argument("pairwise_kappa: fewer than 2 usable gradients");
  for (std::size_t i = 0; i < usable.size(); ++i) {
    for (std::size_t j = i + 1; j < usable.size(); ++j) {
      double dot = 0.0;
      const auto& a = usable[i]->values;
      const auto& b = usable[j]->values;
      for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
      double kappa = dot / (norms[i] * norms[j]);
      kappa = std::clamp(kappa, -1.0, 1.0);  // guard rounding at the ends
      out.kappas.push_back(kappa);
    }
  }
  return out;
}

std::vector<double> cdf_abscissae() {
  std::vector<double> xs(kCdfPoints);
  for (int i = 0; i < kCdfPoints; ++i)
    xs[i] = -1.0 + 2.0 * i / (kCdfPoints - 1);
  return xs;
}

KappaSummary summarize(const std::vector<GradSample>& samples,
                       const std::map<int, double>& regret_by_config) {
  if (samples.empty()) throw std::invalid_argument("summarize: no samples");
  KappaSummary out;

  std::map<std::pair<int, std::string>, std::vector<double>> groups;
  std::map<int, std::vector<double>> critic_by_config;
  for (const auto& s : samples) {
    auto& vec = groups[{s.context.phase, s.context.network_tag}];
    vec.insert(vec.end(), s.kappas.begin(), s.kappas.end());
    if (s.context.network_tag == "critic") {
      auto& cv = critic_by_config[s.context.config_id];
      cv.insert(cv.end(), s.kappas.begin(), s.kappas.end());
    }
  }

  const auto xs = cdf_abscissae();
  for (auto& [key, values] : groups) {
    GradGroupSummary g;
    g.phase = key.first;
    g.tag = key.second;
    g.count = values.size();
    std::sort(values.begin(), values.end());
    g.cdf.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto it = std::upper_bound(values.begin(), values.end(), xs[i]);
      g.cdf[i] = double(it - values.begin()) / values.size();
    }
    double below0 = 0, below_half = 0, sum = 0, sumsq = 0;
    for (double v : values) {
      if (v < 0.0) ++below0;
      if (v < -0.5) ++below_half;
      sum += v;
      sumsq += v * v;
    }
    g.p_negative = below0 / values.size();
    g.p_below_neg_half = below_half / values.size();
    g.mean = sum / values.size();
    const double var = std::max(0.0, sumsq / values.size() - g.mean * g.mean);
    g.stdev = std::sqrt(var);
    out.groups.push_back(std::move(g));
  }

  std::vector<double> stds, regrets;
  for (const auto& [config, values] : critic_by_config) {
    if (values.size() < 2) continue;
    double sum = 0, sumsq = 0;
    for (double v : values) {
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / values.size();
    const double sd =
        std::sqrt(std::max(0.0, sumsq / values.size() - mean * mean));
    auto it = regret_by_config.find(config);
    if (it == regret_by_config.end()) continue;
    out.per_config.emplace_back(config, sd, it->second);
    stds.push_back(sd);
    regrets.push_back(it->second);
  }
  if (stds.size() >= 2)
    out.pearson_std_regret = pearson_correlation(stds, regrets);
  return out;
}

double pearson_correlation(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_correlation: need matched n >= 2");
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson_correlation: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace gclab
