#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gclab/learners.hpp"

namespace gclab {

struct GradContext {
  int config_id = 0;
  int seed = 0;
  int phase = 0;
  std::int64_t step = 0;
  std::string network_tag;  // "critic" | "actor"
};

struct GradSample {
  GradContext context;
  std::vector<double> kappas;  // m(m-1)/2 unordered-pair cosines
};

// Critic-loss gradients for each goal, all on the same minibatch.
std::vector<Gradient> goal_gradients(const HiqlState& state, const Maze& maze,
                                     const CriticBatch& batch,
                                     const std::vector<Cell>& goals);
std::vector<Gradient> goal_gradients(const QrlState& state, const Maze& maze,
                                     const CriticBatch& batch,
                                     const std::vector<Cell>& goals);

struct PairwiseKappa {
  std::vector<double> kappas;
  int excluded = 0;  // zero-norm gradients dropped before pairing
};

// Cosines of all unordered pairs of normalized gradients. Gradients with
// norm < 1e-12 are excluded; fewer than 2 usable gradients is an error.
PairwiseKappa pairwise_kappa(const std::vector<Gradient>& grads);

struct GradGroupSummary {
  int phase = 0;
  std::string tag;
  std::size_t count = 0;     // number of kappa values
  std::vector<double> cdf;   // at 101 evenly spaced abscissae in [-1, 1]
  double p_negative = 0.0;   // P(kappa < 0)
  double p_below_neg_half = 0.0;
  double mean = 0.0;
  double stdev = 0.0;
};

struct KappaSummary {
  std::vector<GradGroupSummary> groups;  // one per (phase, tag)
  // (config_id, kappa std over critic samples, early-selection regret)
  std::vector<std::tuple<int, double, double>> per_config;
  std::optional<double> pearson_std_regret;
};

inline constexpr int kCdfPoints = 101;
std::vector<double> cdf_abscissae();

// Groups samples by (phase, network_tag); the per-configuration kappa std
// uses critic samples only and pairs with the caller-supplied regret.
KappaSummary summarize(const std::vector<GradSample>& samples,
                       const std::map<int, double>& regret_by_config);

double pearson_correlation(const std::vector<double>& x,
                           const std::vector<double>& y);

}  // namespace gclab
