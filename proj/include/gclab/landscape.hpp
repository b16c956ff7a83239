#pragma once

#include <map>
#include <stdexcept>
#include <vector>

namespace gclab {

// Metric undefined for the given inputs (e.g. non-positive phase maximum
// when scores can be negative); callers report and skip.
struct UndefinedMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PhaseScores {
  int phase = 0;
  std::map<int, double> scores;  // config_id -> aggregated score
};

// Fraction of configurations with f(c) >= epsilon * max f. Requires a
// positive maximum.
double epsilon_mass(const PhaseScores& scores, double epsilon);

// Mean absolute change of max-normalized scores between consecutive phases.
double phase_drift(const PhaseScores& a, const PhaseScores& b);

// 1 - f(config)/max f in the later phase; callers average over future phases.
double early_regret(const PhaseScores& future, int config_id);

// Jaccard overlap of the top `top_fraction` config sets (by score, ties
// broken toward lower config id; set size is the ceiling).
double optimum_overlap(const PhaseScores& a, const PhaseScores& b,
                       double top_fraction = 0.1);
std::vector<int> top_fraction_set(const PhaseScores& s, double top_fraction);

// Mean of phase_drift over consecutive pairs.
double across_phase_change(const std::vector<PhaseScores>& phases);

}  // namespace gclab
