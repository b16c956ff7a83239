#pragma once

#include <cstdint>
#include <vector>

#include "gclab/maze.hpp"
#include "gclab/rng.hpp"

namespace gclab {

struct GoalSamplerSpec {
  double p_trajgoal = 0.5;      // trajectory-goal branch probability
  double p_curgoalshare = 0.0;  // within that branch, chance of goal = s_t
  bool geom_sample = false;     // geometric vs uniform future-state sampling
  double gamma = 0.99;          // decay of the truncated geometric
};

// Flat index over all dataset states, for the random-goal branch.
class StateIndex {
 public:
  explicit StateIndex(const OfflineDataset& ds);
  Cell state_at(std::size_t flat) const;
  std::size_t total() const { return total_; }
  Cell random_state(Rng& rng) const { return state_at(rng.uniform_index(total_)); }

 private:
  const OfflineDataset* ds_;
  std::vector<std::size_t> cumulative_;  // states before trajectory i
  std::size_t total_ = 0;
};

// Relabeled training goal for position t of trajectory traj_index:
//   with p_trajgoal: goal from the same trajectory -- s_t itself with
//   p_curgoalshare, otherwise a future state (uniform over t' > t, or
//   truncated-geometric ~ gamma^(t'-t) when geom_sample);
//   otherwise: uniform over all states in the dataset.
// Requires t < len(trajectory) - 1.
Cell sample_goal(const GoalSamplerSpec& spec, const OfflineDataset& ds,
                 const StateIndex& index, std::size_t traj_index, std::size_t t,
                 Rng& rng);

// Weights of the truncated geometric over future offsets 1..(len-1-t),
// normalized to sum to 1. Exposed for distribution tests.
std::vector<double> truncated_geometric_weights(double gamma,
                                                std::size_t n_future);

}  // namespace gclab
