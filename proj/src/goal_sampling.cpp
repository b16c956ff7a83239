#include "gclab/goal_sampling.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace gclab {

StateIndex::StateIndex(const OfflineDataset& ds) : ds_(&ds) {
  cumulative_.reserve(ds.trajectories.size());
  for (const auto& t : ds.trajectories) {
    cumulative_.push_back(total_);
    total_ += t.states.size();
  }
  if (total_ == 0) throw std::invalid_argument("StateIndex: empty dataset");
}

Cell StateIndex::state_at(std::size_t flat) const {
  // binary search over cumulative offsets
  std::size_t lo = 0, hi = cumulative_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (cumulative_[mid] <= flat) lo = mid;
    else hi = mid - 1;
  }
  return ds_->trajectories[lo].states[flat - cumulative_[lo]];
}

std::vector<double> truncated_geometric_weights(double gamma,
                                                std::size_t n_future) {
  std::vector<double> w(n_future);
  double sum = 0.0, g = 1.0;
  for (std::size_t k = 0; k < n_future; ++k) {
    w[k] = g;  // weight of offset k+1, proportional to gamma^k
    sum += g;
    g *= gamma;
  }
  for (auto& x : w) x /= sum;
#ifndef NDEBUG
  double check = 0.0;
  for (double x : w) check += x;
  assert(std::abs(check - 1.0) < 1e-9);
#endif
  return w;
}

Cell sample_goal(const GoalSamplerSpec& spec, const OfflineDataset& ds,
                 const StateIndex& index, std::size_t traj_index, std::size_t t,
                 Rng& rng) {
  const auto& traj = ds.trajectories.at(traj_index);
  const std::size_t len = traj.states.size();
  if (t + 1 >= len)
    throw std::invalid_argument("sample_goal: t must precede the final state");

  if (rng.uniform01() < spec.p_trajgoal) {
    if (rng.uniform01() < spec.p_curgoalshare) return traj.states[t];
    const std::size_t n_future = len - 1 - t;
    if (!spec.geom_sample)
      return traj.states[t + 1 + rng.uniform_index(n_future)];
    // truncated geometric over offsets 1..n_future: gamma^(offset-1)
    auto w = truncated_geometric_weights(spec.gamma, n_future);
    double u = rng.uniform01(), acc = 0.0;
    for (std::size_t k = 0; k < n_future; ++k) {
      acc += w[k];
      if (u < acc) return traj.states[t + 1 + k];
    }
    return traj.states[len - 1];
  }
  return index.random_state(rng);
}

}  // namespace gclab
