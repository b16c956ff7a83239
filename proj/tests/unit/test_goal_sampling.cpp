#include <cmath>
#include <map>

#include "doctest.h"
#include "gclab/goal_sampling.hpp"
#include "../common/oracles.hpp"

using namespace gclab;

namespace {

// tiny handcrafted dataset: one 3-state trajectory plus one 2-state one
OfflineDataset tiny_dataset() {
  OfflineDataset ds;
  ds.maze_id = "test";
  Trajectory t1;
  t1.states = {{0, 0}, {1, 0}, {2, 0}};
  t1.actions = {Action::right, Action::right};
  Trajectory t2;
  t2.states = {{4, 4}, {4, 3}};
  t2.actions = {Action::up};
  ds.trajectories = {t1, t2};
  return ds;
}

double chi2(const std::map<int, int>& observed,
            const std::map<int, double>& expected, int draws) {
  double stat = 0.0;
  for (const auto& [k, p] : expected) {
    const double e = p * draws;
    const auto it = observed.find(k);
    const double o = it == observed.end() ? 0.0 : it->second;
    stat += (o - e) * (o - e) / e;
  }
  return stat;
}

int cell_key(Cell c) { return c.y * 100 + c.x; }

}  // namespace

TEST_SUITE("goal_sampling") {

TEST_CASE("pure uniform future sampling over a 3-state trajectory") {
  const auto ds = tiny_dataset();
  const StateIndex idx(ds);
  GoalSamplerSpec spec{1.0, 0.0, false, 0.99};
  Rng rng(1);
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    counts[cell_key(sample_goal(spec, ds, idx, 0, 0, rng))]++;
  REQUIRE(counts.size() == 2);  // goals are s_1 or s_2 only
  std::map<int, double> expected{{cell_key({1, 0}), 0.5},
                                 {cell_key({2, 0}), 0.5}};
  CHECK(chi2(counts, expected, draws) < oracle::chi2_crit_p01(1));
}

TEST_CASE("p_trajgoal = 0 samples from the dataset state multiset") {
  const auto ds = tiny_dataset();
  const StateIndex idx(ds);
  GoalSamplerSpec spec{0.0, 0.0, false, 0.99};
  Rng rng(2);
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    counts[cell_key(sample_goal(spec, ds, idx, 0, 0, rng))]++;
  // 5 states in the multiset, uniform
  REQUIRE(counts.size() == 5);
  std::map<int, double> expected;
  for (const auto& t : ds.trajectories)
    for (const auto& s : t.states) expected[cell_key(s)] += 0.2;
  CHECK(chi2(counts, expected, draws) < oracle::chi2_crit_p01(4));
}

TEST_CASE("curgoalshare returns the current state within the trajectory branch") {
  const auto ds = tiny_dataset();
  const StateIndex idx(ds);
  GoalSamplerSpec spec{1.0, 1.0, false, 0.99};
  Rng rng(3);
  for (int i = 0; i < 100; ++i)
    CHECK(sample_goal(spec, ds, idx, 0, 1, rng) == Cell{1, 0});

  // share 0.5: half current state, half the single future state
  GoalSamplerSpec half{1.0, 0.5, false, 0.99};
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    counts[cell_key(sample_goal(half, ds, idx, 0, 1, rng))]++;
  std::map<int, double> expected{{cell_key({1, 0}), 0.5},
                                 {cell_key({2, 0}), 0.5}};
  CHECK(chi2(counts, expected, draws) < oracle::chi2_crit_p01(1));
}

TEST_CASE("truncated geometric with small gamma concentrates on the next step") {
  OfflineDataset ds;
  ds.maze_id = "line";
  Trajectory t;
  for (int i = 0; i < 8; ++i) t.states.push_back({i, 0});
  for (int i = 0; i < 7; ++i) t.actions.push_back(Action::right);
  ds.trajectories = {t};
  const StateIndex idx(ds);
  GoalSamplerSpec spec{1.0, 0.0, true, 0.01};
  Rng rng(4);
  int next_step = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    if (sample_goal(spec, ds, idx, 0, 0, rng) == Cell{1, 0}) ++next_step;
  CHECK(double(next_step) / draws > 0.985);  // mass ~ (1-gamma) scaled
}

TEST_CASE("truncated geometric weights are normalized and geometric") {
  const auto w = truncated_geometric_weights(0.5, 4);
  REQUIRE(w.size() == 4);
  double sum = 0.0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] / w[0] == doctest::Approx(0.5));
  CHECK(w[3] / w[2] == doctest::Approx(0.5));
}

TEST_CASE("geometric sampling matches analytic weights (chi-squared)") {
  OfflineDataset ds;
  ds.maze_id = "line";
  Trajectory t;
  for (int i = 0; i < 5; ++i) t.states.push_back({i, 0});
  for (int i = 0; i < 4; ++i) t.actions.push_back(Action::right);
  ds.trajectories = {t};
  const StateIndex idx(ds);
  GoalSamplerSpec spec{1.0, 0.0, true, 0.7};
  Rng rng(5);
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    counts[cell_key(sample_goal(spec, ds, idx, 0, 0, rng))]++;
  const auto w = truncated_geometric_weights(0.7, 4);
  std::map<int, double> expected;
  for (int k = 0; k < 4; ++k) expected[cell_key({k + 1, 0})] = w[k];
  CHECK(chi2(counts, expected, draws) < oracle::chi2_crit_p01(3));
}

TEST_CASE("sampled goals always come from the dataset") {
  const auto ds = tiny_dataset();
  const StateIndex idx(ds);
  std::vector<Cell> all_states;
  for (const auto& t : ds.trajectories)
    for (const auto& s : t.states) all_states.push_back(s);
  GoalSamplerSpec spec{0.5, 0.3, true, 0.9};
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    const Cell g = sample_goal(spec, ds, idx, 0, 0, rng);
    bool found = false;
    for (const auto& s : all_states)
      if (s == g) found = true;
    CHECK(found);
  }
}

TEST_CASE("sampling at the final index is a precondition error") {
  const auto ds = tiny_dataset();
  const StateIndex idx(ds);
  GoalSamplerSpec spec{1.0, 0.0, false, 0.99};
  Rng rng(7);
  CHECK_THROWS_AS(sample_goal(spec, ds, idx, 0, 2, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_goal(spec, ds, idx, 1, 1, rng), std::invalid_argument);
}

}  // TEST_SUITE
