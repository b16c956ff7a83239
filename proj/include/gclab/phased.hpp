#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gclab/config_space.hpp"
#include "gclab/learners.hpp"
#include "gclab/maze.hpp"

namespace gclab {

struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceCurve {
  std::vector<std::int64_t> eval_steps;  // strictly increasing
  std::vector<double> scores;            // success ratios
};

struct PhasePlan {
  std::vector<std::int64_t> boundaries;  // t_ls(1..P), strictly increasing
  int phases() const { return static_cast<int>(boundaries.size()); }
  void validate() const;
};

// Finds the last step (linear interpolation between evaluation points) where
// the curve crosses 0.95 * final score; boundaries are the whole-step
// roundings of fractions {1/P..1} of that step. A curve that never dips
// below the threshold crosses at its first evaluation step.
PhasePlan split_phases(const ConvergenceCurve& curve, int n_phases);

// Interquartile mean: drop floor(n/4) values from each end of the sorted
// list, average the rest.
double iqm(std::vector<double> values);

struct PhaseEvalRecord {
  int config_id = 0;
  int seed = 0;
  int phase = 0;
  double success_ratio = 0.0;
  double distance_return = 0.0;
};

struct PhaseLog {
  std::vector<PhaseEvalRecord> records;
  std::vector<int> chosen;  // selected configuration per phase
};

// Highest seed-IQM success ratio wins; ties go to the lowest config id.
// Selection deliberately sees success ratios only.
int select_best_config(const std::map<int, std::vector<double>>& success_by_config);

struct RunParams {
  Algo algo = Algo::hiql;
  std::string maze_id = "medium";
  std::string regime = "constant";  // "constant" | "scheduled"
  double explore_ratio = 0.0;       // constant regime mixture
  int n_configs = 64;
  int n_seeds = 5;
  int eval_goal_count = 6;
  int episodes_per_goal = 10;
  std::uint64_t root_seed = 1;
  DatasetGenParams data;
  NetSpec net;
  int grad_events_per_phase = 10;
  int grad_goal_count = 8;
  int workers = 0;  // 0 -> hardware concurrency
  bool keep_all_checkpoints = true;
  int stop_after_phase = 0;  // testing hook: abort the run after this phase
};

// Phased training with shared checkpoint resets. Writes the run directory
// (manifest, plan, per-phase datasets, checkpoints, eval + gradient logs)
// and resumes from completed phase boundaries when artifacts already exist.
PhaseLog run_phased(const std::string& run_dir, const RunParams& params,
                    const ConfigSpace& space,
                    const std::vector<Configuration>& configs,
                    const PhasePlan& plan);

// Trains the algorithm's default configuration on the dataset, evaluating on
// a step grid that is denser early in training.
ConvergenceCurve probe_convergence(Algo algo, const Maze& maze,
                                   const OfflineDataset& dataset,
                                   const LearnerHyper& hyper,
                                   const NetSpec& net, std::int64_t budget,
                                   std::uint64_t root_seed);

}  // namespace gclab
