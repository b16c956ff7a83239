#pragma once

#include <map>
#include <string>
#include <vector>

#include "gclab/config_space.hpp"
#include "gclab/grad_align.hpp"
#include "gclab/landscape.hpp"
#include "gclab/phased.hpp"
#include "gclab/run_io.hpp"

namespace gclab {

struct RunData {
  RunManifest manifest;
  ConfigSpace space;
  std::vector<Configuration> configs;
  PhasePlan plan;
  std::vector<PhaseEvalRecord> records;
  std::vector<GradSample> grad_samples;
  std::vector<int> chosen;  // selected configuration per phase
};

// Loads a completed run directory; verifies manifest hashes against the
// stored artifacts unless told otherwise (IntegrityError on mismatch).
RunData load_run(const std::string& run_dir, bool verify_hashes = true);

enum class ScoreMetric { success, distance_return };
const char* metric_name(ScoreMetric m);

// Seed-IQM score per configuration, one table per phase.
std::vector<PhaseScores> phase_scores(const RunData& run, ScoreMetric metric);

// Early-selection regret of every configuration picked at `pick_phase`,
// averaged over strictly later phases.
std::map<int, double> early_regret_by_config(
    const std::vector<PhaseScores>& phases, int pick_phase);

// P(kappa < 0) per (phase, seed) over critic samples, pooled across
// configurations and logging events.
std::map<std::pair<int, int>, double> critic_tail_mass_by_phase_seed(
    const RunData& run);

// Writes every report table (landscape, drift, regret, overlap, importance,
// stability, gradient CDF/summaries) as CSV files under out_dir.
void write_reports(const RunData& run, const std::string& out_dir);

// GP response surface over a hyperparameter pair for one phase; emits
// x,y,prediction rows (log-scale dims pre-transformed to log space).
std::string surface_csv(const RunData& run, const std::string& dim_a,
                        const std::string& dim_b, int phase, int resolution,
                        ScoreMetric metric);

}  // namespace gclab
