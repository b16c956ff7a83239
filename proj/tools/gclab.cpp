// gclab: offline goal-conditioned RL hyperparameter-landscape laboratory.
//
// Subcommands: gen-data, run, analyze, surface, grad-report.
// Exit codes: 0 success, 1 usage, 2 integrity, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gclab/analysis.hpp"
#include "gclab/config_space.hpp"
#include "gclab/diffnet.hpp"
#include "gclab/maze.hpp"
#include "gclab/phased.hpp"
#include "gclab/run_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace gclab;

namespace {

std::string resolve_run_dir(const std::string& dir) {
  if (fs::path(dir).is_absolute()) return dir;
  if (const char* root = std::getenv("GCLAB_RUN_ROOT"))
    return (fs::path(root) / dir).string();
  return dir;
}

int default_workers() {
  if (const char* w = std::getenv("GCLAB_WORKERS")) return std::atoi(w);
  return 0;  // hardware concurrency
}

Maze load_maze(const std::string& maze_arg) {
  if (maze_arg == "medium" || maze_arg == "large") return Maze::builtin(maze_arg);
  return Maze::load(maze_arg);
}

int cmd_gen_data(const std::string& maze_arg, double ratio, int total,
                 std::uint64_t seed, const std::string& out_path,
                 int expert_max_len, int explore_len) {
  const Maze maze = load_maze(maze_arg);
  DatasetGenParams params;
  params.total_traj = total;
  params.expert_max_len = expert_max_len > 0 ? expert_max_len : maze.horizon();
  params.explore_len = explore_len;
  auto ds = make_mixture(maze, ratio, params, seed);
  const std::string text = dataset_to_jsonl(ds);
  write_file(out_path, text);

  nlohmann::ordered_json manifest;
  manifest["maze_id"] = maze.id();
  manifest["explore_ratio"] = ratio;
  manifest["total_traj"] = total;
  manifest["n_explore"] = static_cast<int>(std::llround(ratio * total));
  manifest["n_expert"] = total - static_cast<int>(std::llround(ratio * total));
  manifest["expert_max_len"] = params.expert_max_len;
  manifest["explore_len"] = params.explore_len;
  manifest["seed"] = seed;
  manifest["dataset_hash"] = hash_hex(fnv1a(text.data(), text.size()));
  manifest["created_at"] = now_iso8601();
  write_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << ds.trajectories.size() << " trajectories to "
            << out_path << "\n";
  return 0;
}

struct RunCli {
  std::string algo = "hiql";
  std::string regime = "constant";
  double ratio = 0.0;
  std::string maze = "medium";
  int configs = 64;
  int seeds = 5;
  std::uint64_t seed = 1;
  std::int64_t budget = 3000;
  std::string boundaries;  // comma-separated override
  std::string out;
  std::string space_file;
  std::string slice;  // "dimA,dimB" for pairwise landscape sets
  int goals = 6;
  int episodes = 10;
  int total_traj = 600;
  int workers = default_workers();
  bool prune_checkpoints = false;
  int stop_after_phase = 0;
};

int cmd_run(const RunCli& cli) {
  const Algo algo = algo_from_name(cli.algo);
  const Maze maze = load_maze(cli.maze);

  ConfigSpace space = cli.space_file.empty()
                          ? ConfigSpace::parse(builtin_space_text(algo))
                          : ConfigSpace::load(cli.space_file);

  std::vector<Configuration> configs;
  if (!cli.slice.empty()) {
    const auto comma = cli.slice.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("--slice expects dimA,dimB");
    const auto defaults = hyper_to_config(space, default_hyper(algo));
    configs = slice_pair(space, cli.configs, cli.slice.substr(0, comma),
                         cli.slice.substr(comma + 1), defaults,
                         substream(cli.seed, "configs"));
  } else {
    configs = sobol_sample(space, cli.configs, substream(cli.seed, "configs"));
  }

  RunParams params;
  params.algo = algo;
  params.maze_id = maze.id();
  params.regime = cli.regime;
  params.explore_ratio = cli.ratio;
  params.n_configs = cli.configs;
  params.n_seeds = cli.seeds;
  params.eval_goal_count = cli.goals;
  params.episodes_per_goal = cli.episodes;
  params.root_seed = cli.seed;
  params.data.total_traj = cli.total_traj;
  params.data.expert_max_len = maze.horizon();
  params.workers = cli.workers;
  params.keep_all_checkpoints = !cli.prune_checkpoints;
  params.stop_after_phase = cli.stop_after_phase;

  PhasePlan plan;
  if (!cli.boundaries.empty()) {
    std::stringstream ss(cli.boundaries);
    std::string tok;
    while (std::getline(ss, tok, ',')) plan.boundaries.push_back(std::stoll(tok));
  } else {
    // convergence probe on the regime's data (expert-only for the scheduled
    // regime, whose final phase is the expert mixture)
    const double probe_ratio = cli.regime == "scheduled" ? 0.0 : cli.ratio;
    auto probe_ds = make_mixture(maze, probe_ratio, params.data,
                                 substream(cli.seed, "probe-data"));
    auto curve = probe_convergence(algo, maze, probe_ds, default_hyper(algo),
                                   params.net, cli.budget, cli.seed);
    plan = split_phases(curve, 4);
    std::cout << "convergence probe: boundaries";
    for (auto b : plan.boundaries) std::cout << " " << b;
    std::cout << "\n";
  }

  const std::string run_dir = resolve_run_dir(cli.out);
  auto log = run_phased(run_dir, params, space, configs, plan);
  std::cout << "run complete: " << log.records.size() << " evaluations, "
            << "selected per phase:";
  for (int c : log.chosen) std::cout << " " << c;
  std::cout << "\n" << run_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gclab: phased hyperparameter-landscape experiments for "
               "offline goal-conditioned RL"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
  std::string gd_maze = "medium", gd_out = "dataset.jsonl";
  double gd_ratio = 0.0;
  int gd_total = 600, gd_expert_len = 0, gd_explore_len = 24;
  std::uint64_t gd_seed = 1;
  gen->add_option("--maze", gd_maze, "medium | large | layout file");
  gen->add_option("--ratio", gd_ratio, "explore trajectory fraction")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--total", gd_total, "total trajectories");
  gen->add_option("--seed", gd_seed, "rng seed");
  gen->add_option("--out", gd_out, "output JSONL path");
  gen->add_option("--expert-max-len", gd_expert_len,
                  "expert trajectory cap (0: maze horizon)");
  gen->add_option("--explore-len", gd_explore_len, "explore walk length");

  // run
  auto* run = app.add_subcommand("run", "Run the phased training protocol");
  RunCli rc;
  run->add_option("--algo", rc.algo, "hiql | qrl");
  run->add_option("--regime", rc.regime, "constant | scheduled");
  run->add_option("--ratio", rc.ratio, "constant-regime explore ratio");
  run->add_option("--maze", rc.maze, "medium | large | layout file");
  run->add_option("--configs", rc.configs, "configuration count");
  run->add_option("--seeds", rc.seeds, "seeds per configuration");
  run->add_option("--seed", rc.seed, "root seed");
  run->add_option("--budget", rc.budget, "convergence-probe budget (steps)");
  run->add_option("--boundaries", rc.boundaries,
                  "explicit phase boundaries, e.g. 500,1000,1500,2000");
  run->add_option("--out", rc.out, "run directory")->required();
  run->add_option("--space", rc.space_file, "space schema file");
  run->add_option("--slice", rc.slice,
                  "vary only this dim pair (dimA,dimB), others at defaults");
  run->add_option("--goals", rc.goals, "evaluation goals");
  run->add_option("--episodes", rc.episodes, "episodes per goal");
  run->add_option("--traj", rc.total_traj, "trajectories per dataset");
  run->add_option("--workers", rc.workers, "worker threads (0: hardware)");
  run->add_flag("--prune-checkpoints", rc.prune_checkpoints,
                "keep only the selected configuration's checkpoints");
  run->add_option("--stop-after-phase", rc.stop_after_phase,
                  "stop after this phase (testing)");

  // analyze
  auto* an = app.add_subcommand("analyze", "Compute all report tables");
  std::string an_run, an_out;
  bool an_no_verify = false;
  an->add_option("--run", an_run, "run directory")->required();
  an->add_option("--out", an_out, "report directory")->required();
  an->add_flag("--no-verify", an_no_verify, "skip artifact hash checks");

  // surface
  auto* sf = app.add_subcommand("surface", "Emit a GP response surface grid");
  std::string sf_run, sf_dims = "lr,discount", sf_out, sf_metric = "distance_return";
  int sf_phase = 4, sf_res = 32;
  sf->add_option("--run", sf_run, "run directory")->required();
  sf->add_option("--dims", sf_dims, "dimension pair dimA,dimB");
  sf->add_option("--phase", sf_phase, "phase index (1-based)");
  sf->add_option("--resolution", sf_res, "grid resolution");
  sf->add_option("--metric", sf_metric, "success_ratio | distance_return");
  sf->add_option("--out", sf_out, "output CSV path")->required();

  // grad-report
  auto* gr = app.add_subcommand("grad-report",
                                "Emit gradient-interference tables only");
  std::string gr_run, gr_out;
  gr->add_option("--run", gr_run, "run directory")->required();
  gr->add_option("--out", gr_out, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(gd_maze, gd_ratio, gd_total, gd_seed, gd_out,
                          gd_expert_len, gd_explore_len);
    if (run->parsed()) return cmd_run(rc);
    if (an->parsed()) {
      auto data = load_run(resolve_run_dir(an_run), !an_no_verify);
      write_reports(data, an_out);
      std::cout << "reports written to " << an_out << "\n";
      return 0;
    }
    if (sf->parsed()) {
      auto data = load_run(resolve_run_dir(sf_run));
      const auto comma = sf_dims.find(',');
      if (comma == std::string::npos)
        throw std::invalid_argument("--dims expects dimA,dimB");
      const ScoreMetric metric = sf_metric == "success_ratio"
                                     ? ScoreMetric::success
                                     : ScoreMetric::distance_return;
      write_file(sf_out,
                 surface_csv(data, sf_dims.substr(0, comma),
                             sf_dims.substr(comma + 1), sf_phase, sf_res,
                             metric));
      std::cout << "surface written to " << sf_out << "\n";
      return 0;
    }
    if (gr->parsed()) {
      auto data = load_run(resolve_run_dir(gr_run));
      fs::create_directories(gr_out);
      write_reports(data, gr_out);  // includes the gradient tables
      std::cout << "gradient reports written to " << gr_out << "\n";
      return 0;
    }
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
