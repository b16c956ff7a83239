#include "gclab/phased.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "gclab/grad_align.hpp"
#include "gclab/run_io.hpp"
#include "json.hpp"

namespace gclab {

namespace fs = std::filesystem;

void PhasePlan::validate() const {
  if (boundaries.size() < 2)
    throw std::invalid_argument("PhasePlan: need at least 2 phases");
  std::int64_t prev = 0;
  for (auto b : boundaries) {
    if (b <= prev)
      throw std::invalid_argument("PhasePlan: boundaries must be strictly increasing");
    prev = b;
  }
}

PhasePlan split_phases(const ConvergenceCurve& curve, int n_phases) {
  if (curve.eval_steps.empty() || curve.eval_steps.size() != curve.scores.size())
    throw std::invalid_argument("split_phases: malformed curve");
  for (std::size_t i = 1; i < curve.eval_steps.size(); ++i)
    if (curve.eval_steps[i] <= curve.eval_steps[i - 1])
      throw std::invalid_argument("split_phases: steps must be strictly increasing");
  if (n_phases < 2) throw std::invalid_argument("split_phases: n_phases >= 2");

  const double final_score = curve.scores.back();
  if (final_score <= 0.0)
    throw DegenerateError("split_phases: curve never reaches a positive threshold");
  const double thr = 0.95 * final_score;

  // Last intersection with the threshold, walking segments from the end.
  // A curve that never dips below thr crosses at its first evaluation step.
  double t_cross = double(curve.eval_steps.front());
  for (std::size_t i = curve.eval_steps.size() - 1; i-- > 0;) {
    const double a = curve.scores[i], b = curve.scores[i + 1];
    if (a <= thr && b > thr) {
      const double t0 = double(curve.eval_steps[i]);
      const double t1 = double(curve.eval_steps[i + 1]);
      t_cross = (a == b) ? t0 : t0 + (thr - a) / (b - a) * (t1 - t0);
      break;
    }
    if (a <= thr && b <= thr) {
      // every later point is above thr, so the crossing sits in the segment
      // to the right of this one; with b <= thr that segment starts at t_{i+1}
      t_cross = double(curve.eval_steps[i + 1]);
      break;
    }
  }

  PhasePlan plan;
  for (int i = 1; i <= n_phases; ++i)
    plan.boundaries.push_back(
        static_cast<std::int64_t>(std::llround(t_cross * i / n_phases)));
  plan.validate();
  return plan;
}

double iqm(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("iqm: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t drop = values.size() / 4;
  double sum = 0.0;
  const std::size_t n = values.size() - 2 * drop;
  for (std::size_t i = drop; i < values.size() - drop; ++i) sum += values[i];
  return sum / double(n);
}

int select_best_config(
    const std::map<int, std::vector<double>>& success_by_config) {
  if (success_by_config.empty())
    throw std::invalid_argument("select_best_config: no configurations");
  int best = -1;
  double best_score = -1.0;
  for (const auto& [config, successes] : success_by_config) {
    const double score = iqm(successes);
    if (score > best_score) {  // strict: ties keep the lowest config id
      best_score = score;
      best = config;
    }
  }
  return best;
}

namespace {

struct Learner {
  Algo algo;
  HiqlState hiql;
  QrlState qrl;
};

Learner init_learner(Algo algo, const Maze& maze, const LearnerHyper& hp,
                     const NetSpec& net, Rng& rng) {
  Learner l;
  l.algo = algo;
  if (algo == Algo::hiql) l.hiql = make_hiql_state(maze, hp, net, rng);
  else l.qrl = make_qrl_state(maze, hp, net, rng);
  return l;
}

std::string learner_to_bytes(const Learner& l) {
  return l.algo == Algo::hiql ? hiql_to_bytes(l.hiql) : qrl_to_bytes(l.qrl);
}

Learner learner_from_bytes(Algo algo, const std::string& bytes,
                           const LearnerHyper& hp) {
  Learner l;
  l.algo = algo;
  if (algo == Algo::hiql) {
    l.hiql = hiql_from_bytes(bytes);
    l.hiql.hp = hp;
  } else {
    l.qrl = qrl_from_bytes(bytes);
    l.qrl.hp = hp;
  }
  return l;
}

std::uint64_t learner_hash(const Learner& l) {
  return l.algo == Algo::hiql ? hiql_params_hash(l.hiql)
                              : qrl_params_hash(l.qrl);
}

void learner_train_step(Learner& l, const Maze& maze,
                        const BatchSampler& sampler, Rng& rng) {
  if (l.algo == Algo::hiql) hiql_train_step(l.hiql, maze, sampler, rng);
  else qrl_train_step(l.qrl, maze, sampler, rng);
}

PolicyFn learner_policy(const Learner& l, const Maze& maze) {
  return l.algo == Algo::hiql ? hiql_greedy_policy(l.hiql, maze)
                              : qrl_greedy_policy(l.qrl, maze);
}

const LearnerHyper& learner_hp(const Learner& l) {
  return l.algo == Algo::hiql ? l.hiql.hp : l.qrl.hp;
}

std::int64_t learner_step_count(const Learner& l) {
  return l.algo == Algo::hiql ? l.hiql.step : l.qrl.step;
}

struct JobResult {
  PhaseEvalRecord eval;
  bool diverged = false;
  std::vector<GradSample> grads;
  std::uint64_t start_hash = 0;
};

std::vector<std::int64_t> grad_event_steps(std::int64_t steps_in_phase,
                                           int n_events) {
  std::vector<std::int64_t> out;
  for (int j = 1; j <= n_events; ++j) {
    const auto s = static_cast<std::int64_t>(
        std::llround(double(steps_in_phase) * j / n_events));
    if (s >= 1 && (out.empty() || s != out.back())) out.push_back(s);
  }
  return out;
}

nlohmann::ordered_json eval_record_json(const PhaseEvalRecord& r,
                                        bool diverged) {
  nlohmann::ordered_json j;
  j["config_id"] = r.config_id;
  j["seed"] = r.seed;
  j["phase"] = r.phase;
  j["success_ratio"] = r.success_ratio;
  j["distance_return"] = r.distance_return;
  j["diverged"] = diverged;
  return j;
}

std::string ckpt_name(int config, int seed) {
  return "config" + std::to_string(config) + "_seed" + std::to_string(seed) +
         ".ckpt";
}

}  // namespace

ConvergenceCurve probe_convergence(Algo algo, const Maze& maze,
                                   const OfflineDataset& dataset,
                                   const LearnerHyper& hyper,
                                   const NetSpec& net, std::int64_t budget,
                                   std::uint64_t root_seed) {
  if (budget < 8) throw std::invalid_argument("probe_convergence: tiny budget");
  // denser early, mirroring the usual convergence logging grids
  const double fracs[] = {0.0125, 0.025, 0.05, 0.075, 0.1,   0.15, 0.2,
                          0.3,    0.4,   0.5,  0.625, 0.75,  0.875, 1.0};
  std::vector<std::int64_t> grid;
  for (double f : fracs) {
    auto s = static_cast<std::int64_t>(std::llround(f * double(budget)));
    if (s >= 1 && (grid.empty() || s != grid.back())) grid.push_back(s);
  }

  Rng init_rng = substream_rng(root_seed, "probe-init");
  Learner learner = init_learner(algo, maze, hyper, net, init_rng);
  BatchSampler sampler(dataset);
  Rng train_rng = substream_rng(root_seed, "probe-train");
  auto goals = pick_eval_goals(maze, 6, root_seed);
  const std::uint64_t eval_seed = substream(root_seed, "probe-eval");

  ConvergenceCurve curve;
  std::int64_t step = 0;
  for (auto target : grid) {
    bool diverged = false;
    while (step < target) {
      try {
        learner_train_step(learner, maze, sampler, train_rng);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      ++step;
    }
    double score = 0.0;
    if (!diverged) {
      auto res = evaluate(learner_policy(learner, maze), maze, goals, 10,
                          eval_seed);
      score = res.success_ratio;
    }
    curve.eval_steps.push_back(target);
    curve.scores.push_back(score);
    if (diverged) break;
  }
  return curve;
}

PhaseLog run_phased(const std::string& run_dir, const RunParams& params,
                    const ConfigSpace& space,
                    const std::vector<Configuration>& configs,
                    const PhasePlan& plan) {
  plan.validate();
  if (configs.empty()) throw std::invalid_argument("run_phased: no configurations");
  if (params.n_seeds < 1) throw std::invalid_argument("run_phased: need seeds");
  const Maze maze = Maze::builtin(params.maze_id);
  const int P = plan.phases();
  const fs::path root(run_dir);

  // Immutable run inputs. On resume these must match what is on disk.
  const std::string space_text = space.to_text();
  const std::string configs_text = configs_to_jsonl(space, configs);
  const std::string config_hash =
      hash_hex(fnv1a(configs_text.data(), configs_text.size()));

  // Phase datasets: the constant regime reuses one dataset object; the
  // scheduled regime improves mixture quality per phase.
  std::vector<OfflineDataset> datasets;
  if (params.regime == "scheduled") {
    for (int i = 1; i <= P; ++i)
      datasets.push_back(
          scheduled_regime(maze, i, params.data, params.root_seed));
  } else if (params.regime == "constant") {
    auto ds = make_mixture(maze, params.explore_ratio, params.data,
                           substream(params.root_seed, "data-constant"));
    for (int i = 0; i < P; ++i) datasets.push_back(ds);
  } else {
    throw std::invalid_argument("run_phased: unknown regime " + params.regime);
  }

  RunManifest manifest;
  manifest.run_id = root.filename().string();
  manifest.algorithm = algo_name(params.algo);
  manifest.maze_id = params.maze_id;
  manifest.regime = params.regime;
  manifest.explore_ratio =
      params.regime == "constant" ? params.explore_ratio : -1.0;
  manifest.plan_boundaries = plan.boundaries;
  manifest.n_configs = static_cast<int>(configs.size());
  manifest.n_seeds = params.n_seeds;
  manifest.root_seed = params.root_seed;
  manifest.config_set_hash = config_hash;
  for (int i = 0; i < P; ++i) {
    std::ostringstream r;
    r << datasets[i].explore_ratio;
    manifest.phase_explore_ratios.push_back(r.str());
    const std::string text = dataset_to_jsonl(datasets[i]);
    manifest.dataset_hashes.push_back(hash_hex(fnv1a(text.data(), text.size())));
  }

  const fs::path manifest_path = root / "manifest.json";
  if (fs::exists(manifest_path)) {
    auto existing = RunManifest::from_json(
        nlohmann::json::parse(read_file(manifest_path)));
    auto ours = manifest.to_json();
    auto theirs = existing.to_json();
    ours.erase("created_at");
    theirs.erase("created_at");
    if (ours != theirs)
      throw IntegrityError("run_phased: existing run directory does not match "
                           "the requested run parameters");
    manifest.created_at = existing.created_at;  // keep the original stamp
  } else {
    manifest.created_at = now_iso8601();
    fs::create_directories(root);
    write_file(manifest_path, manifest.to_json().dump(2) + "\n");
    write_file(root / "space.txt", space_text);
    write_file(root / "configs.jsonl", configs_text);
    nlohmann::ordered_json pj;
    pj["boundaries"] = plan.boundaries;
    pj["n_phases"] = P;
    write_file(root / "plan.json", pj.dump(2) + "\n");
  }
  if (hash_hex(file_hash(root / "configs.jsonl")) != config_hash)
    throw IntegrityError("run_phased: configs.jsonl does not match manifest");

  const int n_workers = params.workers > 0
                            ? params.workers
                            : std::max(1u, std::thread::hardware_concurrency());

  // Resolved hyperparameters per configuration.
  std::vector<LearnerHyper> hypers;
  hypers.reserve(configs.size());
  const LearnerHyper defaults = default_hyper(params.algo);
  for (const auto& c : configs)
    hypers.push_back(resolve_hyper(space, c, defaults));

  PhaseLog log;
  // Per-seed checkpoint bytes of the previously selected configuration.
  std::vector<std::string> lineage(params.n_seeds);

  for (int phase = 1; phase <= P; ++phase) {
    const fs::path phase_dir = root / ("phase" + std::to_string(phase));
    const std::int64_t phase_start = phase == 1 ? 0 : plan.boundaries[phase - 2];
    const std::int64_t steps_in_phase = plan.boundaries[phase - 1] - phase_start;
    const OfflineDataset& dataset = datasets[phase - 1];

    const fs::path complete_marker = phase_dir / "_COMPLETE";
    if (fs::exists(complete_marker)) {
      // verify artifacts, reload selection and eval records, refresh lineage
      auto marker = nlohmann::json::parse(read_file(complete_marker));
      for (const auto& [name, hash] : marker.at("files").items()) {
        const fs::path p = phase_dir / name;
        if (!fs::exists(p) || hash_hex(file_hash(p)) != hash.get<std::string>())
          throw IntegrityError("run_phased: artifact hash mismatch: " +
                               p.string());
      }
      auto sel = nlohmann::json::parse(read_file(phase_dir / "selection.json"));
      const int selected = sel.at("selected_config").get<int>();
      log.chosen.push_back(selected);
      std::istringstream evals(read_file(phase_dir / "eval.jsonl"));
      std::string line;
      while (std::getline(evals, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        PhaseEvalRecord r;
        r.config_id = j.at("config_id").get<int>();
        r.seed = j.at("seed").get<int>();
        r.phase = j.at("phase").get<int>();
        r.success_ratio = j.at("success_ratio").get<double>();
        r.distance_return = j.at("distance_return").get<double>();
        log.records.push_back(r);
      }
      for (int k = 0; k < params.n_seeds; ++k)
        lineage[k] = read_file(phase_dir / ckpt_name(selected, k));
      if (params.stop_after_phase == phase) return log;
      continue;
    }
    // partial leftovers from an interrupted phase are recomputed from scratch
    fs::remove_all(phase_dir);
    fs::create_directories(phase_dir);
    write_file(phase_dir / "dataset.jsonl", dataset_to_jsonl(dataset));

    const BatchSampler sampler(dataset);
    const auto eval_goals =
        pick_eval_goals(maze, params.eval_goal_count, params.root_seed);
    const std::uint64_t eval_seed =
        substream(params.root_seed, "eval",
                  {static_cast<std::uint64_t>(phase)});

    struct Job {
      int config_idx;
      int seed;
    };
    std::vector<Job> jobs;
    for (int c = 0; c < static_cast<int>(configs.size()); ++c)
      for (int k = 0; k < params.n_seeds; ++k) jobs.push_back({c, k});
    std::vector<JobResult> results(jobs.size());

    std::atomic<std::size_t> next_job{0};
    std::exception_ptr worker_error;
    std::mutex error_mutex;

    auto worker = [&]() {
      for (;;) {
        const std::size_t ji = next_job.fetch_add(1);
        if (ji >= jobs.size()) return;
        try {
          const Job job = jobs[ji];
          const Configuration& config = configs[job.config_idx];
          const LearnerHyper& hp = hypers[job.config_idx];

          Learner learner;
          if (phase == 1) {
            // fresh start, identical across configurations for a given seed
            Rng init_rng = substream_rng(
                params.root_seed, "init",
                {static_cast<std::uint64_t>(job.seed)});
            learner = init_learner(params.algo, maze, hp, params.net, init_rng);
          } else {
            learner = learner_from_bytes(params.algo, lineage[job.seed], hp);
          }
          JobResult& res = results[ji];
          res.start_hash = learner_hash(learner);

          Rng train_rng = substream_rng(
              params.root_seed, "train",
              {static_cast<std::uint64_t>(phase),
               static_cast<std::uint64_t>(config.id),
               static_cast<std::uint64_t>(job.seed)});
          const auto events =
              grad_event_steps(steps_in_phase, params.grad_events_per_phase);
          std::size_t next_event = 0;

          for (std::int64_t s = 1; s <= steps_in_phase && !res.diverged; ++s) {
            try {
              learner_train_step(learner, maze, sampler, train_rng);
            } catch (const NumericError&) {
              res.diverged = true;  // parameters stay finite; stop training
              break;
            }
            if (next_event < events.size() && s == events[next_event]) {
              const int event_index = static_cast<int>(next_event);
              ++next_event;
              Rng grad_rng = substream_rng(
                  params.root_seed, "grad",
                  {static_cast<std::uint64_t>(phase),
                   static_cast<std::uint64_t>(config.id),
                   static_cast<std::uint64_t>(job.seed),
                   static_cast<std::uint64_t>(event_index)});
              const std::int64_t global_step = phase_start + s;
              try {
                auto batch =
                    sample_transition_batch(sampler, hp.batch, grad_rng);
                GradContext ctx{config.id, job.seed, phase, global_step,
                                "critic"};
                // goals from the configuration's own relabeling distribution,
                // held fixed within the event
                auto goals = sampler.sample_goal_set(
                    hp.value_sampler, params.grad_goal_count, grad_rng);
                auto grads =
                    params.algo == Algo::hiql
                        ? goal_gradients(learner.hiql, maze, batch, goals)
                        : goal_gradients(learner.qrl, maze, batch, goals);
                auto pk = pairwise_kappa(grads);
                res.grads.push_back({ctx, std::move(pk.kappas)});

                auto pbatch = sample_policy_batch(sampler, hp.actor_sampler,
                                                  hp.batch, hp.subgoal_steps,
                                                  grad_rng);
                auto agoals = sampler.sample_goal_set(
                    hp.actor_sampler, params.grad_goal_count, grad_rng);
                std::vector<Gradient> agrads;
                agrads.reserve(agoals.size());
                for (Cell g : agoals)
                  agrads.push_back(
                      params.algo == Algo::hiql
                          ? hiql_actor_grad_for_goal(learner.hiql, maze, pbatch, g)
                          : qrl_actor_grad_for_goal(learner.qrl, maze, pbatch, g));
                auto apk = pairwise_kappa(agrads);
                GradContext actx{config.id, job.seed, phase, global_step,
                                 "actor"};
                res.grads.push_back({actx, std::move(apk.kappas)});
              } catch (const std::exception&) {
                // event skipped (degenerate gradients); training continues
              }
            }
          }

          PhaseEvalRecord rec;
          rec.config_id = config.id;
          rec.seed = job.seed;
          rec.phase = phase;
          if (!res.diverged) {
            try {
              auto ev = evaluate(learner_policy(learner, maze), maze,
                                 eval_goals, params.episodes_per_goal,
                                 eval_seed);
              rec.success_ratio = ev.success_ratio;
              rec.distance_return = ev.distance_return;
            } catch (const NumericError&) {
              res.diverged = true;
            }
          }
          if (res.diverged) {
            rec.success_ratio = 0.0;
            rec.distance_return = 0.0;  // no progress: s_T treated as s_0
          }
          res.eval = rec;
          write_file(phase_dir / ckpt_name(config.id, job.seed),
                     learner_to_bytes(learner));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!worker_error) worker_error = std::current_exception();
          return;
        }
      }
    };

    {
      std::vector<std::thread> pool;
      for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);

    // Deterministic write order: jobs are already (config, seed) sorted.
    std::map<int, std::vector<double>> success_by_config;
    std::ostringstream eval_out, grads_out;
    nlohmann::ordered_json hashes_json;
    auto& hash_entries = hashes_json["entries"] = nlohmann::json::array();
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
      const auto& res = results[ji];
      eval_out << eval_record_json(res.eval, res.diverged).dump() << "\n";
      success_by_config[res.eval.config_id].push_back(res.eval.success_ratio);
      for (const auto& gs : res.grads) {
        nlohmann::ordered_json j;
        j["config_id"] = gs.context.config_id;
        j["seed"] = gs.context.seed;
        j["phase"] = gs.context.phase;
        j["step"] = gs.context.step;
        j["tag"] = gs.context.network_tag;
        j["kappas"] = gs.kappas;
        grads_out << j.dump() << "\n";
      }
      hash_entries.push_back({res.eval.config_id, res.eval.seed,
                              hash_hex(res.start_hash)});
    }

    const int selected = select_best_config(success_by_config);
    log.chosen.push_back(selected);
    for (std::size_t ji = 0; ji < jobs.size(); ++ji)
      log.records.push_back(results[ji].eval);

    write_file(phase_dir / "eval.jsonl", eval_out.str());
    write_file(phase_dir / "grads.jsonl", grads_out.str());
    write_file(phase_dir / "start_hashes.json", hashes_json.dump(2) + "\n");
    nlohmann::ordered_json sel;
    sel["phase"] = phase;
    sel["selected_config"] = selected;
    auto& arr = sel["iqm_success"] = nlohmann::json::array();
    for (const auto& [config, successes] : success_by_config) {
      auto copy = successes;
      arr.push_back({config, iqm(copy)});
    }
    write_file(phase_dir / "selection.json", sel.dump(2) + "\n");

    for (int k = 0; k < params.n_seeds; ++k)
      lineage[k] = read_file(phase_dir / ckpt_name(selected, k));

    if (!params.keep_all_checkpoints) {
      for (const auto& c : configs) {
        if (c.id == selected) continue;
        for (int k = 0; k < params.n_seeds; ++k)
          fs::remove(phase_dir / ckpt_name(c.id, k));
      }
    }

    // completion marker carries the hashes of everything the phase produced
    nlohmann::ordered_json marker;
    auto& files = marker["files"] = nlohmann::ordered_json::object();
    std::vector<std::string> names = {"dataset.jsonl", "eval.jsonl",
                                      "grads.jsonl", "start_hashes.json",
                                      "selection.json"};
    for (const auto& c : configs) {
      if (!params.keep_all_checkpoints && c.id != selected) continue;
      for (int k = 0; k < params.n_seeds; ++k)
        names.push_back(ckpt_name(c.id, k));
    }
    for (const auto& n : names)
      files[n] = hash_hex(file_hash(phase_dir / n));
    write_file(complete_marker, marker.dump(2) + "\n");

    if (params.stop_after_phase == phase) return log;
  }

  // consolidated evaluation log across phases
  std::ostringstream all;
  for (int phase = 1; phase <= P; ++phase)
    all << read_file(root / ("phase" + std::to_string(phase)) / "eval.jsonl");
  write_file(root / "eval.jsonl", all.str());
  return log;
}

}  // namespace gclab
