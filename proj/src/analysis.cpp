#include "gclab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "gclab/gp_surface.hpp"
#include "gclab/importance.hpp"
#include "json.hpp"

namespace gclab {

namespace fs = std::filesystem;

const char* metric_name(ScoreMetric m) {
  return m == ScoreMetric::success ? "success_ratio" : "distance_return";
}

RunData load_run(const std::string& run_dir, bool verify_hashes) {
  const fs::path root(run_dir);
  RunData run;
  run.manifest = RunManifest::from_json(
      nlohmann::json::parse(read_file(root / "manifest.json")));
  run.space = ConfigSpace::parse(read_file(root / "space.txt"));
  run.configs = configs_from_jsonl(run.space, read_file(root / "configs.jsonl"));
  auto plan_json = nlohmann::json::parse(read_file(root / "plan.json"));
  run.plan.boundaries =
      plan_json.at("boundaries").get<std::vector<std::int64_t>>();
  run.plan.validate();

  if (verify_hashes) {
    const std::string configs_text = read_file(root / "configs.jsonl");
    if (hash_hex(fnv1a(configs_text.data(), configs_text.size())) !=
        run.manifest.config_set_hash)
      throw IntegrityError("load_run: configs.jsonl hash mismatch");
  }

  const int P = run.plan.phases();
  for (int phase = 1; phase <= P; ++phase) {
    const fs::path phase_dir = root / ("phase" + std::to_string(phase));
    if (!fs::exists(phase_dir / "_COMPLETE"))
      throw IntegrityError("load_run: phase " + std::to_string(phase) +
                           " incomplete");
    if (verify_hashes) {
      const std::string ds = read_file(phase_dir / "dataset.jsonl");
      if (hash_hex(fnv1a(ds.data(), ds.size())) !=
          run.manifest.dataset_hashes[phase - 1])
        throw IntegrityError("load_run: dataset hash mismatch in phase " +
                             std::to_string(phase));
      auto marker =
          nlohmann::json::parse(read_file(phase_dir / "_COMPLETE"));
      for (const auto& [name, hash] : marker.at("files").items()) {
        const fs::path p = phase_dir / name;
        if (!fs::exists(p) || hash_hex(file_hash(p)) != hash.get<std::string>())
          throw IntegrityError("load_run: artifact hash mismatch: " +
                               p.string());
      }
    }

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
      run.records.push_back(r);
    }
    std::istringstream grads(read_file(phase_dir / "grads.jsonl"));
    while (std::getline(grads, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      GradSample s;
      s.context.config_id = j.at("config_id").get<int>();
      s.context.seed = j.at("seed").get<int>();
      s.context.phase = j.at("phase").get<int>();
      s.context.step = j.at("step").get<std::int64_t>();
      s.context.network_tag = j.at("tag").get<std::string>();
      s.kappas = j.at("kappas").get<std::vector<double>>();
      run.grad_samples.push_back(std::move(s));
    }
    auto sel = nlohmann::json::parse(read_file(phase_dir / "selection.json"));
    run.chosen.push_back(sel.at("selected_config").get<int>());
  }
  return run;
}

std::vector<PhaseScores> phase_scores(const RunData& run, ScoreMetric metric) {
  const int P = run.plan.phases();
  std::vector<std::map<int, std::vector<double>>> per_phase(P);
  for (const auto& r : run.records) {
    const double v = metric == ScoreMetric::success ? r.success_ratio
                                                    : r.distance_return;
    per_phase[r.phase - 1][r.config_id].push_back(v);
  }
  std::vector<PhaseScores> out(P);
  for (int p = 0; p < P; ++p) {
    out[p].phase = p + 1;
    for (auto& [config, values] : per_phase[p])
      out[p].scores[config] = iqm(values);
  }
  return out;
}

std::map<int, double> early_regret_by_config(
    const std::vector<PhaseScores>& phases, int pick_phase) {
  if (pick_phase < 1 || pick_phase >= static_cast<int>(phases.size()) + 1)
    throw std::invalid_argument("early_regret_by_config: bad pick phase");
  std::map<int, double> out;
  for (const auto& [config, _] : phases[pick_phase - 1].scores) {
    double acc = 0.0;
    int count = 0;
    for (std::size_t t = pick_phase; t < phases.size(); ++t) {
      acc += early_regret(phases[t], config);
      ++count;
    }
    if (count > 0) out[config] = acc / count;
  }
  return out;
}

std::map<std::pair<int, int>, double> critic_tail_mass_by_phase_seed(
    const RunData& run) {
  std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& s : run.grad_samples) {
    if (s.context.network_tag != "critic") continue;
    auto& [neg, total] = counts[{s.context.phase, s.context.seed}];
    for (double k : s.kappas) {
      if (k < 0.0) ++neg;
      ++total;
    }
  }
  std::map<std::pair<int, int>, double> out;
  for (const auto& [key, nt] : counts)
    if (nt.second > 0) out[key] = double(nt.first) / double(nt.second);
  return out;
}

namespace {

struct Exclusions {
  CsvWriter csv{{"table", "context", "reason"}};
  int count = 0;
  void add(const std::string& table, const std::string& context,
           const std::string& reason) {
    csv.row({table, context, reason});
    ++count;
  }
};

std::string fmt_phase_pair(int a, int b) {
  return std::to_string(a) + "->" + std::to_string(b);
}

}  // namespace

void write_reports(const RunData& run, const std::string& out_dir) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const int P = run.plan.phases();
  Exclusions excl;

  // ---- landscape geometry tables, per metric ----
  CsvWriter land({"metric", "phase", "rho_0.9", "rho_0.8", "mean_f", "max_f"});
  CsvWriter drift({"metric", "transition", "drift"});
  CsvWriter regret({"metric", "pick_phase", "mean_regret"});
  CsvWriter overlap({"metric", "transition", "top10_overlap"});
  CsvWriter across({"metric", "across_phase_change"});
  for (ScoreMetric metric :
       {ScoreMetric::success, ScoreMetric::distance_return}) {
    const auto scores = phase_scores(run, metric);
    const char* mname = metric_name(metric);
    for (int p = 0; p < P; ++p) {
      double mx = -INFINITY, mean = 0.0;
      for (const auto& [_, v] : scores[p].scores) {
        mx = std::max(mx, v);
        mean += v / double(scores[p].scores.size());
      }
      std::string r09 = "NA", r08 = "NA";
      try {
        r09 = CsvWriter::num(epsilon_mass(scores[p], 0.9));
        r08 = CsvWriter::num(epsilon_mass(scores[p], 0.8));
      } catch (const UndefinedMetricError& e) {
        excl.add("landscape", std::string(mname) + " phase " +
                                  std::to_string(p + 1),
                 e.what());
      }
      land.row({mname, std::to_string(p + 1), r09, r08, CsvWriter::num(mean),
                CsvWriter::num(mx)});
    }
    std::vector<double> drifts;
    for (int p = 0; p + 1 < P; ++p) {
      std::string cell = "NA";
      try {
        const double d = phase_drift(scores[p], scores[p + 1]);
        drifts.push_back(d);
        cell = CsvWriter::num(d);
      } catch (const UndefinedMetricError& e) {
        excl.add("drift", std::string(mname) + " " + fmt_phase_pair(p + 1, p + 2),
                 e.what());
      }
      drift.row({mname, fmt_phase_pair(p + 1, p + 2), cell});
    }
    if (drifts.size() == static_cast<std::size_t>(P - 1)) {
      double acc = 0.0;
      for (double d : drifts) acc += d / drifts.size();
      across.row({mname, CsvWriter::num(acc)});
    } else {
      across.row({mname, "NA"});
    }
    for (int pick = 1; pick < P; ++pick) {
      try {
        auto by_config = early_regret_by_config(scores, pick);
        double mean = 0.0;
        for (const auto& [_, v] : by_config) mean += v / by_config.size();
        regret.row({mname, std::to_string(pick), CsvWriter::num(mean)});
      } catch (const UndefinedMetricError& e) {
        excl.add("regret", std::string(mname) + " pick " + std::to_string(pick),
                 e.what());
        regret.row({mname, std::to_string(pick), "NA"});
      }
    }
    for (int p = 0; p + 1 < P; ++p)
      overlap.row({mname, fmt_phase_pair(p + 1, p + 2),
                   CsvWriter::num(optimum_overlap(scores[p], scores[p + 1]))});
  }

  // ---- fANOVA importances on the success response ----
  CsvWriter imp({"phase", "dim", "importance"});
  CsvWriter stab({"phase_pair", "cosine_distance", "perplexity_t",
                  "perplexity_t1", "weighted_tau"});
  const auto success_scores = phase_scores(run, ScoreMetric::success);
  std::vector<std::vector<double>> vectors(P);
  for (int p = 0; p < P; ++p) {
    std::vector<double> ys;
    std::vector<Configuration> xs;
    for (const auto& c : run.configs) {
      auto it = success_scores[p].scores.find(c.id);
      if (it == success_scores[p].scores.end()) continue;
      xs.push_back(c);
      ys.push_back(it->second);
    }
    try {
      auto v = fanova(xs, ys, run.space, kFanovaDefaultTrees,
                      substream(run.manifest.root_seed, "fanova",
                                {static_cast<std::uint64_t>(p + 1)}));
      vectors[p] = v.importances;
      for (int j = 0; j < run.space.size(); ++j)
        imp.row({std::to_string(p + 1), run.space.dim(j).name,
                 CsvWriter::num(v.importances[j])});
    } catch (const std::exception& e) {
      excl.add("importance", "phase " + std::to_string(p + 1), e.what());
    }
  }
  for (int p = 0; p + 1 < P; ++p) {
    if (vectors[p].empty() || vectors[p + 1].empty()) {
      excl.add("importance_stability", fmt_phase_pair(p + 1, p + 2),
               "importances undefined for one of the phases");
      continue;
    }
    stab.row({fmt_phase_pair(p + 1, p + 2),
              CsvWriter::num(
                  importance_cosine_distance(vectors[p], vectors[p + 1])),
              CsvWriter::num(importance_perplexity(vectors[p])),
              CsvWriter::num(importance_perplexity(vectors[p + 1])),
              CsvWriter::num(weighted_kendall_tau(vectors[p], vectors[p + 1]))});
  }

  // ---- gradient interference tables ----
  const auto dr_scores = phase_scores(run, ScoreMetric::distance_return);
  std::map<int, double> regret_pick1;
  try {
    regret_pick1 = early_regret_by_config(dr_scores, 1);
  } catch (const std::exception& e) {
    excl.add("grad_correlation", "regret pick phase 1", e.what());
  }
  CsvWriter cdf({"phase", "tag", "abscissa", "cdf"});
  CsvWriter gsum(
      {"phase", "tag", "count", "p_negative", "p_below_-0.5", "mean", "std"});
  CsvWriter gcfg({"config_id", "kappa_std", "early_regret_pick1"});
  CsvWriter gcorr({"pearson_kappa_std_vs_regret", "n_configs"});
  if (!run.grad_samples.empty()) {
    auto summary = summarize(run.grad_samples, regret_pick1);
    const auto xs = cdf_abscissae();
    for (const auto& g : summary.groups) {
      for (std::size_t i = 0; i < xs.size(); ++i)
        cdf.row({std::to_string(g.phase), g.tag, CsvWriter::num(xs[i]),
                 CsvWriter::num(g.cdf[i])});
      gsum.row({std::to_string(g.phase), g.tag, std::to_string(g.count),
                CsvWriter::num(g.p_negative),
                CsvWriter::num(g.p_below_neg_half), CsvWriter::num(g.mean),
                CsvWriter::num(g.stdev)});
    }
    for (const auto& [config, sd, reg] : summary.per_config)
      gcfg.row({std::to_string(config), CsvWriter::num(sd),
                CsvWriter::num(reg)});
    if (summary.pearson_std_regret)
      gcorr.row({CsvWriter::num(*summary.pearson_std_regret),
                 std::to_string(summary.per_config.size())});
  }

  write_file(out / "landscape_metrics.csv", land.str());
  write_file(out / "drift.csv", drift.str());
  write_file(out / "regret.csv", regret.str());
  write_file(out / "overlap.csv", overlap.str());
  write_file(out / "across_phase_change.csv", across.str());
  write_file(out / "importance.csv", imp.str());
  write_file(out / "importance_stability.csv", stab.str());
  write_file(out / "grad_cdf.csv", cdf.str());
  write_file(out / "grad_summary.csv", gsum.str());
  write_file(out / "grad_config_std.csv", gcfg.str());
  write_file(out / "grad_correlation.csv", gcorr.str());
  write_file(out / "exclusions.csv", excl.csv.str());
}

std::string surface_csv(const RunData& run, const std::string& dim_a,
                        const std::string& dim_b, int phase, int resolution,
                        ScoreMetric metric) {
  const int ia = run.space.index_of(dim_a);
  const int ib = run.space.index_of(dim_b);
  const auto scores = phase_scores(run, metric);
  if (phase < 1 || phase > static_cast<int>(scores.size()))
    throw std::invalid_argument("surface_csv: bad phase");
  const bool log_a = run.space.dim(ia).log_scale;
  const bool log_b = run.space.dim(ib).log_scale;

  std::vector<SurfacePoint> pts;
  for (const auto& c : run.configs) {
    auto it = scores[phase - 1].scores.find(c.id);
    if (it == scores[phase - 1].scores.end()) continue;
    SurfacePoint p;
    p.x = log_a ? std::log(c.values[ia]) : c.values[ia];
    p.y = log_b ? std::log(c.values[ib]) : c.values[ib];
    p.score = it->second;
    pts.push_back(p);
  }
  auto grid = fit_surface(pts, resolution);

  CsvWriter csv({dim_a + (log_a ? "_log" : ""), dim_b + (log_b ? "_log" : ""),
                 "prediction"});
  for (std::size_t iy = 0; iy < grid.ys.size(); ++iy)
    for (std::size_t ix = 0; ix < grid.xs.size(); ++ix)
      csv.row({CsvWriter::num(grid.xs[ix]), CsvWriter::num(grid.ys[iy]),
               CsvWriter::num(grid.z[iy * grid.xs.size() + ix])});
  return csv.str();
}

}  // namespace gclab
