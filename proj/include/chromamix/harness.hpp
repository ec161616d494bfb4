#ifndef CHROMAMIX_HARNESS_HPP_
#define CHROMAMIX_HARNESS_HPP_

// Experiment orchestration: single runs, seed sets, phase sweeps, transfer
// evaluation from checkpoints, and plot-ready data export.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chromamix/checkpoint.hpp"
#include "chromamix/config.hpp"
#include "chromamix/env.hpp"
#include "chromamix/metrics.hpp"
#include "chromamix/ppo.hpp"
#include "chromamix/report.hpp"

namespace chromamix {

namespace fs = std::filesystem;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent streams for the environment and the learner of one run.
inline std::uint64_t env_seed_for(std::uint64_t run_seed) { return splitmix64(2 * run_seed + 1); }
inline std::uint64_t train_seed_for(std::uint64_t run_seed) { return splitmix64(2 * run_seed + 2); }

/// Output root: explicit flag, then the spec's `out`, then $CHROMAMIX_OUT, then "runs".
inline fs::path resolve_output_root(const std::string& flag, const std::string& spec_out = {}) {
  if (!flag.empty()) return flag;
  if (!spec_out.empty()) return spec_out;
  if (const char* env = std::getenv("CHROMAMIX_OUT"); env && *env) return env;
  return "runs";
}

/// Manifest for one seed: the resolved spec restricted to that seed, plus
/// run metadata. Feeding it back to `train` reproduces the run.
inline std::string manifest_text(const ExperimentSpec& spec, std::uint64_t seed) {
  ExperimentSpec one = spec;
  one.seeds = {seed};
  one.output_dir.clear();
  std::string s = format_spec(one);
  s += "run.seed = " + std::to_string(seed) + "\n";
  s += "run.env_seed = " + std::to_string(env_seed_for(seed)) + "\n";
  s += "run.train_seed = " + std::to_string(train_seed_for(seed)) + "\n";
  s += std::string("run.code_version = ") + kCodeVersion + "\n";
  return s;
}

/// Metrics that tolerate curves too short for every statistic.
struct MetricsOutcome {
  std::optional<CurveMetrics> metrics;
  std::string error;
};

inline MetricsOutcome try_curve_metrics(const TrainingCurve& curve) {
  try {
    return {curve_metrics(curve), {}};
  } catch (const std::exception& e) {
    return {std::nullopt, e.what()};
  }
}

inline Json metrics_outcome_json(const MetricsOutcome& m, std::optional<double> cs = std::nullopt) {
  if (m.metrics) return metrics_json(*m.metrics, cs);
  Json j;
  j["fp"] = nullptr;
  j["t75"] = nullptr;
  j["cv"] = nullptr;
  j["nm"] = nullptr;
  j["cs"] = nullptr;
  j["error"] = m.error;
  return j;
}

struct RunResult {
  std::uint64_t seed = 0;
  fs::path dir;
  TrainingCurve curve;
  MetricsOutcome metrics;
  std::optional<TransferReport> transfer;
};

inline TransferReport run_transfer(const PolicyValueNet& net, const ExperimentSpec& spec) {
  const std::size_t expected = observation_size(spec.env);
  if (net.shape().inputs != expected) {
    throw std::invalid_argument("incompatible observation shapes: checkpoint expects " +
                                std::to_string(net.shape().inputs) + " inputs, evaluation env produces " +
                                std::to_string(expected));
  }
  return evaluate_transfer(greedy_policy(net), spec.env, spec.eval.dynamics, spec.eval.targets, spec.eval.options);
}

/// Trains one seed of `spec` into `exp_dir/seed_<seed>/`.
inline RunResult run_seed(const ExperimentSpec& spec, std::uint64_t seed, const fs::path& exp_dir,
                          std::ostream* log = nullptr, std::mutex* log_mutex = nullptr) {
  RunResult r;
  r.seed = seed;
  r.dir = exp_dir / ("seed_" + std::to_string(seed));
  fs::create_directories(r.dir);

  EnvConfig env_cfg = spec.env;
  env_cfg.seed = env_seed_for(seed);
  TrainConfig train_cfg = spec.train;
  train_cfg.seed = train_seed_for(seed);
  const std::string manifest = manifest_text(spec, seed);
  write_text((r.dir / "manifest.txt").string(), manifest);

  std::ofstream csv(r.dir / "train.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + (r.dir / "train.csv").string());
  csv << kCurveHeader << '\n';
  GoalSampledEnv env(env_cfg);
  auto on_sample = [&](const CurvePoint& p, const UpdateStats&) {
    csv << curve_csv_row(p);
    csv.flush();
    if (log && log_mutex) {
      std::lock_guard lock(*log_mutex);
      *log << spec.name << " seed " << seed << " step " << p.step << " ep_rew_mean " << format_double(p.ep_rew_mean)
           << '\n';
    }
  };
  TrainResult tr = train(env, train_cfg, on_sample);
  csv.close();
  r.curve = tr.curve;

  save_checkpoint((r.dir / "checkpoint.bin").string(), Checkpoint{manifest, tr.best_net});
  save_checkpoint((r.dir / "final.bin").string(), Checkpoint{manifest, tr.final_net});

  r.metrics = try_curve_metrics(r.curve);
  write_text((r.dir / "metrics.json").string(), metrics_outcome_json(r.metrics).dump(2) + "\n");

  if (spec.eval.enabled) {
    r.transfer = run_transfer(tr.best_net, spec);
    write_text((r.dir / "transfer.json").string(), transfer_json(*r.transfer).dump(2) + "\n");
    write_text((r.dir / "transfer.csv").string(), transfer_csv(*r.transfer));
  }
  return r;
}

/// Runs `jobs` on up to `parallel` threads; the first exception is rethrown.
inline void run_jobs(std::size_t count, int parallel, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::clamp<std::size_t>(parallel < 1 ? 1 : parallel, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct ExperimentResult {
  fs::path dir;
  std::vector<RunResult> runs;
  std::optional<CurveMetrics> mean_metrics;
  double fp_std = 0.0;
};

inline ExperimentResult summarize_runs(fs::path dir, std::vector<RunResult> runs) {
  ExperimentResult ex;
  ex.dir = std::move(dir);
  ex.runs = std::move(runs);
  std::vector<CurveMetrics> ok;
  for (const auto& r : ex.runs) {
    if (r.metrics.metrics) ok.push_back(*r.metrics.metrics);
  }
  if (!ok.empty()) {
    ex.mean_metrics = average_metrics(ok);
    double s = 0.0;
    for (const auto& m : ok) s += (m.fp - ex.mean_metrics->fp) * (m.fp - ex.mean_metrics->fp);
    ex.fp_std = std::sqrt(s / static_cast<double>(ok.size()));
  }
  return ex;
}

inline Json experiment_summary_json(const ExperimentResult& ex, std::optional<double> cs = std::nullopt) {
  Json j;
  j["seeds"] = Json::array();
  for (const auto& r : ex.runs) {
    Json s = metrics_outcome_json(r.metrics);
    s["seed"] = r.seed;
    j["seeds"].push_back(s);
  }
  j["mean"] = ex.mean_metrics ? metrics_json(*ex.mean_metrics, cs) : Json(nullptr);
  j["fp_std"] = ex.fp_std;
  return j;
}

/// Trains every seed of the spec under `root/<name>/`.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const fs::path& root, int parallel = 1,
                                       std::ostream* log = nullptr) {
  const fs::path dir = root / spec.name;
  fs::create_directories(dir);
  std::vector<RunResult> runs(spec.seeds.size());
  std::mutex log_mutex;
  run_jobs(spec.seeds.size(), parallel,
           [&](std::size_t i) { runs[i] = run_seed(spec, spec.seeds[i], dir, log, &log_mutex); });
  ExperimentResult ex = summarize_runs(dir, std::move(runs));
  write_text((dir / "summary.json").string(), experiment_summary_json(ex).dump(2) + "\n");
  return ex;
}

// ---------------------------------------------------------------------------
// Phase sweeps

struct PhaseConfig {
  std::string id;
  ExperimentSpec spec;
};

/// Tested configurations of each optimization phase.
inline std::vector<PhaseConfig> phase_configs(int phase) {
  auto base = [](const std::string& id) {
    ExperimentSpec s;
    s.name = id;
    s.env.noise_std = {2.0, 2.0, 2.0};
    s.env.adv_enabled = true;
    s.env.adv_prob = 0.8;
    s.env.include_target = true;
    s.env.state_variant = 4;
    s.env.reward = RewardId::kR1;
    return s;
  };
  std::vector<PhaseConfig> out;
  switch (phase) {
    case 1:
      for (bool target : {true, false}) {
        for (int state = 0; state <= 4; ++state) {
          for (RewardId reward : {RewardId::kR1, RewardId::kR2, RewardId::kR3}) {
            const std::string id = std::string("p1_target-") + (target ? "yes" : "no") + "_state" +
                                   std::to_string(state) + "_" + to_string(reward);
            ExperimentSpec s = base(id);
            s.env.dynamics = DynamicsModel::kLerp;
            s.env.horizon = 20;
            s.env.tolerance = 10.0;
            s.env.include_target = target;
            s.env.state_variant = state;
            s.env.reward = reward;
            s.train.total_steps = 500000;
            out.push_back({id, s});
          }
        }
      }
      break;
    case 2:
      for (int horizon : {5, 10, 20, 30}) {
        for (double tau : {2.5, 5.0, 7.5}) {
          const std::string id = "p2_T" + std::to_string(horizon) + "_tau" + format_double(tau);
          ExperimentSpec s = base(id);
          s.env.dynamics = DynamicsModel::kLerp;
          s.env.horizon = horizon;
          s.env.tolerance = tau;
          s.train.total_steps = 250000;
          out.push_back({id, s});
        }
      }
      break;
    case 3:
      for (int state : {2, 3, 4}) {
        for (RewardId reward : {RewardId::kR1, RewardId::kR2}) {
          const std::string id = "p3_KM_state" + std::to_string(state) + "_" + to_string(reward);
          ExperimentSpec s = base(id);
          s.env.dynamics = DynamicsModel::kKm;
          s.env.horizon = 5;
          s.env.tolerance = 7.5;
          s.env.state_variant = state;
          s.env.reward = reward;
          s.train.total_steps = 500000;
          out.push_back({id, s});
        }
      }
      {
        const std::string id = "p3_final_WGM_state4_R1";
        ExperimentSpec s = base(id);
        s.env.dynamics = DynamicsModel::kWgm;
        s.env.horizon = 5;
        s.env.tolerance = 7.5;
        s.train.total_steps = 500000;
        out.push_back({id, s});
      }
      break;
    default:
      throw std::invalid_argument("phase must be 1, 2 or 3");
  }
  return out;
}

struct SweepOptions {
  std::optional<long long> total_steps;  // desk-scale override
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int parallel = 1;
  std::ostream* log = nullptr;
};

struct SweepRow {
  std::string id;
  ExperimentResult result;
  std::optional<double> cs;
};

/// Table rows ranked by composite score (best first; unscored rows last).
inline std::string comparison_csv(const std::vector<SweepRow>& rows) {
  std::string s = "config_id,fp,fp_std,cv,t75,nm,cs\n";
  for (const auto& r : rows) {
    s += r.id;
    if (r.result.mean_metrics) {
      const CurveMetrics& m = *r.result.mean_metrics;
      s += "," + format_double(m.fp) + "," + format_double(r.result.fp_std) + "," + format_double(m.cv) + "," +
           (m.t75 ? std::to_string(*m.t75) : std::string("--")) + "," + format_double(m.nm) + "," +
           (r.cs ? format_double(*r.cs) : std::string("--"));
    } else {
      s += ",--,--,--,--,--,--";
    }
    s += "\n";
  }
  return s;
}

inline std::vector<SweepRow> phase_sweep(int phase, const fs::path& root, const SweepOptions& opt) {
  auto configs = phase_configs(phase);
  const fs::path dir = root / ("phase" + std::to_string(phase));
  fs::create_directories(dir);
  for (auto& c : configs) {
    c.spec.seeds = opt.seeds;
    if (opt.total_steps) c.spec.train.total_steps = *opt.total_steps;
  }
  // One job per (config, seed).
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    fs::create_directories(dir / configs[c].id);
    for (std::size_t s = 0; s < opt.seeds.size(); ++s) jobs.emplace_back(c, s);
  }
  std::vector<std::vector<RunResult>> runs(configs.size(), std::vector<RunResult>(opt.seeds.size()));
  std::mutex log_mutex;
  run_jobs(jobs.size(), opt.parallel, [&](std::size_t j) {
    const auto [c, s] = jobs[j];
    runs[c][s] = run_seed(configs[c].spec, opt.seeds[s], dir / configs[c].id, opt.log, &log_mutex);
  });

  std::vector<SweepRow> rows;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    rows.push_back({configs[c].id, summarize_runs(dir / configs[c].id, std::move(runs[c])), std::nullopt});
  }
  // Composite score over the configs that produced metrics.
  std::vector<CurveMetrics> scored;
  std::vector<std::size_t> scored_idx;
  long long total_steps = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    total_steps = std::max(total_steps, configs[i].spec.train.total_steps);
    if (rows[i].result.mean_metrics) {
      scored.push_back(*rows[i].result.mean_metrics);
      scored_idx.push_back(i);
    }
  }
  if (scored.size() >= 2) {
    const auto cs = composite_score(scored, total_steps);
    for (std::size_t k = 0; k < cs.size(); ++k) rows[scored_idx[k]].cs = cs[k];
  }
  for (const auto& r : rows) {
    write_text((r.result.dir / "summary.json").string(), experiment_summary_json(r.result, r.cs).dump(2) + "\n");
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.cs.has_value() != b.cs.has_value()) return a.cs.has_value();
    return a.cs.value_or(0.0) > b.cs.value_or(0.0);
  });
  write_text((dir / "comparison.csv").string(), comparison_csv(rows));
  return rows;
}

// ---------------------------------------------------------------------------
// Transfer from a stored checkpoint

/// Combines a checkpoint manifest with an evaluation overlay (any spec keys,
/// typically eval.*); overlay values win. Evaluation is always enabled.
inline ExperimentSpec merge_eval_spec(const std::string& manifest, const std::string& overlay) {
  KeyValues kv = parse_kv(manifest);
  for (const auto& [k, v] : parse_kv(overlay)) kv[k] = v;
  kv["eval.enabled"] = "true";
  return parse_spec(kv);
}

// ---------------------------------------------------------------------------
// Plot data

namespace detail {

inline std::vector<fs::path> seed_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0 &&
        fs::exists(e.path() / "train.csv")) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Writes plot-ready CSV series for each input (a run directory with seed_*
/// subdirectories, a single seed directory, or a phase directory with
/// comparison.csv). Returns the files written.
inline std::vector<fs::path> export_plot_data(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  if (inputs.empty()) throw std::invalid_argument("plot needs at least one run artifact");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const fs::path& in : inputs) {
    const std::string name = fs::absolute(in).lexically_normal().filename().string().empty()
                                 ? fs::absolute(in).lexically_normal().parent_path().filename().string()
                                 : fs::absolute(in).lexically_normal().filename().string();
    if (fs::exists(in / "comparison.csv")) {
      std::istringstream csv(read_text((in / "comparison.csv").string()));
      std::string line, out = "config_id,metric,value\n";
      std::getline(csv, line);
      static const char* kCols[] = {"fp", "fp_std", "cv", "t75", "nm", "cs"};
      while (std::getline(csv, line)) {
        const auto parts = detail::split(line, ',');
        if (parts.size() != 7) continue;
        for (int c = 0; c < 6; ++c) {
          if (parts[c + 1] == "--") continue;
          out += parts[0] + "," + kCols[c] + "," + parts[c + 1] + "\n";
        }
      }
      const fs::path f = out_dir / (name + "_bars.csv");
      write_text(f.string(), out);
      written.push_back(f);
      continue;
    }

    std::vector<std::pair<std::string, TrainingCurve>> series;
    if (fs::exists(in / "train.csv")) {
      series.emplace_back(name, parse_curve_csv(read_text((in / "train.csv").string())));
    } else {
      for (const auto& d : detail::seed_dirs(in)) {
        series.emplace_back(d.filename().string(), parse_curve_csv(read_text((d / "train.csv").string())));
      }
    }
    if (series.empty()) throw std::runtime_error("no training curves under '" + in.string() + "'");

    std::string curves = "series,step,ep_rew_mean\n";
    for (const auto& [label, curve] : series) {
      for (const auto& p : curve) curves += label + "," + std::to_string(p.step) + "," + format_double(p.ep_rew_mean) + "\n";
    }
    const fs::path cf = out_dir / (name + "_curves.csv");
    write_text(cf.string(), curves);
    written.push_back(cf);

    if (series.size() > 1) {
      // Mean and std across seeds at the steps every seed logged.
      std::map<long long, std::vector<double>> by_step;
      for (const auto& [label, curve] : series) {
        for (const auto& p : curve) by_step[p.step].push_back(p.ep_rew_mean);
      }
      std::string band = "step,mean,std,lower,upper\n";
      for (const auto& [step, values] : by_step) {
        if (values.size() != series.size()) continue;
        const double m = detail::mean(values);
        const double sd = detail::population_std(values);
        band += std::to_string(step) + "," + format_double(m) + "," + format_double(sd) + "," +
                format_double(m - sd) + "," + format_double(m + sd) + "\n";
      }
      const fs::path bf = out_dir / (name + "_band.csv");
      write_text(bf.string(), band);
      written.push_back(bf);
    }
  }
  return written;
}

}  // namespace chromamix

#endif  // CHROMAMIX_HARNESS_HPP_
