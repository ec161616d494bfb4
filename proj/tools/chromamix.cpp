// chromamix: experiment runner for the color-mixing MDP study.
//
// Exit codes: 0 success, 2 invalid spec or usage, 3 training aborted, 1 other.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chromamix/chromamix.hpp"

namespace cm = chromamix;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : cm::detail::split(text, ',')) {
    seeds.push_back(cm::detail::parse_number<std::uint64_t>("--seeds", s));
  }
  return seeds;
}

void print_transfer(const cm::TransferReport& r) {
  std::cout << "train " << cm::to_string(r.train_dynamics) << " -> eval " << cm::to_string(r.eval_dynamics)
            << " (horizon " << r.horizon << ", tau " << r.tolerance << ")\n";
  std::cout << cm::transfer_csv(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chromamix - goal-conditioned color-mixing RL experiments"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train every seed of an experiment spec");
  std::string train_spec, train_out;
  std::optional<std::uint64_t> train_seed;
  int train_parallel = 1;
  bool train_quiet = false;
  train->add_option("--spec", train_spec, "Experiment spec file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Output root (default: spec 'out', $CHROMAMIX_OUT, ./runs)");
  train->add_option("--seed", train_seed, "Run only this seed");
  train->add_option("--parallel", train_parallel, "Seeds trained concurrently")->check(CLI::PositiveNumber);
  train->add_flag("--quiet", train_quiet, "No per-rollout progress");

  // phase-sweep
  auto* sweep = app.add_subcommand("phase-sweep", "Train and rank every configuration of one phase");
  int sweep_phase = 1;
  std::string sweep_out, sweep_seeds = "0,1,2";
  std::optional<long long> sweep_steps;
  int sweep_parallel = 1;
  sweep->add_option("--phase", sweep_phase, "Phase id")->required()->check(CLI::Range(1, 3));
  sweep->add_option("--out", sweep_out, "Output root");
  sweep->add_option("--steps", sweep_steps, "Override total training steps (desk scale)");
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds");
  sweep->add_option("--parallel", sweep_parallel, "Runs trained concurrently")->check(CLI::PositiveNumber);

  // transfer
  auto* transfer = app.add_subcommand("transfer", "Evaluate a checkpoint under another dynamics model");
  std::string tr_ckpt, tr_spec, tr_out;
  std::optional<int> tr_reps;
  transfer->add_option("--checkpoint", tr_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  transfer->add_option("--spec", tr_spec, "Evaluation spec overlay (eval.* keys)")->check(CLI::ExistingFile);
  transfer->add_option("--out", tr_out, "Output directory");
  transfer->add_option("--reps", tr_reps, "Repetitions per target");

  // reachability
  auto* reach = app.add_subcommand("reachability", "Minimum tolerance per target and dynamics model");
  std::string rc_models = "LERP,KM,WGM", rc_targets = "reference", rc_mode = "closest", rc_out;
  double rc_resolution = 0.001;
  reach->add_option("--models", rc_models, "Comma-separated dynamics models");
  reach->add_option("--targets", rc_targets, "'reference' or 'NAME:r,g,b; ...'");
  reach->add_option("--resolution", rc_resolution, "Simplex grid step");
  reach->add_option("--mode", rc_mode, "closest | minimax");
  reach->add_option("--out", rc_out, "Output directory");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Curve metrics for training CSVs");
  std::vector<std::string> mt_csv;
  std::optional<long long> mt_total;
  std::string mt_out;
  metrics->add_option("--csv", mt_csv, "Training CSV files")->required()->check(CLI::ExistingFile);
  metrics->add_option("--total-steps", mt_total, "Steps imputed for NOT_REACHED in CS (default: longest curve)");
  metrics->add_option("--out", mt_out, "Write JSON here as well as stdout");

  // plot
  auto* plot = app.add_subcommand("plot", "Export plot-ready CSV series");
  std::vector<std::string> pl_runs;
  std::string pl_out;
  plot->add_option("--runs", pl_runs, "Run, seed or phase directories")->required();
  plot->add_option("--out", pl_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      cm::ExperimentSpec spec = cm::load_spec(train_spec);
      if (train_seed) spec.seeds = {*train_seed};
      const fs::path root = cm::resolve_output_root(train_out, spec.output_dir);
      const auto ex = cm::run_experiment(spec, root, train_parallel, train_quiet ? nullptr : &std::cerr);
      std::cout << cm::experiment_summary_json(ex).dump(2) << '\n';
      std::cout << "artifacts: " << ex.dir.string() << '\n';
    } else if (*sweep) {
      cm::SweepOptions opt;
      opt.total_steps = sweep_steps;
      opt.seeds = parse_seed_list(sweep_seeds);
      opt.parallel = sweep_parallel;
      opt.log = &std::cerr;
      const fs::path root = cm::resolve_output_root(sweep_out);
      const auto rows = cm::phase_sweep(sweep_phase, root, opt);
      std::cout << cm::comparison_csv(rows);
    } else if (*transfer) {
      const cm::Checkpoint ckpt = cm::load_checkpoint(tr_ckpt);
      cm::ExperimentSpec spec = cm::merge_eval_spec(ckpt.manifest, tr_spec.empty() ? "" : cm::read_text(tr_spec));
      if (tr_reps) spec.eval.options.reps = *tr_reps;
      const auto report = cm::run_transfer(ckpt.net, spec);
      const fs::path out = tr_out.empty() ? fs::path(tr_ckpt).parent_path() : fs::path(tr_out);
      if (!out.empty()) fs::create_directories(out);
      cm::write_text((out / "transfer.json").string(), cm::transfer_json(report).dump(2) + "\n");
      cm::write_text((out / "transfer.csv").string(), cm::transfer_csv(report));
      print_transfer(report);
    } else if (*reach) {
      std::vector<cm::DynamicsModel> models;
      for (const auto& m : cm::detail::split(rc_models, ',')) models.push_back(cm::parse_dynamics(m));
      const auto targets = cm::parse_targets(rc_targets);
      std::vector<cm::Rgb> colors;
      for (const auto& t : targets) colors.push_back(t.color);
      const auto entries = cm::reachability_table(models, colors, rc_resolution, cm::parse_reach_mode(rc_mode));
      const fs::path out = cm::resolve_output_root(rc_out);
      fs::create_directories(out);
      const std::string csv = cm::reachability_csv(entries, targets, models);
      cm::write_text((out / "reachability.csv").string(), csv);
      cm::write_text((out / "reachability.json").string(),
                     cm::reachability_json(entries, targets, rc_resolution).dump(2) + "\n");
      std::cout << csv;
    } else if (*metrics) {
      std::vector<cm::TrainingCurve> curves;
      long long longest = 0;
      for (const auto& path : mt_csv) {
        curves.push_back(cm::parse_curve_csv(cm::read_text(path)));
        if (!curves.back().empty()) longest = std::max(longest, curves.back().back().step);
      }
      std::vector<cm::MetricsOutcome> outcomes;
      std::vector<cm::CurveMetrics> scored;
      std::vector<std::size_t> scored_idx;
      for (std::size_t i = 0; i < curves.size(); ++i) {
        outcomes.push_back(cm::try_curve_metrics(curves[i]));
        if (outcomes.back().metrics) {
          scored.push_back(*outcomes.back().metrics);
          scored_idx.push_back(i);
        }
      }
      std::vector<std::optional<double>> cs(curves.size());
      if (scored.size() >= 2) {
        const auto s = cm::composite_score(scored, mt_total.value_or(longest));
        for (std::size_t k = 0; k < s.size(); ++k) cs[scored_idx[k]] = s[k];
      }
      cm::Json j;
      if (curves.size() == 1) {
        j = cm::metrics_outcome_json(outcomes[0], cs[0]);
      } else {
        j = cm::Json::array();
        for (std::size_t i = 0; i < curves.size(); ++i) {
          cm::Json row = cm::metrics_outcome_json(outcomes[i], cs[i]);
          row["source"] = mt_csv[i];
          j.push_back(row);
        }
      }
      const std::string text = j.dump(2) + "\n";
      if (!mt_out.empty()) cm::write_text(mt_out, text);
      std::cout << text;
    } else if (*plot) {
      std::vector<fs::path> inputs(pl_runs.begin(), pl_runs.end());
      const fs::path out = pl_out.empty() ? cm::resolve_output_root("") / "plots" : fs::path(pl_out);
      for (const auto& f : cm::export_plot_data(inputs, out)) std::cout << f.string() << '\n';
    }
  } catch (const cm::TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
