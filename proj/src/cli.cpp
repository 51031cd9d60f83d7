#include "sdgzsl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "sdgzsl/binary_io.hpp"
#include "sdgzsl/dataset.hpp"
#include "sdgzsl/discriminator.hpp"
#include "sdgzsl/pipeline.hpp"
#include "sdgzsl/semantic_map.hpp"

namespace sdgzsl::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GenOptions {
  SyntheticSpec spec;
  std::string out;
};

struct TrainOptions {
  std::string data;
  std::string out;
  TrainConfig cfg;
  std::vector<std::size_t> hidden;
  bool linear = false;
  std::string activation = "relu";
  double holdout = 0.0;
};

struct EvalOptions {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string strategy = "all";
  bool sweep = false;
  double lambda = 1.0;
  std::string calibrate_on = "train";
  unsigned threads = 1;
};

int cmd_gen(const GenOptions& o, std::ostream& out) {
  if (auto problems = spec_violations(o.spec); !problems.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  const GzslDataset ds = generate_synthetic(o.spec);
  save_dataset(ds, o.out);
  out << "wrote " << o.out << ": d=" << ds.feature_dim() << " S=" << ds.semantic_dim() << " C_s="
      << ds.num_seen_classes() << " C_u=" << ds.num_unseen_classes() << " seen_train=" << ds.seen_train.size()
      << " seen_test=" << ds.seen_test.size() << " unseen_test=" << ds.unseen_test.size()
      << " l=" << ds.unified_norm_l << "\n";
  return kExitOk;
}

int cmd_train(TrainOptions o, std::ostream& out) {
  if (o.linear) {
    o.cfg.hidden_sizes = std::vector<std::size_t>{};
  } else if (!o.hidden.empty()) {
    o.cfg.hidden_sizes = o.hidden;
  }
  o.cfg.hidden_activation = parse_activation(o.activation);
  if (auto problems = config_violations(o.cfg); !problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }

  const GzslDataset ds = load_dataset(o.data);
  const auto [kept, held] = split_holdout(ds.seen_train, o.holdout);
  if (kept.size() == 0) throw ValidationError("holdout leaves no training instances");
  const TrainResult result = train(kept.features, gather_targets(kept, ds.seen_embeddings), o.cfg);

  fs::create_directories(o.out);
  Checkpoint ckpt{result.params, o.cfg.seed, ds.unified_norm_l, o.holdout};
  save_checkpoint(fs::path(o.out) / "model.ckpt", ckpt);

  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) csv << e + 1 << "," << fmt(result.loss_history[e]) << "\n";
  io::write_file(fs::path(o.out) / "loss.csv", csv.str());

  std::ostringstream summary;
  summary << "data=" << o.data << "\n";
  summary << "learning_rate=" << fmt(o.cfg.learning_rate) << "\n";
  summary << "epochs=" << o.cfg.epochs << "\n";
  summary << "batch_size=" << o.cfg.batch_size << "\n";
  summary << "seed=" << o.cfg.seed << "\n";
  summary << "layers=";
  for (std::size_t k = 0; k < result.params.layers.size(); ++k) {
    const auto& l = result.params.layers[k];
    summary << (k ? "," : "") << l.in_dim() << "x" << l.out_dim() << ":" << activation_name(l.activation);
  }
  summary << "\nholdout=" << fmt(o.holdout) << "\n";
  summary << "train_instances=" << kept.size() << "\n";
  summary << "final_loss=" << fmt(result.loss_history.back()) << "\n";
  io::write_file(fs::path(o.out) / "train.txt", summary.str());

  out << "trained " << result.params.parameter_count() << " parameters on " << kept.size()
      << " instances; final loss " << fmt(result.loss_history.back()) << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  std::vector<Strategy> strategies;
  bool with_baseline = false;
  if (o.sweep || o.strategy == "all") {
    strategies = {Strategy::OL, Strategy::DL, Strategy::WS};
    with_baseline = true;
  } else {
    strategies = {parse_strategy(o.strategy)};
  }
  if (o.calibrate_on != "train" && o.calibrate_on != "holdout") {
    throw ConfigError("--calibrate-on must be 'train' or 'holdout'");
  }

  const GzslDataset ds = load_dataset(o.data);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  if (ckpt.params.input_dim() != ds.feature_dim() || ckpt.params.output_dim() != ds.semantic_dim()) {
    throw Error("checkpoint maps " + std::to_string(ckpt.params.input_dim()) + " -> " +
                std::to_string(ckpt.params.output_dim()) + " but dataset has features " +
                shape_str(ds.seen_train.features) + " and embeddings " + shape_str(ds.seen_embeddings));
  }

  ThresholdSet th;
  if (o.calibrate_on == "holdout") {
    if (!(ckpt.holdout_fraction > 0.0)) throw ConfigError("checkpoint was trained without a holdout split");
    const auto held = split_holdout(ds.seen_train, ckpt.holdout_fraction).second;
    th = calibrate(ckpt.params, held.features, ds.seen_embeddings, ds.unified_norm_l, o.lambda);
  } else {
    th = calibrate(ckpt.params, ds, o.lambda);
  }

  std::ostringstream preamble;
  preamble << "data=" << o.data << "\n";
  preamble << "checkpoint=" << o.checkpoint << "\n";
  preamble << "strategy=" << (o.sweep ? "all" : o.strategy) << "\n";
  preamble << "lambda=" << fmt(o.lambda) << "\n";
  preamble << "calibrate_on=" << o.calibrate_on << "\n";
  preamble << "calibration_instances=" << th.sample_count << "\n";

  fs::create_directories(o.out);
  save_thresholds(fs::path(o.out) / "thresholds.txt", th);

  std::vector<EvaluationReport> reports;
  for (Strategy s : strategies) reports.push_back(evaluate(ckpt.params, th, s, ds, o.threads));
  if (with_baseline) {
    reports.push_back(evaluate(make_baseline_predictor(ckpt.params, ds.seen_embeddings, ds.unseen_embeddings), ds,
                               "baseline", o.threads));
  }
  for (const auto& r : reports) {
    const fs::path dir(o.out);
    io::write_file(dir / ("report_" + r.strategy + ".txt"), format_report_text(r, preamble.str()));
    io::write_file(dir / ("report_" + r.strategy + ".kv"), format_report_kv(r));
    io::write_file(dir / ("per_class_" + r.strategy + ".csv"), format_per_class_csv(r));
  }
  io::write_file(fs::path(o.out) / "sweep.csv", format_sweep_csv(reports));

  char line[160];
  std::snprintf(line, sizeof line, "%-9s %8s %8s %8s %10s %9s\n", "strategy", "acc_S", "acc_U", "H", "gate_bal", "time_s");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-9s %8.4f %8.4f %8.4f %10.4f %9.4f\n", r.strategy.c_str(), r.acc_s, r.acc_u, r.h,
                  r.balanced_gate_accuracy(), r.runtime_seconds);
    out << line;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic-discriminator gating for generalized zero-shot learning"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic GZSL dataset directory");
  gen_cmd->add_option("--seen", gen.spec.n_seen_classes, "Number of seen classes (>= 2)")->capture_default_str();
  gen_cmd->add_option("--unseen", gen.spec.n_unseen_classes, "Number of unseen classes")->capture_default_str();
  gen_cmd->add_option("--dim", gen.spec.feature_dim, "Feature dimension d")->capture_default_str();
  gen_cmd->add_option("--sem", gen.spec.semantic_dim, "Semantic dimension S")->capture_default_str();
  gen_cmd->add_option("--train-per-class", gen.spec.per_class_train, "Training instances per seen class")
      ->capture_default_str();
  gen_cmd->add_option("--test-per-class", gen.spec.per_class_test, "Test instances per class")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.spec.cluster_spread, "Gaussian noise scale")->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "PRNG seed")->capture_default_str();
  gen_cmd->add_option("--l", gen.spec.unified_norm_l, "Unified embedding norm")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the semantic mapping on seen classes");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Output directory for model.ckpt and loss.csv")->required();
  train_cmd->add_option("--epochs", tr.cfg.epochs, "Training epochs (>= 1)")->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "SGD learning rate")->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--seed", tr.cfg.seed, "Initialization and shuffle seed")->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden, "Hidden layer widths (default: one layer of max(d, S))")->delimiter(',');
  train_cmd->add_flag("--linear", tr.linear, "No hidden layer");
  train_cmd->add_option("--activation", tr.activation, "Hidden activation: relu, tanh, identity")->capture_default_str();
  train_cmd->add_option("--holdout", tr.holdout, "Fraction of seen_train withheld for calibration")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Calibrate thresholds and evaluate gating strategies");
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--out", ev.out, "Report output directory")->required();
  eval_cmd->add_option("--strategy", ev.strategy, "ol, dl, ws or all")->capture_default_str();
  eval_cmd->add_flag("--sweep", ev.sweep, "Evaluate ol, dl, ws and the no-gate baseline");
  eval_cmd->add_option("--lambda", ev.lambda, "Weight of MSD in the weighted-sum gate")->capture_default_str();
  eval_cmd->add_option("--calibrate-on", ev.calibrate_on, "train or holdout")->capture_default_str();
  eval_cmd->add_option("--threads", ev.threads, "Evaluation threads")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (train_cmd->parsed()) return cmd_train(tr, out);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
  } catch (const ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sdgzsl::cli
