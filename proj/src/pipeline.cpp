#include "sdgzsl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <mutex>
#include <thread>

namespace sdgzsl {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::size_t domain_index(GateDecision g) { return g == GateDecision::Seen ? 0 : 1; }

}  // namespace

Routing predict(const MlpParams& mapper, const ThresholdSet& th, Strategy strategy, const Vector& x,
                const EmbeddingTable& seen_embeddings, const EmbeddingTable& unseen_embeddings) {
  const Vector projected = forward(mapper, x);
  const GateStatistics stats = gate_statistics(projected, seen_embeddings, th.l);
  Routing out;
  out.gate = gate(stats, th, strategy);
  out.predicted_class = out.gate == GateDecision::Seen ? nearest_row(projected, seen_embeddings)
                                                       : nearest_row(projected, unseen_embeddings);
  return out;
}

Predictor make_sd_predictor(MlpParams mapper, ThresholdSet th, Strategy strategy, EmbeddingTable seen_embeddings,
                            EmbeddingTable unseen_embeddings) {
  strategy_tag(strategy);  // rejects out-of-range values up front
  return [mapper = std::move(mapper), th, strategy, seen = std::move(seen_embeddings),
          unseen = std::move(unseen_embeddings)](const Vector& x) {
    return predict(mapper, th, strategy, x, seen, unseen);
  };
}

Predictor make_router(MlpParams mapper, EmbeddingTable seen_embeddings, double l, GateFn gate_fn,
                      const DomainClassifier& seen_classifier, const DomainClassifier& unseen_classifier) {
  return [mapper = std::move(mapper), seen = std::move(seen_embeddings), l, gate_fn = std::move(gate_fn),
          &seen_classifier, &unseen_classifier](const Vector& x) {
    const Vector projected = forward(mapper, x);
    Routing out;
    out.gate = gate_fn(gate_statistics(projected, seen, l));
    out.predicted_class =
        out.gate == GateDecision::Seen ? seen_classifier.classify(x) : unseen_classifier.classify(x);
    return out;
  };
}

Predictor make_baseline_predictor(MlpParams mapper, EmbeddingTable seen_embeddings, EmbeddingTable unseen_embeddings) {
  if (seen_embeddings.cols() != unseen_embeddings.cols()) {
    throw ShapeError("baseline: seen table " + shape_str(seen_embeddings) + " vs unseen table " +
                     shape_str(unseen_embeddings));
  }
  EmbeddingTable joint(seen_embeddings.rows() + unseen_embeddings.rows(), seen_embeddings.cols());
  joint << seen_embeddings, unseen_embeddings;
  const auto n_seen = static_cast<std::size_t>(seen_embeddings.rows());
  return [mapper = std::move(mapper), joint = std::move(joint), n_seen](const Vector& x) {
    const std::size_t row = nearest_row(forward(mapper, x), joint);
    return row < n_seen ? Routing{GateDecision::Seen, row} : Routing{GateDecision::Unseen, row - n_seen};
  };
}

std::vector<double> per_class_top1(std::span<const Prediction> predictions, GateDecision domain, std::size_t n_classes) {
  std::vector<std::size_t> correct(n_classes, 0), total(n_classes, 0);
  for (const auto& p : predictions) {
    if (p.true_domain != domain) continue;
    if (p.true_class >= n_classes) {
      throw MetricError("per_class_top1: true class " + std::to_string(p.true_class) + " outside " +
                        std::to_string(n_classes) + " " + std::string(decision_name(domain)) + " classes");
    }
    ++total[p.true_class];
    if (p.correct()) ++correct[p.true_class];
  }
  std::vector<double> acc(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (total[c] == 0) {
      throw MetricError("per_class_top1: " + std::string(decision_name(domain)) + " class " + std::to_string(c) +
                        " has no test instances");
    }
    acc[c] = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  }
  return acc;
}

double macro_average(std::span<const double> per_class) {
  if (per_class.empty()) throw MetricError("macro_average: no classes");
  double sum = 0.0;
  for (double a : per_class) sum += a;
  return sum / static_cast<double>(per_class.size());
}

double harmonic_mean(double acc_s, double acc_u) {
  if (!(acc_s >= 0.0 && acc_s <= 1.0) || !(acc_u >= 0.0 && acc_u <= 1.0)) {
    throw DomainError("harmonic_mean: accuracies must lie in [0, 1], got " + fmt(acc_s) + " and " + fmt(acc_u));
  }
  const double denom = acc_s + acc_u;
  return denom > 0.0 ? 2.0 * acc_s * acc_u / denom : 0.0;
}

std::size_t EvaluationReport::total() const {
  return gate_confusion[0][0] + gate_confusion[0][1] + gate_confusion[1][0] + gate_confusion[1][1];
}

double EvaluationReport::seen_gate_recall() const {
  const auto n = gate_confusion[0][0] + gate_confusion[0][1];
  return n ? static_cast<double>(gate_confusion[0][0]) / static_cast<double>(n) : 0.0;
}

double EvaluationReport::unseen_gate_recall() const {
  const auto n = gate_confusion[1][0] + gate_confusion[1][1];
  return n ? static_cast<double>(gate_confusion[1][1]) / static_cast<double>(n) : 0.0;
}

double EvaluationReport::balanced_gate_accuracy() const {
  return 0.5 * (seen_gate_recall() + unseen_gate_recall());
}

EvaluationReport evaluate(const Predictor& predictor, const GzslDataset& ds, std::string strategy_name,
                          unsigned threads) {
  if (ds.seen_test.size() == 0) throw EvaluationError("evaluate: seen_test is empty");
  if (ds.unseen_test.size() == 0) throw EvaluationError("evaluate: unseen_test is empty");
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n_seen = ds.seen_test.size();
  const std::size_t n = n_seen + ds.unseen_test.size();
  std::vector<Prediction> preds(n);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const bool seen = i < n_seen;
      const LabeledSplit& split = seen ? ds.seen_test : ds.unseen_test;
      const std::size_t row = seen ? i : i - n_seen;
      const Vector x = split.features.row(static_cast<Eigen::Index>(row)).transpose();
      const Routing r = predictor(x);
      preds[i] = {r.gate, r.predicted_class, seen ? GateDecision::Seen : GateDecision::Unseen, split.labels[row]};
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    run_range(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk, end = std::min(n, begin + chunk);
      pool.emplace_back([&, begin, end] {
        try {
          run_range(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  EvaluationReport rep;
  rep.strategy = std::move(strategy_name);
  for (const auto& p : preds) {
    const std::size_t table_rows = p.gate == GateDecision::Seen ? ds.num_seen_classes() : ds.num_unseen_classes();
    if (p.predicted_class >= table_rows) {
      throw EvaluationError("evaluate: predictor returned class " + std::to_string(p.predicted_class) + " outside the " +
                            std::string(decision_name(p.gate)) + " table");
    }
    ++rep.gate_confusion[domain_index(p.true_domain)][domain_index(p.gate)];
  }
  rep.per_class_seen = per_class_top1(preds, GateDecision::Seen, ds.num_seen_classes());
  rep.per_class_unseen = per_class_top1(preds, GateDecision::Unseen, ds.num_unseen_classes());
  rep.acc_s = macro_average(rep.per_class_seen);
  rep.acc_u = macro_average(rep.per_class_unseen);
  rep.h = harmonic_mean(rep.acc_s, rep.acc_u);
  rep.predictions = std::move(preds);
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

EvaluationReport evaluate(const MlpParams& mapper, const ThresholdSet& th, Strategy strategy, const GzslDataset& ds,
                          unsigned threads) {
  return evaluate(make_sd_predictor(mapper, th, strategy, ds.seen_embeddings, ds.unseen_embeddings), ds,
                  std::string(strategy_tag(strategy)), threads);
}

std::string format_report_text(const EvaluationReport& r, const std::string& preamble) {
  std::ostringstream out;
  out << "GZSL evaluation report\n";
  out << "strategy: " << r.strategy << "\n";
  if (!preamble.empty()) {
    out << "\n[config]\n" << preamble;
    if (preamble.back() != '\n') out << '\n';
  }
  out << "\n[accuracy]\n";
  out << "acc_S  " << fmt_short(r.acc_s) << "\n";
  out << "acc_U  " << fmt_short(r.acc_u) << "\n";
  out << "H      " << fmt_short(r.h) << "\n";
  out << "\n[gate confusion] rows: true domain, cols: gated domain\n";
  out << "           seen  unseen\n";
  char line[96];
  std::snprintf(line, sizeof line, "seen    %7zu %7zu\n", r.gate_confusion[0][0], r.gate_confusion[0][1]);
  out << line;
  std::snprintf(line, sizeof line, "unseen  %7zu %7zu\n", r.gate_confusion[1][0], r.gate_confusion[1][1]);
  out << line;
  out << "seen recall      " << fmt_short(r.seen_gate_recall()) << "\n";
  out << "unseen recall    " << fmt_short(r.unseen_gate_recall()) << "\n";
  out << "balanced         " << fmt_short(r.balanced_gate_accuracy()) << "\n";
  out << "\n[per-class top-1]\n";
  for (std::size_t c = 0; c < r.per_class_seen.size(); ++c) out << "seen   " << c << "  " << fmt_short(r.per_class_seen[c]) << "\n";
  for (std::size_t c = 0; c < r.per_class_unseen.size(); ++c) {
    out << "unseen " << c << "  " << fmt_short(r.per_class_unseen[c]) << "\n";
  }
  return out.str();
}

std::string format_report_kv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "strategy=" << r.strategy << "\n";
  out << "acc_s=" << fmt(r.acc_s) << "\n";
  out << "acc_u=" << fmt(r.acc_u) << "\n";
  out << "h=" << fmt(r.h) << "\n";
  out << "instances=" << r.total() << "\n";
  out << "gate_seen_as_seen=" << r.gate_confusion[0][0] << "\n";
  out << "gate_seen_as_unseen=" << r.gate_confusion[0][1] << "\n";
  out << "gate_unseen_as_seen=" << r.gate_confusion[1][0] << "\n";
  out << "gate_unseen_as_unseen=" << r.gate_confusion[1][1] << "\n";
  out << "gate_seen_recall=" << fmt(r.seen_gate_recall()) << "\n";
  out << "gate_unseen_recall=" << fmt(r.unseen_gate_recall()) << "\n";
  out << "gate_balanced_accuracy=" << fmt(r.balanced_gate_accuracy()) << "\n";
  return out.str();
}

std::string format_per_class_csv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "domain,class,accuracy\n";
  for (std::size_t c = 0; c < r.per_class_seen.size(); ++c) out << "seen," << c << "," << fmt(r.per_class_seen[c]) << "\n";
  for (std::size_t c = 0; c < r.per_class_unseen.size(); ++c) {
    out << "unseen," << c << "," << fmt(r.per_class_unseen[c]) << "\n";
  }
  return out.str();
}

std::string format_sweep_csv(std::span<const EvaluationReport> reports) {
  std::ostringstream out;
  out << "strategy,acc_s,acc_u,h,gate_seen_recall,gate_unseen_recall,gate_balanced_accuracy\n";
  for (const auto& r : reports) {
    out << r.strategy << "," << fmt(r.acc_s) << "," << fmt(r.acc_u) << "," << fmt(r.h) << ","
        << fmt(r.seen_gate_recall()) << "," << fmt(r.unseen_gate_recall()) << "," << fmt(r.balanced_gate_accuracy())
        << "\n";
  }
  return out.str();
}

}  // namespace sdgzsl
