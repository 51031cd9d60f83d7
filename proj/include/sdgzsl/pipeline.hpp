#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdgzsl/classifiers.hpp"
#include "sdgzsl/dataset.hpp"
#include "sdgzsl/discriminator.hpp"
#include "sdgzsl/semantic_map.hpp"

namespace sdgzsl {

/// Output of routing a single instance: the gate's domain and a class index
/// into that domain's embedding table.
struct Routing {
  GateDecision gate = GateDecision::Seen;
  std::size_t predicted_class = 0;
};

struct Prediction {
  GateDecision gate = GateDecision::Seen;
  std::size_t predicted_class = 0;
  GateDecision true_domain = GateDecision::Seen;
  std::size_t true_class = 0;

  /// Right domain and right class.
  bool correct() const { return gate == true_domain && predicted_class == true_class; }
};

/// Maps one feature vector to a routing decision.
using Predictor = std::function<Routing(const Vector&)>;
using GateFn = std::function<GateDecision(const GateStatistics&)>;

/// Project, gate with `strategy`, and route to the nearest embedding of the
/// gated domain. Throws ConfigError for an out-of-range strategy.
Routing predict(const MlpParams& mapper, const ThresholdSet& th, Strategy strategy, const Vector& x,
                const EmbeddingTable& seen_embeddings, const EmbeddingTable& unseen_embeddings);

Predictor make_sd_predictor(MlpParams mapper, ThresholdSet th, Strategy strategy, EmbeddingTable seen_embeddings,
                            EmbeddingTable unseen_embeddings);

/// General routing with user-supplied gate and domain classifiers. The gate
/// sees statistics computed from `mapper` against `seen_embeddings`. The
/// classifiers are held by reference and must outlive the predictor.
Predictor make_router(MlpParams mapper, EmbeddingTable seen_embeddings, double l, GateFn gate_fn,
                      const DomainClassifier& seen_classifier, const DomainClassifier& unseen_classifier);

/// No gate: one nearest-embedding scan over the seen rows followed by the
/// unseen rows. The winning row's table fixes the reported domain.
Predictor make_baseline_predictor(MlpParams mapper, EmbeddingTable seen_embeddings, EmbeddingTable unseen_embeddings);

/// Per-class correct fraction over the predictions whose true domain is
/// `domain`. Throws MetricError naming any class with no instances.
std::vector<double> per_class_top1(std::span<const Prediction> predictions, GateDecision domain, std::size_t n_classes);

/// Mean over classes. Throws MetricError when empty.
double macro_average(std::span<const double> per_class);

/// 2ab/(a+b), 0 when both are 0. Throws DomainError outside [0, 1].
double harmonic_mean(double acc_s, double acc_u);

struct EvaluationReport {
  std::string strategy;
  double acc_s = 0.0;
  double acc_u = 0.0;
  double h = 0.0;
  std::vector<double> per_class_seen;
  std::vector<double> per_class_unseen;
  /// [true domain][gated domain], index 0 = seen, 1 = unseen.
  std::array<std::array<std::size_t, 2>, 2> gate_confusion{};
  std::vector<Prediction> predictions;
  double runtime_seconds = 0.0;

  std::size_t total() const;
  double seen_gate_recall() const;
  double unseen_gate_recall() const;
  double balanced_gate_accuracy() const;
};

/// Runs `predictor` over seen_test then unseen_test. With threads > 1 the
/// instances are partitioned across threads; the report is identical to a
/// sequential run. Throws EvaluationError if either test split is empty.
EvaluationReport evaluate(const Predictor& predictor, const GzslDataset& ds, std::string strategy_name,
                          unsigned threads = 1);

EvaluationReport evaluate(const MlpParams& mapper, const ThresholdSet& th, Strategy strategy, const GzslDataset& ds,
                          unsigned threads = 1);

/// Human-readable summary. `preamble` lines (resolved config) are embedded verbatim.
std::string format_report_text(const EvaluationReport& r, const std::string& preamble = {});
/// key=value lines; excludes runtime so runs are byte-comparable.
std::string format_report_kv(const EvaluationReport& r);
/// domain,class,accuracy
std::string format_per_class_csv(const EvaluationReport& r);
/// One header plus one row per report.
std::string format_sweep_csv(std::span<const EvaluationReport> reports);

}  // namespace sdgzsl
