#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "sdgzsl/pipeline.hpp"

using namespace sdgzsl;

namespace {

struct Trained {
  GzslDataset ds;
  MlpParams mapper;
  ThresholdSet th;
};

const Trained& default_run() {
  static const Trained run = [] {
    Trained t;
    t.ds = generate_synthetic(SyntheticSpec{});
    t.mapper = train(t.ds, TrainConfig{}).params;
    t.th = calibrate(t.mapper, t.ds);
    return t;
  }();
  return run;
}

Prediction pred(GateDecision gate, std::size_t cls, GateDecision truth, std::size_t true_cls) {
  return {gate, cls, truth, true_cls};
}

void check_report_invariants(const EvaluationReport& r, const GzslDataset& ds) {
  const double want_h = r.acc_s + r.acc_u > 0 ? 2 * r.acc_s * r.acc_u / (r.acc_s + r.acc_u) : 0.0;
  CHECK(r.h == doctest::Approx(want_h).epsilon(1e-15));
  CHECK(r.total() == ds.seen_test.size() + ds.unseen_test.size());
  CHECK(r.gate_confusion[0][0] + r.gate_confusion[0][1] == ds.seen_test.size());
  CHECK(r.gate_confusion[1][0] + r.gate_confusion[1][1] == ds.unseen_test.size());
  CHECK(r.h <= std::max(r.acc_s, r.acc_u) + 1e-15);
  CHECK(r.h <= 2 * std::min(r.acc_s, r.acc_u) + 1e-15);

  // recount from the raw predictions
  std::vector<double> hits_s(ds.num_seen_classes()), tot_s(ds.num_seen_classes());
  std::vector<double> hits_u(ds.num_unseen_classes()), tot_u(ds.num_unseen_classes());
  for (const auto& p : r.predictions) {
    auto& hits = p.true_domain == GateDecision::Seen ? hits_s : hits_u;
    auto& tot = p.true_domain == GateDecision::Seen ? tot_s : tot_u;
    tot[p.true_class] += 1;
    if (p.gate == p.true_domain && p.predicted_class == p.true_class) hits[p.true_class] += 1;
  }
  double acc_s = 0, acc_u = 0;
  for (std::size_t c = 0; c < hits_s.size(); ++c) acc_s += hits_s[c] / tot_s[c];
  for (std::size_t c = 0; c < hits_u.size(); ++c) acc_u += hits_u[c] / tot_u[c];
  CHECK(r.acc_s == doctest::Approx(acc_s / static_cast<double>(hits_s.size())).epsilon(1e-14));
  CHECK(r.acc_u == doctest::Approx(acc_u / static_cast<double>(hits_u.size())).epsilon(1e-14));
}

}  // namespace

TEST_CASE("routing takes the class from the gated domain's table") {
  const auto& run = default_run();
  const NearestEmbeddingClassifier seen_clf(run.mapper, run.ds.seen_embeddings);
  const NearestEmbeddingClassifier unseen_clf(run.mapper, run.ds.unseen_embeddings);
  for (const Matrix* split : {&run.ds.seen_test.features, &run.ds.unseen_test.features}) {
    for (Eigen::Index i = 0; i < split->rows(); ++i) {
      const Vector x = split->row(i).transpose();
      for (Strategy s : {Strategy::OL, Strategy::DL, Strategy::WS}) {
        const Routing r = predict(run.mapper, run.th, s, x, run.ds.seen_embeddings, run.ds.unseen_embeddings);
        if (r.gate == GateDecision::Seen) {
          CHECK(r.predicted_class == seen_clf.classify(x));
          CHECK(r.predicted_class < run.ds.num_seen_classes());
        } else {
          CHECK(r.predicted_class == unseen_clf.classify(x));
          CHECK(r.predicted_class < run.ds.num_unseen_classes());
        }
      }
    }
  }
}

TEST_CASE("noiseless data with a converged mapper routes seen test instances to their class") {
  SyntheticSpec spec;
  spec.cluster_spread = 0.0;
  const GzslDataset ds = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.hidden_sizes = std::vector<std::size_t>{};
  cfg.epochs = 2000;
  const auto trained = train(ds, cfg);
  REQUIRE(trained.loss_history.back() < 1e-6);
  const ThresholdSet th = calibrate(trained.params, ds);

  // Every seen test instance is classified correctly once gated seen; the
  // gate itself rejects whichever classes sit at or above the calibrated
  // mean + std (see the discriminator tests), which is a minority here.
  for (Strategy s : {Strategy::OL, Strategy::DL, Strategy::WS}) {
    std::size_t gated_seen = 0;
    for (Eigen::Index i = 0; i < ds.seen_test.features.rows(); ++i) {
      const Vector x = ds.seen_test.features.row(i).transpose();
      const Routing r = predict(trained.params, th, s, x, ds.seen_embeddings, ds.unseen_embeddings);
      if (r.gate == GateDecision::Seen) {
        ++gated_seen;
        CHECK(r.predicted_class == ds.seen_test.labels[static_cast<std::size_t>(i)]);
      }
      CHECK(classify_seen(trained.params, x, ds.seen_embeddings) == ds.seen_test.labels[static_cast<std::size_t>(i)]);
    }
    CHECK(gated_seen >= ds.seen_test.size() * 8 / 10);
  }
}

TEST_CASE("per_class_top1 examples") {
  const auto S = GateDecision::Seen, U = GateDecision::Unseen;
  // class 0: 2 of 4 correct (one wrong class, one wrong domain); class 1: 4 of 4
  const std::vector<Prediction> preds{
      pred(S, 0, S, 0), pred(S, 0, S, 0), pred(S, 1, S, 0), pred(U, 0, S, 0),
      pred(S, 1, S, 1), pred(S, 1, S, 1), pred(S, 1, S, 1), pred(S, 1, S, 1),
      pred(U, 0, U, 0),
  };
  const auto acc = per_class_top1(preds, S, 2);
  REQUIRE(acc.size() == 2);
  CHECK(acc[0] == 0.5);
  CHECK(acc[1] == 1.0);
  CHECK(macro_average(acc) == 0.75);
  CHECK(per_class_top1(preds, U, 1) == std::vector<double>{1.0});

  std::vector<Prediction> wrong{pred(U, 0, S, 0), pred(S, 0, S, 1)};
  CHECK(per_class_top1(wrong, S, 2) == std::vector<double>{0.0, 0.0});

  CHECK_THROWS_WITH_AS(per_class_top1(preds, S, 3), doctest::Contains("class 2"), MetricError);
  CHECK_THROWS_AS(macro_average(std::vector<double>{}), MetricError);
}

TEST_CASE("harmonic_mean examples and domain") {
  CHECK(harmonic_mean(0.5, 0.5) == 0.5);
  CHECK(harmonic_mean(0.7, 0.0) == 0.0);
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  CHECK(harmonic_mean(0.8, 0.2) == doctest::Approx(0.32).epsilon(1e-15));
  CHECK_THROWS_AS(harmonic_mean(1.1, 0.5), DomainError);
  CHECK_THROWS_AS(harmonic_mean(0.5, -0.1), DomainError);
}

TEST_CASE("a perfect predictor scores one everywhere") {
  SyntheticSpec spec;
  spec.cluster_spread = 0.0;
  const GzslDataset ds = generate_synthetic(spec);
  // With no noise each class is a single point, so a lookup table is exact.
  std::map<std::vector<double>, Routing> lookup;
  auto key = [](const Vector& x) { return std::vector<double>(x.data(), x.data() + x.size()); };
  for (Eigen::Index i = 0; i < ds.seen_test.features.rows(); ++i)
    lookup[key(ds.seen_test.features.row(i).transpose())] = {GateDecision::Seen, ds.seen_test.labels[static_cast<std::size_t>(i)]};
  for (Eigen::Index i = 0; i < ds.unseen_test.features.rows(); ++i)
    lookup[key(ds.unseen_test.features.row(i).transpose())] = {GateDecision::Unseen,
                                                                ds.unseen_test.labels[static_cast<std::size_t>(i)]};
  const Predictor perfect = [&](const Vector& x) { return lookup.at(key(x)); };
  const EvaluationReport r = evaluate(perfect, ds, "perfect");
  CHECK(r.acc_s == 1.0);
  CHECK(r.acc_u == 1.0);
  CHECK(r.h == 1.0);
  CHECK(r.gate_confusion[0][1] == 0);
  CHECK(r.gate_confusion[1][0] == 0);
  for (double a : r.per_class_seen) CHECK(a == 1.0);
  check_report_invariants(r, ds);
}

TEST_CASE("an always-seen gate collapses unseen accuracy and H") {
  const auto& run = default_run();
  const NearestEmbeddingClassifier seen_clf(run.mapper, run.ds.seen_embeddings);
  const NearestEmbeddingClassifier unseen_clf(run.mapper, run.ds.unseen_embeddings);
  const Predictor always_seen =
      make_router(run.mapper, run.ds.seen_embeddings, run.ds.unified_norm_l,
                  [](const GateStatistics&) { return GateDecision::Seen; }, seen_clf, unseen_clf);
  const EvaluationReport r = evaluate(always_seen, run.ds, "always-seen");
  CHECK(r.acc_u == 0.0);
  CHECK(r.h == 0.0);
  CHECK(r.acc_s > 0.5);
  CHECK(r.gate_confusion[1][1] == 0);
  check_report_invariants(r, run.ds);
}

TEST_CASE("reports on the default synthetic run satisfy their invariants") {
  const auto& run = default_run();
  for (Strategy s : {Strategy::OL, Strategy::DL, Strategy::WS}) check_report_invariants(evaluate(run.mapper, run.th, s, run.ds), run.ds);
  const EvaluationReport base =
      evaluate(make_baseline_predictor(run.mapper, run.ds.seen_embeddings, run.ds.unseen_embeddings), run.ds, "baseline");
  check_report_invariants(base, run.ds);
}

TEST_CASE("strategies differ only through their gate decisions") {
  const auto& run = default_run();
  const auto ol = evaluate(run.mapper, run.th, Strategy::OL, run.ds);
  const auto dl = evaluate(run.mapper, run.th, Strategy::DL, run.ds);
  const auto ws = evaluate(run.mapper, run.th, Strategy::WS, run.ds);
  REQUIRE(ol.predictions.size() == dl.predictions.size());
  REQUIRE(ol.predictions.size() == ws.predictions.size());
  for (std::size_t i = 0; i < ol.predictions.size(); ++i) {
    for (const auto* other : {&dl.predictions[i], &ws.predictions[i]}) {
      CHECK(other->true_class == ol.predictions[i].true_class);
      if (other->gate == ol.predictions[i].gate) CHECK(other->predicted_class == ol.predictions[i].predicted_class);
    }
  }
}

TEST_CASE("threaded evaluation equals sequential evaluation") {
  const auto& run = default_run();
  for (Strategy s : {Strategy::OL, Strategy::DL, Strategy::WS}) {
    const auto seq = evaluate(run.mapper, run.th, s, run.ds, 1);
    for (unsigned t : {2u, 3u, 8u, 1000u}) {
      const auto par = evaluate(run.mapper, run.th, s, run.ds, t);
      CHECK(format_report_kv(par) == format_report_kv(seq));
      CHECK(format_per_class_csv(par) == format_per_class_csv(seq));
      REQUIRE(par.predictions.size() == seq.predictions.size());
      for (std::size_t i = 0; i < seq.predictions.size(); ++i) {
        CHECK(par.predictions[i].gate == seq.predictions[i].gate);
        CHECK(par.predictions[i].predicted_class == seq.predictions[i].predicted_class);
      }
    }
  }
}

TEST_CASE("evaluate rejects empty splits and unknown strategies") {
  const auto& run = default_run();
  GzslDataset empty = run.ds;
  empty.unseen_test = LabeledSplit{Matrix(0, run.ds.feature_dim()), {}};
  CHECK_THROWS_AS(evaluate(run.mapper, run.th, Strategy::OL, empty), EvaluationError);
  empty = run.ds;
  empty.seen_test = LabeledSplit{Matrix(0, run.ds.feature_dim()), {}};
  CHECK_THROWS_AS(evaluate(run.mapper, run.th, Strategy::OL, empty), EvaluationError);

  const auto bogus = static_cast<Strategy>(7);
  CHECK_THROWS_AS(evaluate(run.mapper, run.th, bogus, run.ds), ConfigError);
  const Vector x = run.ds.seen_test.features.row(0).transpose();
  CHECK_THROWS_AS(predict(run.mapper, run.th, bogus, x, run.ds.seen_embeddings, run.ds.unseen_embeddings), ConfigError);
}

TEST_CASE("formatters") {
  const auto& run = default_run();
  const auto r = evaluate(run.mapper, run.th, Strategy::DL, run.ds);
  const std::string kv = format_report_kv(r);
  CHECK(kv.find("strategy=dl\n") == 0);
  CHECK(kv.find("runtime") == std::string::npos);
  CHECK(format_report_text(r, "lambda=1\n").find("[config]\nlambda=1\n") != std::string::npos);
  const std::vector<EvaluationReport> reports{r, r};
  const std::string sweep = format_sweep_csv(reports);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);
  const std::string csv = format_per_class_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 10 + 3);
}
