#include <doctest.h>

#include <array>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sdgzsl/discriminator.hpp"

using namespace sdgzsl;

namespace {

ThresholdSet manual(double r_ol, double r_0, double r_1, double r_ws, double lambda = 1.0) {
  ThresholdSet th;
  th.r_ol = r_ol;
  th.r_0 = r_0;
  th.r_1 = r_1;
  th.r_ws = r_ws;
  th.lambda = lambda;
  return th;
}

MlpParams identity_mapper(Eigen::Index n) {
  MlpParams p;
  p.layers.push_back({Matrix::Identity(n, n), Vector::Zero(n), Activation::Identity});
  return p;
}

ThresholdSet random_thresholds(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> dl(20), ms(20);
  for (auto& v : dl) v = u(gen);
  for (auto& v : ms) v = u(gen);
  return thresholds_from_samples(dl, ms, 1.0, 1.0);
}

}  // namespace

TEST_CASE("d_l examples") {
  CHECK(d_l(Vector{{0.6, 0.8}}, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d_l(Vector{{3.0, 4.0}}, 1.0) == 4.0);
  CHECK(d_l(Vector::Zero(5), 1.0) == 1.0);
}

TEST_CASE("msd examples") {
  EmbeddingTable two(2, 2);
  two << 1, 0, 0, 1;
  CHECK(msd(Vector{{1.0, 0.0}}, two) == 0.0);
  EmbeddingTable three(3, 2);
  three << 1, 0, 0, 1, 3, 4;
  CHECK(msd(Vector{{0.0, 0.0}}, three) == 1.0);
  CHECK(msd(Vector{{3.0, 4.0}}, three) == 0.0);
  CHECK_THROWS_AS(msd(Vector{{0.0, 0.0}}, EmbeddingTable(0, 2)), DomainError);
  CHECK_THROWS_AS(msd(Vector{{0.0, 0.0, 0.0}}, three), ShapeError);
}

TEST_CASE("calibrate on a perfect fit collapses every threshold to zero") {
  // Axis-aligned embeddings: norms are exactly 1, and the identity mapper
  // lands every instance exactly on its class embedding.
  const EmbeddingTable emb = Matrix::Identity(3, 3);
  Matrix features(6, 3);
  features << emb, emb;
  const ThresholdSet th = calibrate(identity_mapper(3), features, emb, 1.0, 1.0);
  CHECK(th.m_dl == 0.0);
  CHECK(th.std_dl == 0.0);
  CHECK(th.r_ol == 0.0);
  CHECK(th.m_msd == 0.0);
  CHECK(th.r_0 == 0.0);
  CHECK(th.r_1 == 0.0);
  CHECK(th.r_ws == 0.0);
  CHECK(th.sample_count == 6);
}

TEST_CASE("threshold formulas on a hand-computed sample") {
  const std::vector<double> dl{0, 2, 4}, ms{0, 0, 0};
  const ThresholdSet th = thresholds_from_samples(dl, ms, 1.0, 1.0);
  const double want = 2.0 + std::sqrt(8.0 / 3.0);  // 3.632993...
  CHECK(th.r_ol == doctest::Approx(want).epsilon(1e-15));
  CHECK(th.r_ws == doctest::Approx(want).epsilon(1e-15));
  CHECK(th.r_0 == 0.0);
  CHECK(th.r_1 == 0.0);
}

TEST_CASE("calibration matches the two-pass oracle and its own identities") {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<int> len(1, 300);
  std::uniform_real_distribution<double> dl_val(0.0, 3.0), ms_val(0.0, 5.0), lam(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> dl(static_cast<std::size_t>(len(gen))), ms(dl.size()), ws(dl.size());
    for (auto& v : dl) v = dl_val(gen);
    for (auto& v : ms) v = ms_val(gen);
    const double lambda = lam(gen);
    for (std::size_t i = 0; i < ws.size(); ++i) ws[i] = dl[i] + lambda * ms[i];
    const ThresholdSet th = thresholds_from_samples(dl, ms, lambda, 1.0);

    const auto [m_dl, s_dl] = oracle::two_pass_mean_std(dl);
    const auto [m_ms, s_ms] = oracle::two_pass_mean_std(ms);
    const auto [m_ws, s_ws] = oracle::two_pass_mean_std(ws);
    CHECK(std::abs(th.r_ol - (m_dl + s_dl)) <= 1e-12);
    CHECK(std::abs(th.r_0 - (m_ms + 2 * s_ms)) <= 1e-12);
    CHECK(std::abs(th.r_1 - (m_ms + s_ms)) <= 1e-12);
    CHECK(std::abs(th.r_ws - (m_ws + s_ws)) <= 1e-12);

    CHECK(th.r_ol == th.m_dl + th.std_dl);
    CHECK(th.r_0 == th.m_msd + 2.0 * th.std_msd);
    CHECK(th.r_1 == th.m_msd + th.std_msd);
    CHECK(th.r_ws == th.m_ws + th.std_ws);
    CHECK(th.r_0 >= th.r_1);
  }
}

TEST_CASE("calibrate rejects empty input and bad lambda") {
  const EmbeddingTable emb = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(calibrate(identity_mapper(2), Matrix(0, 2), emb, 1.0, 1.0), CalibrationError);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(thresholds_from_samples(one, one, -1.0, 1.0), ValidationError);
}

TEST_CASE("gate_ol examples") {
  const ThresholdSet th = manual(0.5, 0, 0, 0);
  CHECK(gate_ol({0.0, 0.0}, th) == GateDecision::Seen);
  CHECK(gate_ol({0.5, 0.0}, th) == GateDecision::Unseen);
  CHECK(gate_ol({10.0, 0.0}, th) == GateDecision::Unseen);
}

TEST_CASE("gate_dl follows the four-case table") {
  const ThresholdSet th = manual(0.5, 0.4, 0.2, 0);
  CHECK(gate_dl({0.1, 0.3}, th) == GateDecision::Seen);    // short, near (msd < r_0)
  CHECK(gate_dl({0.1, 0.4}, th) == GateDecision::Unseen);  // short but msd >= r_0: overruled
  CHECK(gate_dl({0.9, 0.1}, th) == GateDecision::Seen);    // long but msd < r_1: rescued
  CHECK(gate_dl({0.9, 0.3}, th) == GateDecision::Unseen);  // long and msd >= r_1
  CHECK(gate_dl({0.5, 0.2}, th) == GateDecision::Unseen);  // both on their boundaries
  CHECK(dl_case({0.1, 0.3}, th) == DlCase::ShortNear);
  CHECK(dl_case({0.9, 0.1}, th) == DlCase::LongNear);
  CHECK(dl_case({0.1, 0.4}, th) == DlCase::ShortFar);
  CHECK(dl_case({0.9, 0.3}, th) == DlCase::LongFar);
}

TEST_CASE("gate_ws examples") {
  const ThresholdSet th = manual(0, 0, 0, 0.5);
  CHECK(gate_ws({0.1, 0.2}, th) == GateDecision::Seen);
  CHECK(gate_ws({0.25, 0.25}, th) == GateDecision::Unseen);
  CHECK(gate_ws({2.0, 0.0}, th) == GateDecision::Unseen);
  const ThresholdSet half = manual(0, 0, 0, 0.5, 0.5);
  CHECK(gate_ws({0.25, 0.5}, half) == GateDecision::Unseen);
  CHECK(gate_ws({0.25, 0.49}, half) == GateDecision::Seen);
}

TEST_CASE("gate_ws with lambda 0 reproduces gate_ol") {
  std::mt19937_64 gen(22);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> dl(40), ms(40);
    for (auto& v : dl) v = u(gen);
    for (auto& v : ms) v = u(gen);
    const ThresholdSet th = thresholds_from_samples(dl, ms, 0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const GateStatistics s{u(gen), u(gen)};
      CHECK(gate_ws(s, th) == gate_ol(s, th));
    }
    for (std::size_t i = 0; i < dl.size(); ++i) {
      const GateStatistics s{dl[i], ms[i]};
      CHECK(gate_ws(s, th) == gate_ol(s, th));
    }
  }
}

TEST_CASE("gates are deterministic and monotone") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ThresholdSet th = random_thresholds(gen);
    GateStatistics a{u(gen), u(gen)}, b{u(gen), u(gen)};
    for (Strategy s : {Strategy::OL, Strategy::DL, Strategy::WS}) CHECK(gate(a, th, s) == gate(a, th, s));
    if (a.d_l > b.d_l) std::swap(a.d_l, b.d_l);
    if (gate_ol({b.d_l, 0.0}, th) == GateDecision::Seen) CHECK(gate_ol({a.d_l, 0.0}, th) == GateDecision::Seen);
    if (a.msd > b.msd) std::swap(a.msd, b.msd);
    // a is now dominated by b in both coordinates.
    if (gate_ws(b, th) == GateDecision::Seen) CHECK(gate_ws(a, th) == GateDecision::Seen);
  }
}

TEST_CASE("the four length-then-distance cases partition the plane") {
  std::mt19937_64 gen(24);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    const ThresholdSet th = random_thresholds(gen);
    const double dl_choices[] = {u(gen), th.r_ol, std::nextafter(th.r_ol, 0.0), std::nextafter(th.r_ol, 10.0)};
    const double ms_choices[] = {u(gen), th.r_0, th.r_1, std::nextafter(th.r_1, 0.0)};
    const GateStatistics s{dl_choices[pick(gen)], ms_choices[pick(gen)]};
    const bool c1 = s.d_l < th.r_ol && s.msd < th.r_0;
    const bool c2 = s.d_l >= th.r_ol && s.msd < th.r_1;
    const bool c3 = s.d_l < th.r_ol && s.msd >= th.r_0;
    const bool c4 = s.d_l >= th.r_ol && s.msd >= th.r_1;
    CHECK(int(c1) + int(c2) + int(c3) + int(c4) == 1);
    CHECK(gate_dl(s, th) == ((c1 || c2) ? GateDecision::Seen : GateDecision::Unseen));
  }
}

TEST_CASE("strategy tags") {
  CHECK(parse_strategy("ol") == Strategy::OL);
  CHECK(parse_strategy("DL") == Strategy::DL);
  CHECK(parse_strategy("ws") == Strategy::WS);
  CHECK_THROWS_AS(parse_strategy("xx"), ConfigError);
  CHECK_THROWS_AS(gate({0, 0}, ThresholdSet{}, static_cast<Strategy>(7)), ConfigError);
  CHECK(strategy_tag(Strategy::WS) == "ws");
}

TEST_CASE("threshold file round-trip is exact") {
  std::mt19937_64 gen(25);
  const ThresholdSet th = random_thresholds(gen);
  const auto path = std::filesystem::temp_directory_path() / "sdgzsl_test_thresholds.txt";
  save_thresholds(path, th);
  const ThresholdSet back = load_thresholds(path);
  CHECK(back.r_ol == th.r_ol);
  CHECK(back.r_0 == th.r_0);
  CHECK(back.r_1 == th.r_1);
  CHECK(back.r_ws == th.r_ws);
  CHECK(back.m_dl == th.m_dl);
  CHECK(back.std_dl == th.std_dl);
  CHECK(back.m_msd == th.m_msd);
  CHECK(back.std_msd == th.std_msd);
  CHECK(back.m_ws == th.m_ws);
  CHECK(back.std_ws == th.std_ws);
  CHECK(back.lambda == th.lambda);
  CHECK(back.l == th.l);
  CHECK(back.sample_count == th.sample_count);
  CHECK_THROWS_AS(parse_thresholds("r_ol=1\n"), LoadError);
  CHECK_THROWS_AS(parse_thresholds(format_thresholds(th) + "garbage\n"), LoadError);
  std::filesystem::remove(path);
}

TEST_CASE("noiseless data with a converged mapper") {
  // Statistics shrink towards zero, but the thresholds are calibrated from
  // those same statistics, so with sigma = 0 (one value per class) the
  // classes at or above mean + std still gate unseen. Every instance of a
  // class shares a decision.
  SyntheticSpec spec;
  spec.cluster_spread = 0.0;
  const GzslDataset ds = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.hidden_sizes = std::vector<std::size_t>{};
  cfg.epochs = 2000;
  const auto trained = train(ds, cfg);
  REQUIRE(trained.loss_history.back() < 1e-6);
  const ThresholdSet th = calibrate(trained.params, ds);
  const Matrix projected = forward_batch(trained.params, ds.seen_train.features);

  std::vector<std::array<int, 3>> per_class(ds.num_seen_classes(), {0, 0, 0});
  std::array<std::size_t, 3> seen{0, 0, 0};
  for (Eigen::Index i = 0; i < projected.rows(); ++i) {
    const auto s = gate_statistics(projected.row(i).transpose(), ds.seen_embeddings, ds.unified_norm_l);
    CHECK(s.d_l < 1e-2);
    CHECK(s.msd < 1e-4);
    for (int k = 0; k < 3; ++k) {
      const bool is_seen = gate(s, th, static_cast<Strategy>(k)) == GateDecision::Seen;
      seen[static_cast<std::size_t>(k)] += is_seen;
      per_class[ds.seen_train.labels[static_cast<std::size_t>(i)]][static_cast<std::size_t>(k)] += is_seen;
    }
  }
  for (const auto& c : per_class) {
    for (int k = 0; k < 3; ++k) CHECK((c[static_cast<std::size_t>(k)] == 0 || c[static_cast<std::size_t>(k)] == 50));
  }
  for (int k = 0; k < 3; ++k) {
    CHECK(seen[static_cast<std::size_t>(k)] >= 400);
    CHECK(seen[static_cast<std::size_t>(k)] < 500);
  }
}

TEST_CASE("exact zero statistics gate unseen under strict comparisons") {
  const EmbeddingTable emb = Matrix::Identity(3, 3);
  const ThresholdSet th = calibrate(identity_mapper(3), emb, emb, 1.0, 1.0);
  const GateStatistics zero{0.0, 0.0};
  CHECK(gate_ol(zero, th) == GateDecision::Unseen);
  CHECK(gate_dl(zero, th) == GateDecision::Unseen);
  CHECK(gate_ws(zero, th) == GateDecision::Unseen);
}
