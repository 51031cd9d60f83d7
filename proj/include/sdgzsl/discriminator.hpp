#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "sdgzsl/dataset.hpp"
#include "sdgzsl/semantic_map.hpp"
#include "sdgzsl/tensor.hpp"

namespace sdgzsl {

enum class GateDecision { Seen, Unseen };

/// Gating strategies: length only, length then minimum distance, weighted sum.
enum class Strategy { OL, DL, WS };

std::string_view decision_name(GateDecision g);
std::string_view strategy_tag(Strategy s);
/// Accepts "ol", "dl", "ws" (any case). Throws ConfigError otherwise.
Strategy parse_strategy(std::string_view tag);

struct GateStatistics {
  double d_l = 0.0;  // | ||F(x)|| - l |
  double msd = 0.0;  // min_z in Z_s ||F(x) - z||^2
};

/// Thresholds calibrated from seen-class statistics. Spread terms are
/// population standard deviations.
struct ThresholdSet {
  double r_ol = 0.0;  // m_dl + std_dl
  double r_0 = 0.0;   // m_msd + 2 std_msd
  double r_1 = 0.0;   // m_msd + std_msd
  double r_ws = 0.0;  // m_ws + std_ws
  double lambda = 1.0;
  double m_dl = 0.0, std_dl = 0.0;
  double m_msd = 0.0, std_msd = 0.0;
  double m_ws = 0.0, std_ws = 0.0;
  double l = 1.0;
  std::size_t sample_count = 0;
};

template <typename Derived>
typename Derived::Scalar d_l(const Eigen::MatrixBase<Derived>& projected, typename Derived::Scalar l) {
  return std::abs(l2_norm(projected) - l);
}

/// Minimum squared distance from `projected` to any row of `table`.
template <typename Derived>
typename Derived::Scalar msd(const Eigen::MatrixBase<Derived>& projected, const MatrixX<typename Derived::Scalar>& table) {
  if (table.rows() == 0) throw DomainError("msd: empty embedding table");
  if (projected.size() != table.cols()) {
    throw ShapeError("msd: projected length " + std::to_string(projected.size()) + " vs table " + shape_str(table));
  }
  auto best = std::numeric_limits<typename Derived::Scalar>::infinity();
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    best = std::min(best, sq_dist(table.row(r).transpose(), projected));
  }
  return best;
}

template <typename Derived>
GateStatistics gate_statistics(const Eigen::MatrixBase<Derived>& projected, const EmbeddingTable& seen_embeddings, double l) {
  return {d_l(projected, l), msd(projected, seen_embeddings)};
}

/// Fills a ThresholdSet from per-instance seen statistics.
ThresholdSet thresholds_from_samples(std::span<const double> d_l_samples, std::span<const double> msd_samples,
                                     double lambda, double l);

/// Projects every row of `seen_features`, then calibrates from the resulting statistics.
ThresholdSet calibrate(const MlpParams& mapper, const FeatureMatrix& seen_features,
                       const EmbeddingTable& seen_embeddings, double l, double lambda);

/// Calibrates on seen_train.
ThresholdSet calibrate(const MlpParams& mapper, const GzslDataset& ds, double lambda = 1.0);

GateDecision gate_ol(const GateStatistics& s, const ThresholdSet& th);
GateDecision gate_dl(const GateStatistics& s, const ThresholdSet& th);
GateDecision gate_ws(const GateStatistics& s, const ThresholdSet& th);
/// Throws ConfigError on an out-of-range strategy value.
GateDecision gate(const GateStatistics& s, const ThresholdSet& th, Strategy strategy);

/// The four rows of the length-then-distance rule.
enum class DlCase {
  ShortNear,  // d_l <  r_ol, msd <  r_0  -> seen
  LongNear,   // d_l >= r_ol, msd <  r_1  -> seen
  ShortFar,   // d_l <  r_ol, msd >= r_0  -> unseen
  LongFar,    // d_l >= r_ol, msd >= r_1  -> unseen
};
DlCase dl_case(const GateStatistics& s, const ThresholdSet& th);

/// key=value text, one per line, values printed round-trip exact.
std::string format_thresholds(const ThresholdSet& th);
ThresholdSet parse_thresholds(const std::string& text);
void save_thresholds(const std::filesystem::path& path, const ThresholdSet& th);
ThresholdSet load_thresholds(const std::filesystem::path& path);

}  // namespace sdgzsl
