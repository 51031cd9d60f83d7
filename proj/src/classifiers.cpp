#include "sdgzsl/classifiers.hpp"

#include <limits>

namespace sdgzsl {

std::size_t nearest_row(const Vector& v, const EmbeddingTable& table) {
  if (table.rows() == 0) throw DomainError("classify: empty embedding table");
  if (v.size() != table.cols()) {
    throw ShapeError("classify: vector length " + std::to_string(v.size()) + " vs table " + shape_str(table));
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const double d = sq_dist(table.row(r).transpose(), v);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(r);
    }
  }
  return best;
}

std::size_t DomainClassifier::classify(const Vector& feature) const {
  const EmbeddingTable& table = embeddings();
  if (table.rows() == 0) throw DomainError("classify: empty embedding table");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const double s = score(feature, table.row(r).transpose());
    if (r == 0 || s > best_score) {
      best_score = s;
      best = static_cast<std::size_t>(r);
    }
  }
  return best;
}

NearestEmbeddingClassifier::NearestEmbeddingClassifier(MlpParams mapper, EmbeddingTable table)
    : mapper_(std::move(mapper)), table_(std::move(table)) {
  validate_params(mapper_);
  if (table_.rows() == 0) throw DomainError("classifier: empty embedding table");
  if (table_.cols() != mapper_.output_dim()) {
    throw ShapeError("classifier: mapper output " + std::to_string(mapper_.output_dim()) + " vs table " + shape_str(table_));
  }
}

double NearestEmbeddingClassifier::score(const Vector& feature, const Vector& embedding) const {
  return -sq_dist(forward(mapper_, feature), embedding);
}

std::size_t NearestEmbeddingClassifier::classify(const Vector& feature) const {
  return nearest_row(forward(mapper_, feature), table_);
}

std::size_t classify_seen(const MlpParams& mapper, const Vector& x, const EmbeddingTable& seen_embeddings) {
  return nearest_row(forward(mapper, x), seen_embeddings);
}

std::size_t classify_unseen(const MlpParams& mapper, const Vector& x, const EmbeddingTable& unseen_embeddings) {
  return nearest_row(forward(mapper, x), unseen_embeddings);
}

}  // namespace sdgzsl
