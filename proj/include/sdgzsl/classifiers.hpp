#pragma once

#include <cstddef>

#include "sdgzsl/semantic_map.hpp"
#include "sdgzsl/tensor.hpp"

namespace sdgzsl {

/// Index of the row of `table` closest to `v` in squared Euclidean distance.
/// Ties go to the lowest index. Throws DomainError on an empty table.
std::size_t nearest_row(const Vector& v, const EmbeddingTable& table);

/// A classifier for one domain: a score over (feature, class embedding)
/// pairs and the table of class embeddings it ranges over. classify() is the
/// argmax of score over the table rows with ties broken by lowest index.
class DomainClassifier {
 public:
  virtual ~DomainClassifier() = default;

  virtual const EmbeddingTable& embeddings() const = 0;
  virtual double score(const Vector& feature, const Vector& embedding) const = 0;

  virtual std::size_t classify(const Vector& feature) const;

  std::size_t num_classes() const { return static_cast<std::size_t>(embeddings().rows()); }
};

/// Scores by negative squared distance between F(x) and the class embedding.
class NearestEmbeddingClassifier : public DomainClassifier {
 public:
  NearestEmbeddingClassifier(MlpParams mapper, EmbeddingTable table);

  const EmbeddingTable& embeddings() const override { return table_; }
  double score(const Vector& feature, const Vector& embedding) const override;
  /// Projects once, then scans the table.
  std::size_t classify(const Vector& feature) const override;

 private:
  MlpParams mapper_;
  EmbeddingTable table_;
};

/// Default seen-domain classifier: nearest seen embedding to F(x).
std::size_t classify_seen(const MlpParams& mapper, const Vector& x, const EmbeddingTable& seen_embeddings);

/// Default unseen-domain classifier: nearest unseen embedding to F(x).
std::size_t classify_unseen(const MlpParams& mapper, const Vector& x, const EmbeddingTable& unseen_embeddings);

}  // namespace sdgzsl
