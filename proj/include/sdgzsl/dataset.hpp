#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sdgzsl/tensor.hpp"

namespace sdgzsl {

/// Feature rows with one dense class index per row. Labels index into the
/// embedding table of the split's own domain; the domain is implied by which
/// field of GzslDataset holds the split.
struct LabeledSplit {
  FeatureMatrix features;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
};

struct GzslDataset {
  LabeledSplit seen_train;
  LabeledSplit seen_test;
  LabeledSplit unseen_test;
  EmbeddingTable seen_embeddings;    // C_s x S
  EmbeddingTable unseen_embeddings;  // C_u x S
  double unified_norm_l = 1.0;

  Eigen::Index feature_dim() const { return seen_train.features.cols(); }
  Eigen::Index semantic_dim() const { return seen_embeddings.cols(); }
  std::size_t num_seen_classes() const { return static_cast<std::size_t>(seen_embeddings.rows()); }
  std::size_t num_unseen_classes() const { return static_cast<std::size_t>(unseen_embeddings.rows()); }
};

struct SyntheticSpec {
  std::size_t n_seen_classes = 10;
  std::size_t n_unseen_classes = 3;
  std::size_t feature_dim = 32;
  std::size_t semantic_dim = 16;
  std::size_t per_class_train = 50;
  std::size_t per_class_test = 20;
  double cluster_spread = 0.05;
  std::uint64_t seed = 7;
  double unified_norm_l = 1.0;
};

/// Unseen directions whose cosine to any seen embedding exceeds this are redrawn.
inline constexpr double kMaxSeenUnseenCosine = 0.95;

/// One message per violated bound; empty when the spec is valid.
std::vector<std::string> spec_violations(const SyntheticSpec& spec);

/// Rescales every row to norm `l`. Throws DomainError naming the first zero row.
EmbeddingTable normalize_embeddings(const EmbeddingTable& raw, double l);

/// Deterministic in `spec.seed`. Each class gets a random direction a_c scaled
/// to norm l as its embedding; a random linear map W* (d x S, standard normal
/// entries) places the class center at W* a_c; instances are the center plus
/// isotropic Gaussian noise of scale sigma. Draw order from one SplitMix64
/// stream: seen embeddings, unseen embeddings (with rejection), W* row-major,
/// then seen_train, seen_test, unseen_test noise, each class-major.
GzslDataset generate_synthetic(const SyntheticSpec& spec);

/// Throws ValidationError on any broken invariant: shape agreement, label
/// range, embedding norms, finiteness, and domain disjointness (no class
/// embedding may appear in both tables).
void validate(const GzslDataset& ds);

void save_dataset(const GzslDataset& ds, const std::filesystem::path& dir);
GzslDataset load_dataset(const std::filesystem::path& dir);

/// Row i is the embedding of labels[i].
Matrix gather_targets(const LabeledSplit& split, const EmbeddingTable& table);

/// Deterministic interleaved split: row i goes to the holdout side when
/// floor((i+1)*fraction) > floor(i*fraction). Returns (kept, holdout).
std::pair<LabeledSplit, LabeledSplit> split_holdout(const LabeledSplit& split, double fraction);

}  // namespace sdgzsl
