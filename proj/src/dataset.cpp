#include "sdgzsl/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

#include "sdgzsl/binary_io.hpp"
#include "sdgzsl/rng.hpp"

namespace sdgzsl {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormatTag = "sdgzsl-dataset";
constexpr int kFormatVersion = 1;

Vector random_direction(SplitMix64& rng, Eigen::Index dim, double l) {
  Vector a(dim);
  for (;;) {
    for (Eigen::Index k = 0; k < dim; ++k) a(k) = rng.normal();
    const double n = a.norm();
    if (n > 0.0) return a * (l / n);
  }
}

void fill_split(SplitMix64& rng, const Matrix& centers, std::size_t per_class, double sigma,
                LabeledSplit& out) {
  const auto n_classes = static_cast<std::size_t>(centers.rows());
  const Eigen::Index d = centers.cols();
  out.features.resize(static_cast<Eigen::Index>(n_classes * per_class), d);
  out.labels.resize(n_classes * per_class);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (Eigen::Index k = 0; k < d; ++k) {
        out.features(row, k) = centers(static_cast<Eigen::Index>(c), k) + sigma * rng.normal();
      }
      out.labels[static_cast<std::size_t>(row)] = static_cast<std::uint32_t>(c);
    }
  }
}

void check_split(const LabeledSplit& s, const std::string& name, Eigen::Index d, std::size_t n_classes,
                 std::vector<std::string>& problems) {
  if (static_cast<std::size_t>(s.features.rows()) != s.labels.size()) {
    problems.push_back(name + ": " + std::to_string(s.features.rows()) + " feature rows but " +
                       std::to_string(s.labels.size()) + " labels");
  }
  if (s.features.rows() > 0 && s.features.cols() != d) {
    problems.push_back(name + ": feature dim " + std::to_string(s.features.cols()) + " != d=" + std::to_string(d));
  }
  if (!s.features.allFinite()) problems.push_back(name + ": non-finite feature value");
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    if (s.labels[i] >= n_classes) {
      problems.push_back(name + ": label " + std::to_string(s.labels[i]) + " at row " + std::to_string(i) +
                         " out of range [0, " + std::to_string(n_classes) + ")");
      break;
    }
  }
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> spec_violations(const SyntheticSpec& spec) {
  std::vector<std::string> v;
  if (spec.n_seen_classes < 2) v.push_back("n_seen_classes must be >= 2 (got " + std::to_string(spec.n_seen_classes) + ")");
  if (spec.n_unseen_classes < 1) v.push_back("n_unseen_classes must be >= 1");
  if (spec.feature_dim < 1) v.push_back("feature_dim must be >= 1");
  if (spec.semantic_dim < 1) v.push_back("semantic_dim must be >= 1");
  if (spec.per_class_train < 1) v.push_back("per_class_train must be >= 1");
  if (spec.per_class_test < 1) v.push_back("per_class_test must be >= 1");
  if (!(spec.cluster_spread >= 0.0) || !std::isfinite(spec.cluster_spread)) {
    v.push_back("cluster_spread must be finite and >= 0");
  }
  if (!(spec.unified_norm_l > 0.0) || !std::isfinite(spec.unified_norm_l)) {
    v.push_back("unified_norm_l must be finite and > 0");
  }
  return v;
}

EmbeddingTable normalize_embeddings(const EmbeddingTable& raw, double l) {
  if (!(l > 0.0)) throw DomainError("normalize_embeddings: l must be > 0");
  EmbeddingTable out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double n = raw.row(r).norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw DomainError("normalize_embeddings: row " + std::to_string(r) + " has zero or non-finite norm");
    }
    out.row(r) = raw.row(r) * (l / n);
  }
  return out;
}

GzslDataset generate_synthetic(const SyntheticSpec& spec) {
  if (auto problems = spec_violations(spec); !problems.empty()) {
    throw ValidationError("invalid synthetic spec: " + join(problems));
  }
  const auto S = static_cast<Eigen::Index>(spec.semantic_dim);
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  const double l = spec.unified_norm_l;
  SplitMix64 rng(spec.seed);

  GzslDataset ds;
  ds.unified_norm_l = l;
  ds.seen_embeddings.resize(static_cast<Eigen::Index>(spec.n_seen_classes), S);
  for (Eigen::Index c = 0; c < ds.seen_embeddings.rows(); ++c) {
    ds.seen_embeddings.row(c) = random_direction(rng, S, l).transpose();
  }

  constexpr int kMaxAttempts = 100000;
  ds.unseen_embeddings.resize(static_cast<Eigen::Index>(spec.n_unseen_classes), S);
  for (Eigen::Index u = 0; u < ds.unseen_embeddings.rows(); ++u) {
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw DomainError("generate_synthetic: could not draw unseen class " + std::to_string(u) +
                          " with cosine <= " + std::to_string(kMaxSeenUnseenCosine) + " to every seen class");
      }
      const Vector a = random_direction(rng, S, l);
      const double max_cos = (ds.seen_embeddings * a).maxCoeff() / (l * l);
      if (max_cos <= kMaxSeenUnseenCosine) {
        ds.unseen_embeddings.row(u) = a.transpose();
        break;
      }
    }
  }

  Matrix w(d, S);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < S; ++c) w(r, c) = rng.normal();
  }
  const Matrix seen_centers = ds.seen_embeddings * w.transpose();
  const Matrix unseen_centers = ds.unseen_embeddings * w.transpose();

  fill_split(rng, seen_centers, spec.per_class_train, spec.cluster_spread, ds.seen_train);
  fill_split(rng, seen_centers, spec.per_class_test, spec.cluster_spread, ds.seen_test);
  fill_split(rng, unseen_centers, spec.per_class_test, spec.cluster_spread, ds.unseen_test);
  return ds;
}

void validate(const GzslDataset& ds) {
  std::vector<std::string> problems;
  const Eigen::Index S = ds.seen_embeddings.cols();
  const Eigen::Index d = ds.seen_train.features.cols();
  if (!(ds.unified_norm_l > 0.0) || !std::isfinite(ds.unified_norm_l)) problems.push_back("l must be finite and > 0");
  if (ds.seen_embeddings.rows() == 0) problems.push_back("no seen classes");
  if (ds.unseen_embeddings.rows() == 0) problems.push_back("no unseen classes");
  if (ds.unseen_embeddings.cols() != S) {
    problems.push_back("unseen embedding dim " + std::to_string(ds.unseen_embeddings.cols()) + " != S=" + std::to_string(S));
  }
  if (!ds.seen_embeddings.allFinite() || !ds.unseen_embeddings.allFinite()) problems.push_back("non-finite embedding value");
  check_split(ds.seen_train, "seen_train", d, ds.num_seen_classes(), problems);
  check_split(ds.seen_test, "seen_test", d, ds.num_seen_classes(), problems);
  check_split(ds.unseen_test, "unseen_test", d, ds.num_unseen_classes(), problems);

  const double tol = 1e-9 * std::max(1.0, ds.unified_norm_l);
  auto check_norms = [&](const EmbeddingTable& t, const std::string& name) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      if (std::abs(t.row(r).norm() - ds.unified_norm_l) > tol) {
        problems.push_back(name + " row " + std::to_string(r) + " norm != l");
        return;
      }
    }
  };
  check_norms(ds.seen_embeddings, "seen embedding");
  check_norms(ds.unseen_embeddings, "unseen embedding");

  if (ds.unseen_embeddings.cols() == S) {
    for (Eigen::Index u = 0; u < ds.unseen_embeddings.rows(); ++u) {
      for (Eigen::Index s = 0; s < ds.seen_embeddings.rows(); ++s) {
        if ((ds.unseen_embeddings.row(u) - ds.seen_embeddings.row(s)).squaredNorm() <= 1e-24) {
          problems.push_back("unseen class " + std::to_string(u) + " duplicates seen class " + std::to_string(s) +
                             " (label sets must be disjoint)");
        }
      }
    }
  }
  if (!problems.empty()) throw ValidationError("invalid dataset: " + join(problems));
}

void save_dataset(const GzslDataset& ds, const fs::path& dir) {
  validate(ds);
  fs::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["format"] = kFormatTag;
  meta["version"] = kFormatVersion;
  meta["endianness"] = "little";
  meta["d"] = ds.feature_dim();
  meta["S"] = ds.semantic_dim();
  meta["C_s"] = ds.num_seen_classes();
  meta["C_u"] = ds.num_unseen_classes();
  meta["n_seen_train"] = ds.seen_train.size();
  meta["n_seen_test"] = ds.seen_test.size();
  meta["n_unseen_test"] = ds.unseen_test.size();
  meta["l"] = ds.unified_norm_l;
  io::write_file(dir / "meta.json", meta.dump(2) + "\n");

  io::write_matrix_f32(dir / "seen_emb.f32", ds.seen_embeddings);
  io::write_matrix_f32(dir / "unseen_emb.f32", ds.unseen_embeddings);
  const std::pair<const char*, const LabeledSplit*> splits[] = {
      {"seen_train", &ds.seen_train}, {"seen_test", &ds.seen_test}, {"unseen_test", &ds.unseen_test}};
  for (const auto& [name, split] : splits) {
    io::write_matrix_f32(dir / (std::string(name) + ".f32"), split->features);
    io::write_labels_u32(dir / (std::string(name) + ".labels"), split->labels);
  }
}

GzslDataset load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(meta_path.string() + ": " + e.what());
  }

  auto field = [&](const char* key) -> std::uint64_t {
    if (!meta.contains(key) || !meta[key].is_number_unsigned()) {
      throw LoadError(meta_path.string() + ": missing or non-integer field '" + key + "'");
    }
    return meta[key].get<std::uint64_t>();
  };
  if (meta.value("format", std::string()) != kFormatTag) throw LoadError(meta_path.string() + ": not an sdgzsl dataset header");
  if (meta.value("endianness", std::string()) != "little") throw LoadError(meta_path.string() + ": unsupported endianness tag");
  const auto d = static_cast<Eigen::Index>(field("d"));
  const auto S = static_cast<Eigen::Index>(field("S"));
  const auto c_s = static_cast<Eigen::Index>(field("C_s"));
  const auto c_u = static_cast<Eigen::Index>(field("C_u"));
  double l = 1.0;
  if (meta.contains("l")) {
    if (!meta["l"].is_number()) throw LoadError(meta_path.string() + ": field 'l' is not a number");
    l = meta["l"].get<double>();
  }
  if (!(l > 0.0) || !std::isfinite(l)) throw LoadError(meta_path.string() + ": l must be finite and > 0");

  auto load_matrix = [&](const std::string& file, Eigen::Index rows, Eigen::Index cols) {
    Matrix m = io::read_matrix_f32(dir / file);
    if (m.rows() != rows || m.cols() != cols) {
      throw LoadError((dir / file).string() + ": header shape " + shape_str(m) + " does not match meta.json " +
                      shape_str(rows, cols));
    }
    return m;
  };
  auto load_split = [&](const std::string& name, const char* count_key) {
    const auto n = static_cast<Eigen::Index>(field(count_key));
    LabeledSplit s;
    s.features = load_matrix(name + ".f32", n, d);
    s.labels = io::read_labels_u32(dir / (name + ".labels"), static_cast<std::size_t>(n));
    return s;
  };

  GzslDataset ds;
  ds.unified_norm_l = l;
  try {
    ds.seen_embeddings = normalize_embeddings(load_matrix("seen_emb.f32", c_s, S), l);
    ds.unseen_embeddings = normalize_embeddings(load_matrix("unseen_emb.f32", c_u, S), l);
  } catch (const DomainError& e) {
    throw LoadError(dir.string() + ": " + e.what());
  }
  ds.seen_train = load_split("seen_train", "n_seen_train");
  ds.seen_test = load_split("seen_test", "n_seen_test");
  ds.unseen_test = load_split("unseen_test", "n_unseen_test");
  try {
    validate(ds);
  } catch (const ValidationError& e) {
    throw LoadError(dir.string() + ": " + e.what());
  }
  return ds;
}

Matrix gather_targets(const LabeledSplit& split, const EmbeddingTable& table) {
  Matrix z(static_cast<Eigen::Index>(split.size()), table.cols());
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split.labels[i] >= table.rows()) {
      throw ShapeError("gather_targets: label " + std::to_string(split.labels[i]) + " outside table " + shape_str(table));
    }
    z.row(static_cast<Eigen::Index>(i)) = table.row(split.labels[i]);
  }
  return z;
}

std::pair<LabeledSplit, LabeledSplit> split_holdout(const LabeledSplit& split, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("holdout fraction must lie in [0, 1)");
  std::vector<Eigen::Index> kept, held;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const bool hold = std::floor(static_cast<double>(i + 1) * fraction) > std::floor(static_cast<double>(i) * fraction);
    (hold ? held : kept).push_back(static_cast<Eigen::Index>(i));
  }
  auto take = [&](const std::vector<Eigen::Index>& idx) {
    LabeledSplit s;
    s.features = split.features(idx, Eigen::all);
    for (auto i : idx) s.labels.push_back(split.labels[static_cast<std::size_t>(i)]);
    return s;
  };
  return {take(kept), take(held)};
}

}  // namespace sdgzsl
