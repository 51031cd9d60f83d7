#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "sdgzsl/errors.hpp"

namespace sdgzsl {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// N x d, one instance feature vector per row.
using FeatureMatrix = Matrix;
/// C x S, one class semantic embedding per row.
using EmbeddingTable = Matrix;

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
  if (!m.allFinite()) {
    throw DomainError(what + ": non-finite value in " + shape_str(m));
  }
}

template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_str(a) + " by " + shape_str(b));
  }
  MatrixX<typename DerivedA::Scalar> out = a * b;
  require_finite(out, "matmul");
  return out;
}

template <typename Derived>
typename Derived::Scalar l2_norm(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) throw ShapeError("l2_norm: empty vector");
  return v.norm();
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar sq_dist(const Eigen::MatrixBase<DerivedA>& a,
                                  const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("sq_dist: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  return (a.reshaped() - b.reshaped()).squaredNorm();
}

template <typename Scalar>
struct MeanStd {
  Scalar mean{};
  Scalar std{};
};

/// Mean and population (1/N) standard deviation, two passes.
template <typename Scalar>
MeanStd<Scalar> mean_and_popstd(std::span<const Scalar> xs) {
  if (xs.empty()) throw DomainError("mean_and_popstd: empty input");
  const auto n = static_cast<Scalar>(xs.size());
  Scalar sum = 0;
  for (Scalar x : xs) sum += x;
  const Scalar mean = sum / n;
  Scalar ss = 0;
  for (Scalar x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

template <typename Derived>
MeanStd<typename Derived::Scalar> mean_and_popstd(const Eigen::MatrixBase<Derived>& xs) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> flat = xs.reshaped();
  return mean_and_popstd(std::span<const Scalar>(flat.data(), static_cast<std::size_t>(flat.size())));
}

}  // namespace sdgzsl
