/*
Copyright 2026 The Zipper Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef ZIPPER_KERNELS_HPP
#define ZIPPER_KERNELS_HPP

#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "zipper/error.hpp"

namespace zipper {

/// Row-major dense matrix: one row per vertex or edge, one column per feature.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

enum class ElwKind { add, sub, mul, div, max, exp, relu, sigmoid };
enum class ReduceKind { sum, max };

constexpr bool is_unary(ElwKind k) {
  return k == ElwKind::exp || k == ElwKind::relu || k == ElwKind::sigmoid;
}

// Scalar semantics of the primitive operations. Every executor (dense oracle,
// IR interpreter, tiled runtime) evaluates through these so that all of them
// agree on NaN and infinity handling.

template <typename Scalar>
Scalar apply_unary(ElwKind kind, Scalar x) {
  switch (kind) {
    case ElwKind::exp:
      return std::exp(x);
    case ElwKind::relu:
      return x > Scalar(0) ? x : Scalar(0);
    case ElwKind::sigmoid:
      return Scalar(1) / (Scalar(1) + std::exp(-x));
    default:
      throw ShapeError("binary operation applied as unary");
  }
}

template <typename Scalar>
Scalar apply_binary(ElwKind kind, Scalar a, Scalar b) {
  switch (kind) {
    case ElwKind::add:
      return a + b;
    case ElwKind::sub:
      return a - b;
    case ElwKind::mul:
      return a * b;
    case ElwKind::div:
      return a / b;
    case ElwKind::max:
      return a > b ? a : b;
    default:
      throw ShapeError("unary operation applied as binary");
  }
}

template <typename Scalar>
constexpr Scalar reduce_identity(ReduceKind kind) {
  return kind == ReduceKind::sum ? Scalar(0) : -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
Scalar reduce(ReduceKind kind, Scalar acc, Scalar v) {
  return kind == ReduceKind::sum ? acc + v : (v > acc ? v : acc);
}

/// Output width of a binary elementwise op; a width-1 operand broadcasts.
inline Eigen::Index broadcast_width(Eigen::Index a, Eigen::Index b) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw ShapeError("elementwise operand widths " + std::to_string(a) + " and " +
                   std::to_string(b) + " do not broadcast");
}

template <typename Scalar>
Matrix<Scalar> elementwise(ElwKind kind, const Eigen::Ref<const Matrix<Scalar>>& a) {
  Matrix<Scalar> out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = apply_unary(kind, a(i, j));
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> elementwise(ElwKind kind, const Eigen::Ref<const Matrix<Scalar>>& a,
                           const Eigen::Ref<const Matrix<Scalar>>& b) {
  if (a.rows() != b.rows()) throw ShapeError("elementwise operands differ in row count");
  const Eigen::Index w = broadcast_width(a.cols(), b.cols());
  Matrix<Scalar> out(a.rows(), w);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      out(i, j) = apply_binary(kind, a(i, a.cols() == 1 ? 0 : j), b(i, b.cols() == 1 ? 0 : j));
    }
  }
  return out;
}

/// Row-by-row product with a fixed ascending accumulation order over the inner
/// dimension, so a row's result does not depend on how many rows are batched.
template <typename Scalar>
void rowwise_product_into(const Eigen::Ref<const Matrix<Scalar>>& rows,
                          const Eigen::Ref<const Matrix<Scalar>>& weight,
                          Eigen::Ref<Matrix<Scalar>> out) {
  if (rows.cols() != weight.rows()) {
    throw ShapeError("product inner dimensions differ: " + std::to_string(rows.cols()) + " vs " +
                     std::to_string(weight.rows()));
  }
  const Eigen::Index n = rows.rows(), k = rows.cols(), m = weight.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = Scalar(0);
    for (Eigen::Index t = 0; t < k; ++t) {
      const Scalar x = rows(i, t);
      for (Eigen::Index j = 0; j < m; ++j) out(i, j) += x * weight(t, j);
    }
  }
}

template <typename Scalar>
Matrix<Scalar> rowwise_product(const Eigen::Ref<const Matrix<Scalar>>& rows,
                               const Eigen::Ref<const Matrix<Scalar>>& weight) {
  Matrix<Scalar> out(rows.rows(), weight.cols());
  rowwise_product_into<Scalar>(rows, weight, out);
  return out;
}

/// Edge-type-indexed product. `stacked` holds the per-type weights on top of
/// each other, i.e. (num_types * k) x m; row i uses slice types(i).
template <typename Scalar, typename TypeFn>
Matrix<Scalar> batched_product(const Eigen::Ref<const Matrix<Scalar>>& rows,
                               const Eigen::Ref<const Matrix<Scalar>>& stacked, int num_types,
                               TypeFn&& type_of_row) {
  const Eigen::Index k = rows.cols();
  if (num_types < 1 || stacked.rows() != k * num_types) {
    throw ShapeError("batched weight has " + std::to_string(stacked.rows()) +
                     " rows, expected types x " + std::to_string(k));
  }
  Matrix<Scalar> out(rows.rows(), stacked.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const int t = static_cast<int>(type_of_row(i));
    if (t >= num_types) throw ShapeError("edge type beyond batched weight count");
    auto dst = out.row(i);
    rowwise_product_into<Scalar>(rows.row(i), stacked.middleRows(t * k, k), dst);
  }
  return out;
}

}  // namespace zipper

#endif  // ZIPPER_KERNELS_HPP
