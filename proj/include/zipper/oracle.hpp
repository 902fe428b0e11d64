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

#ifndef ZIPPER_ORACLE_HPP
#define ZIPPER_ORACLE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "zipper/features.hpp"
#include "zipper/graph.hpp"
#include "zipper/kernels.hpp"
#include "zipper/model.hpp"

namespace zipper {

template <typename Scalar>
const Matrix<Scalar>& lookup_weight(const WeightSet<Scalar>& weights, const ModelOp& w) {
  auto it = weights.find(w.name);
  if (it == weights.end()) throw ShapeError("missing weight '" + w.name + "'");
  const Eigen::Index rows = static_cast<Eigen::Index>(w.out.rows) * w.out.batches;
  if (it->second.rows() != rows || it->second.cols() != w.out.dim) {
    throw ShapeError("weight '" + w.name + "' is " + std::to_string(it->second.rows()) + "x" +
                     std::to_string(it->second.cols()) + ", expected " + std::to_string(rows) +
                     "x" + std::to_string(w.out.dim));
  }
  return it->second;
}

/// Binds a model input marker to the matching feature matrix.
template <typename Scalar>
const Matrix<Scalar>& lookup_input(const FeatureSet<Scalar>& feats, const ModelOp& in,
                                   std::size_t num_vertices, std::size_t num_edges) {
  const Matrix<Scalar>* src = nullptr;
  std::size_t rows = num_vertices;
  if (in.out.domain == Domain::vertex) {
    src = &feats.vertex;
  } else {
    if (!feats.edge) throw ShapeError("input '" + in.name + "' needs edge features");
    src = &*feats.edge;
    rows = num_edges;
  }
  if (static_cast<std::size_t>(src->rows()) != rows || src->cols() != in.out.dim) {
    throw ShapeError("features for '" + in.name + "' are " + std::to_string(src->rows()) + "x" +
                     std::to_string(src->cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(in.out.dim));
  }
  return *src;
}

/// Whole-graph evaluation over full V x F and E x F tensors. Gathers reduce
/// every destination's in-edges in ascending edge-id order.
template <typename Scalar>
FeatureSet<Scalar> run_dense(const ModelGraph& m, const Graph& g, const FeatureSet<Scalar>& feats,
                             const WeightSet<Scalar>& weights) {
  const std::size_t V = g.num_vertices(), E = g.num_edges();
  std::vector<Matrix<Scalar>> val(m.size());
  FeatureSet<Scalar> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const ModelOp& n = m.node(static_cast<int>(i));
    auto arg = [&](int k) -> const Matrix<Scalar>& {
      return val[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])];
    };
    auto weight = [&](int k) -> const Matrix<Scalar>& {
      return lookup_weight(weights, m.node(n.inputs[static_cast<std::size_t>(k)]));
    };
    switch (n.kind) {
      case OpKind::input:
        if (n.out.domain != Domain::weight) val[i] = lookup_input(feats, n, V, E);
        break;
      case OpKind::output:
        out.vertex = arg(0);
        break;
      case OpKind::matmul:
        val[i] = rowwise_product<Scalar>(arg(0), weight(1));
        break;
      case OpKind::bmm: {
        const auto& w = m.node(n.inputs[1]);
        val[i] = batched_product<Scalar>(arg(0), weight(1), w.out.batches,
                                         [&](Eigen::Index e) { return g.edge_type(static_cast<EdgeId>(e)); });
        break;
      }
      case OpKind::scatter_src:
      case OpKind::scatter_dst: {
        const auto& x = arg(0);
        val[i].resize(static_cast<Eigen::Index>(E), x.cols());
        for (EdgeId e = 0; e < E; ++e) {
          const VertexId v = n.kind == OpKind::scatter_src ? g.edge_src(e) : g.edge_dst(e);
          val[i].row(e) = x.row(v);
        }
        break;
      }
      case OpKind::gather: {
        const auto& x = arg(0);
        val[i] = Matrix<Scalar>::Constant(static_cast<Eigen::Index>(V), x.cols(),
                                          reduce_identity<Scalar>(n.reduce));
        for (VertexId v = 0; v < V; ++v) {
          for (EdgeId e : g.in_edges(v)) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
              val[i](v, j) = reduce(n.reduce, val[i](v, j), x(e, j));
            }
          }
        }
        break;
      }
      case OpKind::fused:
        throw ModelError("fused node '" + n.name + "' must be defused before evaluation");
      default:
        if (n.inputs.size() == 1) {
          val[i] = elementwise<Scalar>(elw_kind(n.kind), arg(0));
        } else {
          val[i] = elementwise<Scalar>(elw_kind(n.kind), arg(0), arg(1));
        }
        break;
    }
  }
  return out;
}

struct CompareReport {
  double max_rel_err = 0;
  bool pass = true;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  std::string message;
};

/// Elementwise relative error |a-b| / max(|a|, |b|, 1e-9). Values that agree
/// on being NaN, or are equal infinities, count as exact matches.
template <typename Scalar>
CompareReport compare(const Matrix<Scalar>& a, const Matrix<Scalar>& b, double rel_tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("compare: shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  CompareReport r;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double x = static_cast<double>(a(i, j)), y = static_cast<double>(b(i, j));
      double err = 0;
      if (std::isnan(x) || std::isnan(y)) {
        err = std::isnan(x) && std::isnan(y) ? 0 : std::numeric_limits<double>::infinity();
      } else if (std::isinf(x) || std::isinf(y)) {
        err = x == y ? 0 : std::numeric_limits<double>::infinity();
      } else {
        err = std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-9});
      }
      if (err > r.max_rel_err || (r.worst_row < 0 && err > rel_tol)) {
        r.max_rel_err = err;
        r.worst_row = i;
        r.worst_col = j;
      }
    }
  }
  r.pass = r.max_rel_err <= rel_tol;
  if (r.pass) {
    r.message = "pass (max relative error " + std::to_string(r.max_rel_err) + ")";
  } else {
    r.message = "fail at (" + std::to_string(r.worst_row) + ", " + std::to_string(r.worst_col) +
                "): relative error " + std::to_string(r.max_rel_err);
  }
  return r;
}

template <typename Scalar>
CompareReport compare(const FeatureSet<Scalar>& a, const FeatureSet<Scalar>& b, double rel_tol) {
  return compare<Scalar>(a.vertex, b.vertex, rel_tol);
}

/// Bytes to hold every whole-graph tensor of the model at once (32-bit).
inline std::uint64_t whole_graph_footprint(const ModelGraph& m, const Graph& g) {
  std::uint64_t bytes = 0;
  for (const auto& n : m.nodes()) {
    if (n.kind == OpKind::output) continue;
    const std::uint64_t row = static_cast<std::uint64_t>(n.out.dim) * 4;
    switch (n.out.domain) {
      case Domain::vertex: bytes += row * g.num_vertices(); break;
      case Domain::edge: bytes += row * g.num_edges(); break;
      case Domain::weight:
        bytes += row * static_cast<std::uint64_t>(n.out.rows) * static_cast<std::uint64_t>(n.out.batches);
        break;
      case Domain::scalar: break;
    }
  }
  return bytes;
}

}  // namespace zipper

#endif  // ZIPPER_ORACLE_HPP
