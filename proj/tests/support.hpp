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

#ifndef ZIPPER_TESTS_SUPPORT_HPP
#define ZIPPER_TESTS_SUPPORT_HPP

#include "zipper/codegen.hpp"
#include "zipper/features.hpp"
#include "zipper/graph.hpp"
#include "zipper/model.hpp"
#include "zipper/oracle.hpp"

namespace zipper::test {

// 0->1, 0->2, 2->1, 3->0
inline Graph g4() {
  return Graph::from_edges(4, {{0, 1, 0}, {0, 2, 0}, {2, 1, 0}, {3, 0, 0}});
}

inline FeatureSet<double> ones(const Graph& g, int f) {
  FeatureSet<double> fs;
  fs.vertex = MatrixD::Ones(static_cast<Eigen::Index>(g.num_vertices()), f);
  return fs;
}

inline WeightSet<double> identity_weights(const ModelGraph& m) {
  WeightSet<double> w;
  for (const auto& n : m.nodes()) {
    if (n.kind == OpKind::input && n.out.domain == Domain::weight) {
      w[n.name] = MatrixD::Identity(static_cast<Eigen::Index>(n.out.rows) * n.out.batches, n.out.dim);
    }
  }
  return w;
}

inline MatrixD rows(std::initializer_list<std::initializer_list<double>> r) {
  MatrixD m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

/// Features (and edge features when the model reads any) for a model.
template <typename Scalar>
FeatureSet<Scalar> features_for(const ModelGraph& m, const Graph& g, std::uint64_t seed) {
  int vdim = 0, edim = 0;
  for (const auto& n : m.nodes()) {
    if (n.kind != OpKind::input) continue;
    if (n.out.domain == Domain::vertex) vdim = n.out.dim;
    if (n.out.domain == Domain::edge) edim = n.out.dim;
  }
  return random_features<Scalar>(g, vdim, seed, edim);
}

/// Relational models need typed edges.
inline Graph typed_for(const ModelGraph& m, const Graph& g, std::uint64_t seed) {
  for (const auto& n : m.nodes()) {
    if (n.kind == OpKind::bmm) return assign_random_edge_types(g, kRelationalTypes, seed);
  }
  return g;
}

}  // namespace zipper::test

#endif  // ZIPPER_TESTS_SUPPORT_HPP
