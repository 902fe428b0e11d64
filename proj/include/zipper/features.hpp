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

#ifndef ZIPPER_FEATURES_HPP
#define ZIPPER_FEATURES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zipper/graph.hpp"
#include "zipper/kernels.hpp"
#include "zipper/random.hpp"

namespace zipper {

/// Vertex embeddings plus optional edge embeddings, rows indexed by id.
template <typename Scalar>
struct FeatureSet {
  Matrix<Scalar> vertex;
  std::optional<Matrix<Scalar>> edge;

  Eigen::Index embedding_dim() const { return vertex.cols(); }

  template <typename Other>
  FeatureSet<Other> cast() const {
    FeatureSet<Other> out;
    out.vertex = vertex.template cast<Other>();
    if (edge) out.edge = edge->template cast<Other>();
    return out;
  }
};

/// Named weight matrices. Edge-type-indexed weights are stored stacked,
/// (types * rows) x cols.
template <typename Scalar>
using WeightSet = std::map<std::string, Matrix<Scalar>>;

template <typename Scalar>
Matrix<Scalar> uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi,
                              Rng& rng) {
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<Scalar>(rng.uniform(lo, hi));
  }
  return m;
}

/// Seeded features uniform in [-1, 1]; edge features only when edge_dim > 0.
template <typename Scalar>
FeatureSet<Scalar> random_features(const Graph& g, Eigen::Index dim, std::uint64_t seed,
                                   Eigen::Index edge_dim = 0) {
  if (dim < 1) throw ParameterError("embedding dimension must be at least 1");
  Rng rng(seed);
  FeatureSet<Scalar> fs;
  fs.vertex = uniform_matrix<Scalar>(static_cast<Eigen::Index>(g.num_vertices()), dim, -1.0, 1.0, rng);
  if (edge_dim > 0) {
    fs.edge = uniform_matrix<Scalar>(static_cast<Eigen::Index>(g.num_edges()), edge_dim, -1.0, 1.0, rng);
  }
  return fs;
}

/// Rows of the features rearranged to follow a vertex relabelling.
template <typename Scalar>
FeatureSet<Scalar> permute_features(const FeatureSet<Scalar>& fs, const Graph& original,
                                    const Graph& relabelled, const Permutation& perm) {
  FeatureSet<Scalar> out;
  out.vertex.resize(fs.vertex.rows(), fs.vertex.cols());
  for (Eigen::Index n = 0; n < fs.vertex.rows(); ++n) {
    out.vertex.row(n) = fs.vertex.row(perm.old_of_new[static_cast<std::size_t>(n)]);
  }
  if (fs.edge) {
    const auto map = edge_correspondence(original, relabelled, perm);
    out.edge = Matrix<Scalar>(fs.edge->rows(), fs.edge->cols());
    for (std::size_t e = 0; e < map.size(); ++e) {
      out.edge->row(static_cast<Eigen::Index>(e)) = fs.edge->row(map[e]);
    }
  }
  return out;
}

}  // namespace zipper

#endif  // ZIPPER_FEATURES_HPP
