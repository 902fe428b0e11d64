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

#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace zipper;

TEST_CASE("gcn on the four-vertex graph") {
  const ModelGraph m = build_model("gcn", 2, 2);
  const Graph g = test::g4();
  const auto out = run_dense<double>(m, g, test::ones(g, 2), test::identity_weights(m));
  CHECK(out.vertex == test::rows({{1, 1}, {2, 2}, {1, 1}, {0, 0}}));
}

TEST_CASE("single relu") {
  const ModelGraph m = parse_model("x = input() [domain=vertex, dim=2]\ny = relu(x)\nout = output(y)\n");
  FeatureSet<double> fs;
  fs.vertex = test::rows({{-1, 2}});
  const Graph g = Graph::from_edges(1, {});
  CHECK(run_dense<double>(m, g, fs, {}).vertex == test::rows({{0, 2}}));
}

TEST_CASE("max gather without in-edges") {
  const Graph g = test::g4();
  const ModelGraph raw = parse_model(
      "x = input() [domain=vertex, dim=2]\ne = scatter_src(x)\na = gather_max(e)\nout = output(a)\n");
  const auto fs = random_features<double>(g, 2, 4);
  const MatrixD a = run_dense<double>(raw, g, fs, {}).vertex;
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(a(3, 0) == -inf);
  CHECK(a(3, 1) == -inf);
  CHECK(a(1, 0) == std::max(fs.vertex(0, 0), fs.vertex(2, 0)));
  CHECK(a(0, 1) == fs.vertex(3, 1));

  const ModelGraph relu = parse_model(
      "x = input() [domain=vertex, dim=2]\ne = scatter_src(x)\na = gather_max(e)\n"
      "y = relu(a)\nout = output(y)\n");
  const MatrixD r = run_dense<double>(relu, g, fs, {}).vertex;
  CHECK(r(3, 0) == 0.0);
  CHECK(r(3, 1) == 0.0);
}

TEST_CASE("gcn equals relu of the adjacency triple product") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Graph g = gen_synthetic(SyntheticKind::rmat, 64, 300, seed);
    const ModelGraph m = build_model("gcn", 8, 5);
    const auto fs = random_features<double>(g, 8, seed);
    const auto w = random_weights<double>(m, seed + 100);
    MatrixD adj = MatrixD::Zero(64, 64);
    for (const auto& e : g.edges_from_out()) adj(e.dst, e.src) = 1;
    const MatrixD want = (adj * fs.vertex * w.at("W")).cwiseMax(0.0);
    const MatrixD got = run_dense<double>(m, g, fs, w).vertex;
    CHECK(compare<double>(got, want, 1e-10).pass);
  }
}

TEST_CASE("compare") {
  const MatrixD a = test::rows({{1, 2}, {3, 4}});
  const auto same = compare<double>(a, a, 1e-5);
  CHECK(same.pass);
  CHECK(same.max_rel_err == 0.0);

  MatrixD b = a;
  b(1, 0) += 1e-3;
  const auto off = compare<double>(a, b, 1e-5);
  CHECK_FALSE(off.pass);
  CHECK(off.worst_row == 1);
  CHECK(off.worst_col == 0);
  CHECK(off.message.find("(1, 0)") != std::string::npos);

  const MatrixD z = MatrixD::Zero(3, 3);
  const auto zero = compare<double>(z, z, 1e-5);
  CHECK(zero.pass);
  CHECK(zero.max_rel_err == 0.0);

  MatrixD inf = a;
  inf(0, 0) = -std::numeric_limits<double>::infinity();
  CHECK(compare<double>(inf, inf, 0).pass);
  CHECK_FALSE(compare<double>(inf, a, 1e-5).pass);
  CHECK_THROWS_AS(compare<double>(a, z, 1e-5), ShapeError);
}

TEST_CASE("missing weight") {
  const ModelGraph m = build_model("gcn", 2, 2);
  const Graph g = test::g4();
  CHECK_THROWS_AS(run_dense<double>(m, g, test::ones(g, 2), {}), ShapeError);
}

TEST_CASE("whole graph footprint of gcn") {
  const Graph g = test::g4();
  // x, agg, h, y over 4 vertices; msg over 4 edges; W
  CHECK(whole_graph_footprint(build_model("gcn", 2, 2), g) == 4 * 4 * 8 + 4 * 8 + 16);
}

TEST_CASE("rgcn uses the edge type slices") {
  const Graph g = assign_random_edge_types(test::g4(), kRelationalTypes, 3);
  const ModelGraph m = build_model("rgcn", 2, 2);
  const auto fs = random_features<double>(g, 2, 2);
  const auto w = random_weights<double>(m, 5);
  const auto out = run_dense<double>(m, g, fs, w).vertex;
  CHECK(out.rows() == 4);
  CHECK(out.allFinite());
}
