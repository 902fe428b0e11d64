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

#include <numeric>
#include <set>

#include "support.hpp"
#include "zipper/error.hpp"
#include "zipper/tiling.hpp"

using namespace zipper;

namespace {

std::vector<std::vector<std::size_t>> edge_counts(const TilingPlan& plan) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& p : plan.partitions) {
    out.emplace_back();
    for (const auto& t : p.tiles) out.back().push_back(t.num_edges());
  }
  return out;
}

void check_plan(const Graph& g, const TilingPlan& plan) {
  std::multiset<EdgeId> seen;
  for (const auto& p : plan.partitions) {
    for (const auto& t : p.tiles) {
      std::set<VertexId> used;
      for (std::size_t i = 0; i < t.edges.size(); ++i) {
        const auto& e = t.edges[i];
        const VertexId src = t.kept_sources[e.local_src];
        CHECK(src == g.edge_src(e.id));
        CHECK(p.dst_begin + e.local_dst == g.edge_dst(e.id));
        CHECK(src >= t.src_begin);
        CHECK(src < t.src_end);
        CHECK(g.edge_dst(e.id) < p.dst_end);
        used.insert(src);
        seen.insert(e.id);
        if (i > 0) {
          const auto& f = t.edges[i - 1];
          CHECK(std::pair(f.local_dst, f.local_src) <= std::pair(e.local_dst, e.local_src));
        }
      }
      if (plan.mode == TilingMode::sparse) {
        CHECK(std::vector<VertexId>(used.begin(), used.end()) == t.kept_sources);
      } else {
        CHECK(t.num_sources() == t.src_end - t.src_begin);
      }
    }
  }
  CHECK(seen.size() == g.num_edges());
  CHECK(std::set<EdgeId>(seen.begin(), seen.end()).size() == g.num_edges());
}

}  // namespace

TEST_CASE("regular plan of the four-vertex graph") {
  const auto plan = make_plan(test::g4(), 2, 2, TilingMode::regular);
  CHECK(edge_counts(plan) == std::vector<std::vector<std::size_t>>{{1, 2}, {1, 0}});
  check_plan(test::g4(), plan);
  CHECK(traffic_stats(plan, 1, 4).src_vertex_loads == 8);
}

TEST_CASE("sparse plan drops empty tiles") {
  const auto plan = make_plan(test::g4(), 2, 2, TilingMode::sparse);
  CHECK(edge_counts(plan) == std::vector<std::vector<std::size_t>>{{1, 2}, {1}});
  CHECK(plan.partitions[0].tiles[0].kept_sources == std::vector<VertexId>{0});
  CHECK(plan.partitions[0].tiles[1].kept_sources == std::vector<VertexId>{2, 3});
  CHECK(plan.partitions[1].tiles[0].kept_sources == std::vector<VertexId>{0});
  check_plan(test::g4(), plan);
  CHECK(traffic_stats(plan, 1, 4).src_vertex_loads == 4);
}

TEST_CASE("single tile plan") {
  const Graph g = test::g4();
  const auto plan = make_plan(g, 4, 4, TilingMode::regular);
  REQUIRE(plan.num_tiles() == 1);
  CHECK(plan.num_edges() == 4);
  const auto r = traffic_stats(plan, 8, 4);
  CHECK(r.src_vertex_loads == 4);
  CHECK(r.dst_vertex_loads == 4);
  CHECK(r.edge_loads == 4);
  CHECK(r.total_bytes == (4 + 4) * 8 * 4 + 4 * kEdgeRecordBytes);
}

TEST_CASE("plan invariants on random graphs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Graph g = gen_synthetic(SyntheticKind::rmat, 300, 2000, seed);
    for (auto mode : {TilingMode::regular, TilingMode::sparse}) {
      for (std::size_t d : {1, 7, 64, 300}) check_plan(g, make_plan(g, d, 33, mode));
    }
    const auto reg = traffic_stats(make_plan(g, 64, 32, TilingMode::regular), 16, 4);
    const auto sp = traffic_stats(make_plan(g, 64, 32, TilingMode::sparse), 16, 4);
    CHECK(sp.src_vertex_loads <= reg.src_vertex_loads);
    CHECK(sp.edge_loads == reg.edge_loads);
  }
}

TEST_CASE("reordering helps sparse tiling on average") {
  double plain = 0, reordered = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Graph g = gen_synthetic(SyntheticKind::rmat, 1024, 8192, seed);
    plain += static_cast<double>(traffic_stats(make_plan(g, 64, 64, TilingMode::sparse), 16, 4).src_vertex_loads);
    const Graph h = degree_reorder(g).first;
    reordered += static_cast<double>(traffic_stats(make_plan(h, 64, 64, TilingMode::sparse), 16, 4).src_vertex_loads);
  }
  CHECK(reordered <= plain);
}

TEST_CASE("invalid partition size") {
  CHECK_THROWS_AS(make_plan(test::g4(), 0, 2, TilingMode::sparse), ParameterError);
}

TEST_CASE("capacity checks") {
  const ModelGraph gcn = build_model("gcn", 16, 16);
  CHECK_NOTHROW(check_capacity(make_plan(test::g4(), 2, 2, TilingMode::sparse), HardwareConfig{}, gcn));
  CHECK_NOTHROW(check_capacity(TilingPlan{}, HardwareConfig{}, gcn));

  TilingPlan big;
  big.partitions.emplace_back();
  big.partitions[0].tiles.emplace_back();
  big.partitions[0].tiles[0].tile_id = 5;
  big.partitions[0].tiles[0].edges.resize(10'000'000);
  try {
    check_capacity(big, HardwareConfig{}, gcn);
    FAIL("expected a capacity error");
  } catch (const CapacityError& e) {
    CHECK(e.tile_id() == 5);
    CHECK(e.required() == 10'000'000ull * kEdgeRecordBytes);
    CHECK(e.available() == 262144);
  }

  HardwareConfig tiny;
  tiny.uem_bytes = 64;
  CHECK_THROWS_AS(check_capacity(make_plan(test::g4(), 2, 2, TilingMode::sparse), tiny, gcn), CapacityError);
}

TEST_CASE("footprint of gcn rows") {
  const Footprint fp = model_footprint(build_model("gcn", 16, 8));
  // x, agg, h, y per vertex; the scattered message per edge
  CHECK(fp.vertex_row_bytes == (16 + 16 + 8 + 8) * 4);
  CHECK(fp.edge_row_bytes == 16 * 4);
  CHECK(fp.weight_bytes == 16 * 8 * 4);
}

TEST_CASE("automatic partition size fits") {
  const Graph g = gen_synthetic(SyntheticKind::rmat, 4096, 32768, 1);
  const ModelGraph m = build_model("gat", 128, 128);
  const std::size_t n = auto_partition_size(g, HardwareConfig{}, m);
  CHECK(n >= 1);
  CHECK(n <= g.num_vertices());
  const Footprint fp = model_footprint(m);
  CHECK(n * 2 * fp.vertex_row_bytes + fp.weight_bytes <= HardwareConfig{}.uem_bytes / 2);
}
