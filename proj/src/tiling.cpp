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

#include "zipper/tiling.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "zipper/error.hpp"

namespace zipper {

TilingMode parse_tiling_mode(const std::string& name) {
  if (name == "regular") return TilingMode::regular;
  if (name == "sparse") return TilingMode::sparse;
  throw ParameterError("unknown tiling mode '" + name + "'");
}

const char* to_string(TilingMode mode) { return mode == TilingMode::regular ? "regular" : "sparse"; }

std::size_t TilingPlan::num_tiles() const {
  std::size_t n = 0;
  for (const auto& p : partitions) n += p.tiles.size();
  return n;
}

std::size_t TilingPlan::num_edges() const {
  std::size_t n = 0;
  for (const auto& p : partitions) {
    for (const auto& t : p.tiles) n += t.num_edges();
  }
  return n;
}

std::size_t TilingPlan::max_tile_edges() const {
  std::size_t n = 0;
  for (const auto& p : partitions) {
    for (const auto& t : p.tiles) n = std::max(n, t.num_edges());
  }
  return n;
}

TilingPlan make_plan(const Graph& g, std::size_t dst_size, std::size_t src_size, TilingMode mode) {
  if (dst_size < 1 || src_size < 1) throw ParameterError("partition sizes must be at least 1");
  const std::size_t V = g.num_vertices();
  TilingPlan plan;
  plan.num_vertices = V;
  plan.dst_partition_size = dst_size;
  plan.src_partition_size = src_size;
  plan.mode = mode;

  const std::size_t num_src = (V + src_size - 1) / src_size;
  std::uint32_t next_id = 0;
  for (std::size_t d0 = 0; d0 < V; d0 += dst_size) {
    Partition part;
    part.dst_begin = static_cast<VertexId>(d0);
    part.dst_end = static_cast<VertexId>(std::min(V, d0 + dst_size));

    // Bucket the partition's in-edges by source partition. Visiting
    // destinations in order and each in-list by ascending source leaves
    // every bucket sorted by (dst, src).
    std::vector<std::vector<std::pair<VertexId, EdgeId>>> buckets(num_src);
    for (VertexId d = part.dst_begin; d < part.dst_end; ++d) {
      const auto srcs = g.in_neighbors(d);
      const auto ids = g.in_edges(d);
      for (std::size_t i = 0; i < srcs.size(); ++i) {
        buckets[srcs[i] / src_size].emplace_back(d, ids[i]);
      }
    }
    for (std::size_t s = 0; s < num_src; ++s) {
      const auto& bucket = buckets[s];
      if (mode == TilingMode::sparse && bucket.empty()) continue;
      Tile tile;
      tile.src_begin = static_cast<VertexId>(s * src_size);
      tile.src_end = static_cast<VertexId>(std::min(V, (s + 1) * src_size));
      if (mode == TilingMode::regular) {
        for (VertexId v = tile.src_begin; v < tile.src_end; ++v) tile.kept_sources.push_back(v);
      } else {
        for (const auto& [d, e] : bucket) tile.kept_sources.push_back(g.edge_src(e));
        std::sort(tile.kept_sources.begin(), tile.kept_sources.end());
        tile.kept_sources.erase(std::unique(tile.kept_sources.begin(), tile.kept_sources.end()),
                                tile.kept_sources.end());
      }
      for (const auto& [d, e] : bucket) {
        const VertexId src = g.edge_src(e);
        const auto pos = std::lower_bound(tile.kept_sources.begin(), tile.kept_sources.end(), src);
        tile.edges.push_back({static_cast<std::uint32_t>(pos - tile.kept_sources.begin()),
                              d - part.dst_begin, e, g.edge_type(e)});
      }
      tile.tile_id = next_id++;
      part.tiles.push_back(std::move(tile));
    }
    plan.partitions.push_back(std::move(part));
  }
  return plan;
}

TrafficReport traffic_stats(const TilingPlan& plan, std::uint64_t f, std::uint64_t bytes_per_value) {
  TrafficReport r;
  for (const auto& p : plan.partitions) {
    r.dst_vertex_loads += p.num_dst();
    for (const auto& t : p.tiles) {
      r.src_vertex_loads += t.num_sources();
      r.edge_loads += t.num_edges();
    }
  }
  r.total_bytes = (r.src_vertex_loads + r.dst_vertex_loads) * f * bytes_per_value +
                  r.edge_loads * kEdgeRecordBytes;
  return r;
}

std::string to_json(const TrafficReport& r) {
  nlohmann::ordered_json j;
  j["src_vertex_loads"] = r.src_vertex_loads;
  j["dst_vertex_loads"] = r.dst_vertex_loads;
  j["edge_loads"] = r.edge_loads;
  j["total_bytes"] = r.total_bytes;
  return j.dump(2);
}

std::string to_text(const TrafficReport& r) {
  std::ostringstream out;
  out << "src_vertex_loads " << r.src_vertex_loads << '\n'
      << "dst_vertex_loads " << r.dst_vertex_loads << '\n'
      << "edge_loads " << r.edge_loads << '\n'
      << "total_bytes " << r.total_bytes << '\n';
  return out.str();
}

Footprint model_footprint(const ModelGraph& m) {
  Footprint fp;
  for (const auto& n : m.nodes()) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(n.out.dim) * 4;
    switch (n.out.domain) {
      case Domain::vertex:
        if (n.kind != OpKind::output) fp.vertex_row_bytes += bytes;
        break;
      case Domain::edge:
        fp.edge_row_bytes += bytes;
        break;
      case Domain::weight:
        fp.weight_bytes += bytes * static_cast<std::uint64_t>(n.out.rows) *
                           static_cast<std::uint64_t>(n.out.batches);
        break;
      case Domain::scalar:
        break;
    }
  }
  return fp;
}

void check_capacity(const TilingPlan& plan, const HardwareConfig& hw, const ModelGraph& m) {
  const Footprint fp = model_footprint(m);
  for (const auto& p : plan.partitions) {
    for (const auto& t : p.tiles) {
      const std::uint64_t edge_bytes = t.num_edges() * kEdgeRecordBytes;
      if (edge_bytes > hw.tilehub_bytes) {
        throw CapacityError("tile " + std::to_string(t.tile_id) + " edge list needs " +
                                std::to_string(edge_bytes) + " bytes, tile hub holds " +
                                std::to_string(hw.tilehub_bytes),
                            t.tile_id, edge_bytes, hw.tilehub_bytes);
      }
      const std::uint64_t working = (p.num_dst() + t.num_sources()) * fp.vertex_row_bytes +
                                    t.num_edges() * fp.edge_row_bytes + fp.weight_bytes;
      if (working > hw.uem_bytes) {
        throw CapacityError("tile " + std::to_string(t.tile_id) + " working set needs " +
                                std::to_string(working) + " bytes, embedding memory holds " +
                                std::to_string(hw.uem_bytes),
                            t.tile_id, working, hw.uem_bytes);
      }
    }
  }
}

std::size_t auto_partition_size(const Graph& g, const HardwareConfig& hw, const ModelGraph& m) {
  const Footprint fp = model_footprint(m);
  const std::uint64_t half = hw.uem_bytes / 2;
  const std::uint64_t budget = half > fp.weight_bytes ? half - fp.weight_bytes : 0;
  const std::uint64_t row = std::max<std::uint64_t>(1, 2 * fp.vertex_row_bytes);
  const std::size_t cap = std::max<std::size_t>(1, g.num_vertices());
  return static_cast<std::size_t>(std::clamp<std::uint64_t>(budget / row, 1, cap));
}

}  // namespace zipper
