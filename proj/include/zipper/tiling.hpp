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

#ifndef ZIPPER_TILING_HPP
#define ZIPPER_TILING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zipper/graph.hpp"
#include "zipper/hardware.hpp"
#include "zipper/model.hpp"

namespace zipper {

/// Bytes of one COO edge record: local src, local dst, edge id (u32 each),
/// type (u8), padded.
inline constexpr std::uint64_t kEdgeRecordBytes = 16;

enum class TilingMode { regular, sparse };

TilingMode parse_tiling_mode(const std::string& name);
const char* to_string(TilingMode mode);

struct TileEdge {
  std::uint32_t local_src = 0;  // index into Tile::kept_sources
  std::uint32_t local_dst = 0;  // offset from the partition's dst_begin
  EdgeId id = 0;
  EdgeType type = 0;
};

struct Tile {
  std::uint32_t tile_id = 0;
  VertexId src_begin = 0;
  VertexId src_end = 0;
  std::vector<VertexId> kept_sources;
  std::vector<TileEdge> edges;  // sorted by (local_dst, local_src)

  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_sources() const { return kept_sources.size(); }
};

struct Partition {
  VertexId dst_begin = 0;
  VertexId dst_end = 0;
  std::vector<Tile> tiles;

  std::size_t num_dst() const { return dst_end - dst_begin; }
};

struct TilingPlan {
  std::size_t num_vertices = 0;
  std::size_t dst_partition_size = 1;
  std::size_t src_partition_size = 1;
  TilingMode mode = TilingMode::sparse;
  std::vector<Partition> partitions;

  std::size_t num_tiles() const;
  std::size_t num_edges() const;
  std::size_t max_tile_edges() const;
};

TilingPlan make_plan(const Graph& g, std::size_t dst_size, std::size_t src_size, TilingMode mode);

struct TrafficReport {
  std::uint64_t src_vertex_loads = 0;
  std::uint64_t dst_vertex_loads = 0;
  std::uint64_t edge_loads = 0;
  std::uint64_t total_bytes = 0;
};

TrafficReport traffic_stats(const TilingPlan& plan, std::uint64_t f, std::uint64_t bytes_per_value);
std::string to_json(const TrafficReport& r);
std::string to_text(const TrafficReport& r);

/// Per-row byte footprints of a model's vertex and edge tensors (all
/// intermediates resident at once, 32-bit values) and its weights.
struct Footprint {
  std::uint64_t vertex_row_bytes = 0;
  std::uint64_t edge_row_bytes = 0;
  std::uint64_t weight_bytes = 0;
};

Footprint model_footprint(const ModelGraph& m);

/// Throws CapacityError naming the first tile whose edge list exceeds the
/// tile hub or whose working set exceeds the embedding memory.
void check_capacity(const TilingPlan& plan, const HardwareConfig& hw, const ModelGraph& m);

/// Largest partition size n with n * (dst row + src row) <= half the embedding
/// memory after weights; at least 1 and at most max(V, 1).
std::size_t auto_partition_size(const Graph& g, const HardwareConfig& hw, const ModelGraph& m);

}  // namespace zipper

#endif  // ZIPPER_TILING_HPP
