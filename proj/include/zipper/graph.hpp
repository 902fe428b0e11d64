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

#ifndef ZIPPER_GRAPH_HPP
#define ZIPPER_GRAPH_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace zipper {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
using EdgeType = std::uint8_t;

struct EdgeRecord {
  VertexId src = 0;
  VertexId dst = 0;
  EdgeType type = 0;
};

/// Immutable directed graph.
///
/// Edges are deduplicated and numbered in (src, dst) order, so edge ids are
/// positions in the out-adjacency. The in-adjacency lists, for every
/// destination, its sources in ascending order together with the edge ids;
/// for a fixed destination ascending source and ascending edge id coincide.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph over [0, num_vertices). Duplicate (src, dst) pairs keep
  /// the first occurrence. When `has_types` is false every type is ignored.
  static Graph from_edges(std::size_t num_vertices, std::vector<EdgeRecord> edges,
                          bool has_types = false, int num_types = 0);

  std::size_t num_vertices() const { return out_offsets_.empty() ? 0 : out_offsets_.size() - 1; }
  std::size_t num_edges() const { return out_targets_.size(); }

  std::span<const VertexId> out_neighbors(VertexId v) const {
    return {out_targets_.data() + out_offsets_[v], out_targets_.data() + out_offsets_[v + 1]};
  }
  /// Out-edge ids of v are the contiguous range [out_begin(v), out_begin(v) + out_degree(v)).
  EdgeId out_begin(VertexId v) const { return static_cast<EdgeId>(out_offsets_[v]); }
  std::size_t out_degree(VertexId v) const { return out_offsets_[v + 1] - out_offsets_[v]; }

  std::span<const VertexId> in_neighbors(VertexId v) const {
    return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
  }
  std::span<const EdgeId> in_edges(VertexId v) const {
    return {in_edge_ids_.data() + in_offsets_[v], in_edge_ids_.data() + in_offsets_[v + 1]};
  }
  std::size_t in_degree(VertexId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

  VertexId edge_src(EdgeId e) const { return edge_src_[e]; }
  VertexId edge_dst(EdgeId e) const { return out_targets_[e]; }

  bool has_edge_types() const { return has_types_; }
  EdgeType edge_type(EdgeId e) const { return types_.empty() ? 0 : types_[e]; }
  int num_edge_types() const { return num_types_; }

  /// Edge set reconstructed from the out-adjacency, in edge-id order.
  std::vector<EdgeRecord> edges_from_out() const;
  /// Edge set reconstructed from the in-adjacency, in edge-id order.
  std::vector<EdgeRecord> edges_from_in() const;

  /// Same structure with a new type labelling (length E, values < num_types).
  Graph with_edge_types(std::vector<EdgeType> types, int num_types) const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  std::vector<std::size_t> out_offsets_;
  std::vector<VertexId> out_targets_;
  std::vector<VertexId> edge_src_;
  std::vector<std::size_t> in_offsets_;
  std::vector<VertexId> in_sources_;
  std::vector<EdgeId> in_edge_ids_;
  std::vector<EdgeType> types_;
  int num_types_ = 0;
  bool has_types_ = false;
};

enum class GraphFormat { edge_list, matrix_market };

GraphFormat parse_graph_format(const std::string& name);

/// Reads a graph file. Edge-list ids are compacted to [0, V) preserving their
/// relative order; Matrix Market keeps the declared dimension.
Graph load_graph(const std::filesystem::path& path, GraphFormat format);
Graph read_graph(std::istream& in, GraphFormat format);

/// Writes `src dst [etype]` lines; reloading the output reproduces the graph
/// whenever every vertex has at least one incident edge.
void write_edge_list(const Graph& g, std::ostream& out);

enum class SyntheticKind { erdos_renyi, rmat, star, chain };

SyntheticKind parse_synthetic_kind(const std::string& name);

/// Deterministic generators. `star` points every edge at vertex 0 and `chain`
/// links i -> i+1; both ignore `e`. The random kinds return exactly `e`
/// distinct edges.
Graph gen_synthetic(SyntheticKind kind, std::size_t v, std::size_t e, std::uint64_t seed);

/// Uniform random edge types in [0, num_types).
Graph assign_random_edge_types(const Graph& g, int num_types, std::uint64_t seed);

struct Permutation {
  std::vector<VertexId> new_of_old;
  std::vector<VertexId> old_of_new;

  static Permutation identity(std::size_t n);
  bool is_identity() const;
};

/// Relabels vertices by descending in-degree, ties by ascending original id.
std::pair<Graph, Permutation> degree_reorder(const Graph& g);

/// For every edge of `relabelled`, the id of the same edge in `original`.
std::vector<EdgeId> edge_correspondence(const Graph& original, const Graph& relabelled,
                                        const Permutation& perm);

}  // namespace zipper

#endif  // ZIPPER_GRAPH_HPP
