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

#include "zipper/graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "zipper/error.hpp"
#include "zipper/random.hpp"

namespace zipper {

namespace {

constexpr std::uint64_t kMaxVertexId = std::numeric_limits<VertexId>::max() - 1;

std::uint64_t pair_key(VertexId s, VertexId d) { return (std::uint64_t{s} << 32) | d; }

}  // namespace

Graph Graph::from_edges(std::size_t num_vertices, std::vector<EdgeRecord> edges, bool has_types,
                        int num_types) {
  if (num_vertices > kMaxVertexId + 1) {
    throw CapacityError("vertex count " + std::to_string(num_vertices) + " exceeds 32-bit ids");
  }
  for (const auto& e : edges) {
    if (e.src >= num_vertices || e.dst >= num_vertices) {
      throw ParameterError("edge endpoint out of range [0, " + std::to_string(num_vertices) + ")");
    }
    if (has_types && e.type >= num_types) {
      throw ParameterError("edge type " + std::to_string(e.type) + " not below type count " +
                           std::to_string(num_types));
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const EdgeRecord& a, const EdgeRecord& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const EdgeRecord& a, const EdgeRecord& b) {
                            return a.src == b.src && a.dst == b.dst;
                          }),
              edges.end());
  if (edges.size() > std::numeric_limits<EdgeId>::max()) {
    throw CapacityError("edge count exceeds 32-bit ids");
  }

  Graph g;
  const std::size_t ne = edges.size();
  g.out_offsets_.assign(num_vertices + 1, 0);
  g.in_offsets_.assign(num_vertices + 1, 0);
  g.out_targets_.resize(ne);
  g.edge_src_.resize(ne);
  for (std::size_t i = 0; i < ne; ++i) {
    g.out_offsets_[edges[i].src + 1]++;
    g.in_offsets_[edges[i].dst + 1]++;
    g.out_targets_[i] = edges[i].dst;
    g.edge_src_[i] = edges[i].src;
  }
  std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
  std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());

  // Edges arrive in (src, dst) order, so filling buckets in edge-id order keeps
  // every in-list sorted by source.
  g.in_sources_.resize(ne);
  g.in_edge_ids_.resize(ne);
  std::vector<std::size_t> cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  for (std::size_t i = 0; i < ne; ++i) {
    const auto slot = cursor[edges[i].dst]++;
    g.in_sources_[slot] = edges[i].src;
    g.in_edge_ids_[slot] = static_cast<EdgeId>(i);
  }

  g.has_types_ = has_types;
  g.num_types_ = has_types ? num_types : 0;
  if (has_types) {
    g.types_.resize(ne);
    for (std::size_t i = 0; i < ne; ++i) g.types_[i] = edges[i].type;
  }
  return g;
}

std::vector<EdgeRecord> Graph::edges_from_out() const {
  std::vector<EdgeRecord> out;
  out.reserve(num_edges());
  for (VertexId v = 0; v < num_vertices(); ++v) {
    EdgeId e = out_begin(v);
    for (VertexId d : out_neighbors(v)) out.push_back({v, d, edge_type(e++)});
  }
  return out;
}

std::vector<EdgeRecord> Graph::edges_from_in() const {
  std::vector<EdgeRecord> out(num_edges());
  for (VertexId v = 0; v < num_vertices(); ++v) {
    auto srcs = in_neighbors(v);
    auto ids = in_edges(v);
    for (std::size_t i = 0; i < srcs.size(); ++i) out[ids[i]] = {srcs[i], v, edge_type(ids[i])};
  }
  return out;
}

Graph Graph::with_edge_types(std::vector<EdgeType> types, int num_types) const {
  if (types.size() != num_edges()) throw ParameterError("edge type array length differs from E");
  for (auto t : types) {
    if (t >= num_types) throw ParameterError("edge type out of range");
  }
  Graph g = *this;
  g.types_ = std::move(types);
  g.num_types_ = num_types;
  g.has_types_ = true;
  return g;
}

bool operator==(const Graph& a, const Graph& b) {
  return a.out_offsets_ == b.out_offsets_ && a.out_targets_ == b.out_targets_ &&
         a.has_types_ == b.has_types_ && a.num_types_ == b.num_types_ && a.types_ == b.types_;
}

GraphFormat parse_graph_format(const std::string& name) {
  if (name == "edge-list" || name == "edgelist" || name == "el") return GraphFormat::edge_list;
  if (name == "matrix-market" || name == "mtx" || name == "mm") return GraphFormat::matrix_market;
  throw ParameterError("unknown graph format '" + name + "'");
}

namespace {

bool parse_id(const std::string& tok, std::uint64_t& value) {
  if (tok.empty() || tok.size() > 20) return false;
  value = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') return false;
    const std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
    if (value > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) return false;
    value = value * 10 + digit;
  }
  return true;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

Graph read_edge_list(std::istream& in) {
  struct Raw {
    std::uint64_t src, dst, type;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t lineno = 0;
  int typed = -1;  // unknown until the first edge line
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2 && toks.size() != 3) {
      throw ParseError(lineno, "expected 'src dst [etype]', got " + std::to_string(toks.size()) +
                                   " fields");
    }
    const int has_type = toks.size() == 3 ? 1 : 0;
    if (typed == -1) typed = has_type;
    if (typed != has_type) throw ParseError(lineno, "edge type column present on some lines only");
    Raw r{0, 0, 0};
    if (!parse_id(toks[0], r.src) || !parse_id(toks[1], r.dst)) {
      throw ParseError(lineno, "vertex ids must be non-negative integers");
    }
    if (r.src > kMaxVertexId || r.dst > kMaxVertexId) {
      throw CapacityError("line " + std::to_string(lineno) + ": vertex id exceeds 32-bit range");
    }
    if (has_type) {
      if (!parse_id(toks[2], r.type) || r.type > std::numeric_limits<EdgeType>::max()) {
        throw ParseError(lineno, "edge type must be an integer in [0, 255]");
      }
    }
    raw.push_back(r);
  }

  std::vector<std::uint64_t> ids;
  ids.reserve(raw.size() * 2);
  for (const auto& r : raw) {
    ids.push_back(r.src);
    ids.push_back(r.dst);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  auto compact = [&](std::uint64_t id) {
    return static_cast<VertexId>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<EdgeRecord> edges;
  edges.reserve(raw.size());
  int num_types = 0;
  for (const auto& r : raw) {
    edges.push_back({compact(r.src), compact(r.dst), static_cast<EdgeType>(r.type)});
    num_types = std::max(num_types, static_cast<int>(r.type) + 1);
  }
  return Graph::from_edges(ids.size(), std::move(edges), typed == 1, num_types);
}

Graph read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) return Graph::from_edges(0, {});
  ++lineno;
  auto header = split_ws(line);
  if (header.size() < 5 || header[0] != "%%MatrixMarket" || header[1] != "matrix" ||
      header[2] != "coordinate") {
    throw ParseError(lineno, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'");
  }
  const std::string& field = header[3];
  if (field != "pattern" && field != "integer") {
    throw ParseError(lineno, "unsupported field '" + field + "' (pattern or integer only)");
  }
  const bool typed = field == "integer";

  std::uint64_t rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  std::vector<EdgeRecord> edges;
  int num_types = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (!have_size) {
      if (toks.size() != 3 || !parse_id(toks[0], rows) || !parse_id(toks[1], cols) ||
          !parse_id(toks[2], nnz)) {
        throw ParseError(lineno, "expected 'rows cols nnz'");
      }
      if (std::max(rows, cols) > kMaxVertexId + 1) {
        throw CapacityError("line " + std::to_string(lineno) + ": dimension exceeds 32-bit ids");
      }
      have_size = true;
      edges.reserve(nnz);
      continue;
    }
    const std::size_t want = typed ? 3 : 2;
    std::uint64_t i = 0, j = 0, t = 0;
    if (toks.size() != want || !parse_id(toks[0], i) || !parse_id(toks[1], j) ||
        (typed && !parse_id(toks[2], t))) {
      throw ParseError(lineno, "malformed coordinate entry");
    }
    if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError(lineno, "index out of range");
    if (t > std::numeric_limits<EdgeType>::max()) throw ParseError(lineno, "edge type above 255");
    edges.push_back({static_cast<VertexId>(i - 1), static_cast<VertexId>(j - 1),
                     static_cast<EdgeType>(t)});
    num_types = std::max(num_types, static_cast<int>(t) + 1);
  }
  if (!have_size) return Graph::from_edges(0, {});
  if (edges.size() != nnz) {
    throw ParseError(lineno, "expected " + std::to_string(nnz) + " entries, found " +
                                 std::to_string(edges.size()));
  }
  return Graph::from_edges(std::max(rows, cols), std::move(edges), typed, num_types);
}

}  // namespace

Graph read_graph(std::istream& in, GraphFormat format) {
  return format == GraphFormat::edge_list ? read_edge_list(in) : read_matrix_market(in);
}

Graph load_graph(const std::filesystem::path& path, GraphFormat format) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open graph file " + path.string());
  return read_graph(in, format);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  for (const auto& e : g.edges_from_out()) {
    out << e.src << ' ' << e.dst;
    if (g.has_edge_types()) out << ' ' << static_cast<int>(e.type);
    out << '\n';
  }
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "erdos-renyi" || name == "er") return SyntheticKind::erdos_renyi;
  if (name == "rmat") return SyntheticKind::rmat;
  if (name == "star") return SyntheticKind::star;
  if (name == "chain") return SyntheticKind::chain;
  throw ParameterError("unknown synthetic graph kind '" + name + "'");
}

namespace {

std::vector<EdgeRecord> sample_uniform_edges(std::size_t v, std::size_t e, Rng& rng,
                                             std::unordered_set<std::uint64_t>& seen) {
  std::vector<EdgeRecord> out;
  const std::uint64_t total = std::uint64_t{v} * v;
  if (2 * (e + seen.size()) > total) {
    // Dense request: shuffle the complement of what is already taken.
    std::vector<std::uint64_t> pool;
    pool.reserve(total - seen.size());
    for (std::uint64_t k = 0; k < total; ++k) {
      const auto key = pair_key(static_cast<VertexId>(k / v), static_cast<VertexId>(k % v));
      if (!seen.count(key)) pool.push_back(k);
    }
    for (std::size_t i = 0; i < e; ++i) {
      const auto j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      const auto s = static_cast<VertexId>(pool[i] / v), d = static_cast<VertexId>(pool[i] % v);
      seen.insert(pair_key(s, d));
      out.push_back({s, d, 0});
    }
    return out;
  }
  while (out.size() < e) {
    const auto s = static_cast<VertexId>(rng.below(v));
    const auto d = static_cast<VertexId>(rng.below(v));
    if (seen.insert(pair_key(s, d)).second) out.push_back({s, d, 0});
  }
  return out;
}

std::vector<EdgeRecord> sample_rmat_edges(std::size_t v, std::size_t e, Rng& rng) {
  constexpr double kA = 0.57, kB = 0.19, kC = 0.19;
  int scale = 0;
  while ((std::size_t{1} << scale) < v) ++scale;
  std::unordered_set<std::uint64_t> seen;
  std::vector<EdgeRecord> out;
  out.reserve(e);
  // Dense requests may never be met by skewed sampling; top up uniformly.
  const std::size_t budget = 64 * e + 1024;
  for (std::size_t attempt = 0; out.size() < e && attempt < budget; ++attempt) {
    std::uint64_t s = 0, d = 0;
    for (int level = 0; level < scale; ++level) {
      const double r = rng.uniform();
      const int quadrant = r < kA ? 0 : r < kA + kB ? 1 : r < kA + kB + kC ? 2 : 3;
      s = (s << 1) | static_cast<std::uint64_t>(quadrant >> 1);
      d = (d << 1) | static_cast<std::uint64_t>(quadrant & 1);
    }
    if (s >= v || d >= v) continue;
    const auto vs = static_cast<VertexId>(s), vd = static_cast<VertexId>(d);
    if (seen.insert(pair_key(vs, vd)).second) out.push_back({vs, vd, 0});
  }
  if (out.size() < e) {
    auto rest = sample_uniform_edges(v, e - out.size(), rng, seen);
    out.insert(out.end(), rest.begin(), rest.end());
  }
  return out;
}

}  // namespace

Graph gen_synthetic(SyntheticKind kind, std::size_t v, std::size_t e, std::uint64_t seed) {
  if (v > kMaxVertexId + 1) throw ParameterError("vertex count exceeds 32-bit ids");
  std::vector<EdgeRecord> edges;
  switch (kind) {
    case SyntheticKind::star:
      for (std::size_t i = 1; i < v; ++i) edges.push_back({static_cast<VertexId>(i), 0, 0});
      break;
    case SyntheticKind::chain:
      for (std::size_t i = 0; i + 1 < v; ++i) {
        edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(i + 1), 0});
      }
      break;
    case SyntheticKind::erdos_renyi:
    case SyntheticKind::rmat: {
      if (static_cast<long double>(e) > static_cast<long double>(v) * v) {
        throw ParameterError("requested " + std::to_string(e) + " edges exceeds v^2 = " +
                             std::to_string(static_cast<unsigned long long>(v) * v));
      }
      Rng rng(seed);
      std::unordered_set<std::uint64_t> seen;
      edges = kind == SyntheticKind::rmat ? sample_rmat_edges(v, e, rng)
                                          : sample_uniform_edges(v, e, rng, seen);
      break;
    }
  }
  return Graph::from_edges(v, std::move(edges));
}

Graph assign_random_edge_types(const Graph& g, int num_types, std::uint64_t seed) {
  if (num_types < 1 || num_types > 256) throw ParameterError("edge type count must be in [1, 256]");
  Rng rng(seed);
  std::vector<EdgeType> types(g.num_edges());
  for (auto& t : types) t = static_cast<EdgeType>(rng.below(static_cast<std::uint64_t>(num_types)));
  return g.with_edge_types(std::move(types), num_types);
}

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.new_of_old.resize(n);
  std::iota(p.new_of_old.begin(), p.new_of_old.end(), VertexId{0});
  p.old_of_new = p.new_of_old;
  return p;
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < new_of_old.size(); ++i) {
    if (new_of_old[i] != i) return false;
  }
  return true;
}

std::pair<Graph, Permutation> degree_reorder(const Graph& g) {
  const std::size_t n = g.num_vertices();
  Permutation perm;
  perm.old_of_new.resize(n);
  std::iota(perm.old_of_new.begin(), perm.old_of_new.end(), VertexId{0});
  std::stable_sort(perm.old_of_new.begin(), perm.old_of_new.end(),
                   [&](VertexId a, VertexId b) { return g.in_degree(a) > g.in_degree(b); });
  perm.new_of_old.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm.new_of_old[perm.old_of_new[i]] = static_cast<VertexId>(i);

  auto edges = g.edges_from_out();
  for (auto& e : edges) {
    e.src = perm.new_of_old[e.src];
    e.dst = perm.new_of_old[e.dst];
  }
  return {Graph::from_edges(n, std::move(edges), g.has_edge_types(), g.num_edge_types()),
          std::move(perm)};
}

std::vector<EdgeId> edge_correspondence(const Graph& original, const Graph& relabelled,
                                        const Permutation& perm) {
  std::vector<EdgeId> out(relabelled.num_edges());
  for (EdgeId e = 0; e < relabelled.num_edges(); ++e) {
    const VertexId s = perm.old_of_new[relabelled.edge_src(e)];
    const VertexId d = perm.old_of_new[relabelled.edge_dst(e)];
    auto nbrs = original.out_neighbors(s);
    auto it = std::lower_bound(nbrs.begin(), nbrs.end(), d);
    if (it == nbrs.end() || *it != d) throw ParameterError("graphs are not related by permutation");
    out[e] = original.out_begin(s) + static_cast<EdgeId>(it - nbrs.begin());
  }
  return out;
}

}  // namespace zipper
