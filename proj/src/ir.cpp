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

#include "zipper/ir.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "zipper/error.hpp"

namespace zipper {

namespace {

struct KindName {
  IrKind kind;
  const char* name;
};

constexpr KindName kIrKinds[] = {
    {IrKind::input, "input"},
    {IrKind::output, "output"},
    {IrKind::mv, "mv"},
    {IrKind::bmm_row, "bmm_row"},
    {IrKind::add, "add"},
    {IrKind::sub, "sub"},
    {IrKind::mul, "mul"},
    {IrKind::div, "div"},
    {IrKind::max, "max"},
    {IrKind::exp, "exp"},
    {IrKind::relu, "relu"},
    {IrKind::sigmoid, "sigmoid"},
    {IrKind::send_out_edge, "sendOutEdge"},
    {IrKind::recv_src, "recvSrc"},
    {IrKind::send_in_edge, "sendInEdge"},
    {IrKind::recv_dst, "recvDst"},
    {IrKind::send_dst_sum, "sendDstSum"},
    {IrKind::send_dst_max, "sendDstMax"},
    {IrKind::recv_in_edge, "recvInEdge"},
};

}  // namespace

const char* to_string(IrKind kind) {
  for (const auto& k : kIrKinds) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

IrKind parse_ir_kind(const std::string& name) {
  for (const auto& k : kIrKinds) {
    if (name == k.name) return k.kind;
  }
  throw LoweringError("unknown IR operation '" + name + "'");
}

bool is_send(IrKind kind) {
  return kind == IrKind::send_out_edge || kind == IrKind::send_in_edge ||
         kind == IrKind::send_dst_sum || kind == IrKind::send_dst_max;
}

bool is_recv(IrKind kind) {
  return kind == IrKind::recv_src || kind == IrKind::recv_dst || kind == IrKind::recv_in_edge;
}

bool is_ir_elementwise(IrKind kind) {
  switch (kind) {
    case IrKind::add:
    case IrKind::sub:
    case IrKind::mul:
    case IrKind::div:
    case IrKind::max:
    case IrKind::exp:
    case IrKind::relu:
    case IrKind::sigmoid:
      return true;
    default:
      return false;
  }
}

ElwKind ir_elw_kind(IrKind kind) {
  switch (kind) {
    case IrKind::add: return ElwKind::add;
    case IrKind::sub: return ElwKind::sub;
    case IrKind::mul: return ElwKind::mul;
    case IrKind::div: return ElwKind::div;
    case IrKind::max: return ElwKind::max;
    case IrKind::exp: return ElwKind::exp;
    case IrKind::relu: return ElwKind::relu;
    case IrKind::sigmoid: return ElwKind::sigmoid;
    default: throw LoweringError(std::string(to_string(kind)) + " is not elementwise");
  }
}

int ir_arity(IrKind kind) {
  switch (kind) {
    case IrKind::input:
    case IrKind::recv_src:
    case IrKind::recv_dst:
    case IrKind::recv_in_edge:
      return 0;
    case IrKind::add:
    case IrKind::sub:
    case IrKind::mul:
    case IrKind::div:
    case IrKind::max:
      return 2;
    default:
      return 1;
  }
}

const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::src_scatter: return "src_scatter";
    case ChannelKind::dst_scatter: return "dst_scatter";
    case ChannelKind::gather_sum: return "gather_sum";
    case ChannelKind::gather_max: return "gather_max";
  }
  return "?";
}

namespace {

ChannelKind parse_channel_kind(const std::string& s) {
  for (auto k : {ChannelKind::src_scatter, ChannelKind::dst_scatter, ChannelKind::gather_sum,
                 ChannelKind::gather_max}) {
    if (s == to_string(k)) return k;
  }
  throw LoweringError("unknown channel kind '" + s + "'");
}

const char* role_name(Role r) { return r == Role::src ? "src" : r == Role::dst ? "dst" : ""; }

}  // namespace

std::string Segment::name() const {
  return std::string(label == SegLabel::vertex ? "v." : "e.") + std::to_string(index);
}

const Channel* IrProgram::channel(int id) const {
  for (const auto& c : channels) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

int IrProgram::next_channel_id() const {
  int next = 0;
  for (const auto& c : channels) next = std::max(next, c.id + 1);
  return next;
}

int IrProgram::num_rounds() const {
  int r = 0;
  for (const auto& c : channels) r = std::max(r, c.round + 1);
  return r;
}

// ---------------------------------------------------------------------------
// Round splitting

RoundSplit split_rounds(const ModelGraph& m) {
  validate(m);
  RoundSplit out;
  const std::size_t n = m.size();
  std::vector<int> phase(n, 0), map(n, -1);
  std::map<std::pair<int, int>, int> clones;

  std::function<int(int, int)> at_phase = [&](int orig, int q) -> int {
    const ModelOp& node = m.node(orig);
    const auto o = static_cast<std::size_t>(orig);
    if (node.out.domain != Domain::edge || phase[o] == q) return map[o];
    if (auto it = clones.find({orig, q}); it != clones.end()) return it->second;
    ModelOp c = node;
    c.name = node.name + "@" + std::to_string(q);
    if (node.kind == OpKind::scatter_src || node.kind == OpKind::scatter_dst) {
      c.inputs = {map[static_cast<std::size_t>(node.inputs[0])]};
    } else {
      for (int& in : c.inputs) in = at_phase(in, q);
    }
    const int idx = out.model.append(std::move(c));
    out.phase.push_back(q);
    clones[{orig, q}] = idx;
    return idx;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const ModelOp& node = m.node(static_cast<int>(i));
    if (node.kind == OpKind::fused) {
      throw LoweringError("fused node '" + node.name + "' must be defused before lowering");
    }
    int p = 0;
    for (int in : node.inputs) p = std::max(p, phase[static_cast<std::size_t>(in)]);
    if (node.kind == OpKind::gather) ++p;
    if (node.kind == OpKind::scatter_src && p != 0) {
      throw LoweringError("'" + node.name +
                          "' scatters a value that depends on a gather to source vertices; "
                          "only destination-side scatters may follow a gather");
    }
    phase[i] = p;
    ModelOp copy = node;
    const bool edge_op = node.out.domain == Domain::edge && node.kind != OpKind::scatter_src &&
                         node.kind != OpKind::scatter_dst;
    for (int& in : copy.inputs) {
      in = edge_op ? at_phase(in, p) : map[static_cast<std::size_t>(in)];
    }
    map[i] = out.model.append(std::move(copy));
    out.phase.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lowering

namespace {

IrKind ir_kind_of(OpKind kind) {
  switch (kind) {
    case OpKind::input: return IrKind::input;
    case OpKind::output: return IrKind::output;
    case OpKind::matmul: return IrKind::mv;
    case OpKind::bmm: return IrKind::bmm_row;
    case OpKind::add: return IrKind::add;
    case OpKind::sub: return IrKind::sub;
    case OpKind::mul: return IrKind::mul;
    case OpKind::div: return IrKind::div;
    case OpKind::max: return IrKind::max;
    case OpKind::exp: return IrKind::exp;
    case OpKind::relu: return IrKind::relu;
    case OpKind::sigmoid: return IrKind::sigmoid;
    default: throw LoweringError(std::string("no single-item form for ") + to_string(kind));
  }
}

struct Placed {
  int comp = 0;
  int pos = 0;
  int sub = 0;
  int value = -1;               // model node whose value this op yields
  std::vector<int> input_nodes;  // model nodes consumed
  IrOp op;
};

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

/// Label an op forces on its segment, if any.
std::optional<SegLabel> forced_label(const IrOp& op) {
  switch (op.kind) {
    case IrKind::send_out_edge:
    case IrKind::send_in_edge:
    case IrKind::recv_in_edge:
      return SegLabel::vertex;
    case IrKind::recv_src:
    case IrKind::recv_dst:
    case IrKind::send_dst_sum:
    case IrKind::send_dst_max:
    case IrKind::bmm_row:
      return SegLabel::edge;
    case IrKind::input:
    case IrKind::output:
      return op.marker == "edge" ? SegLabel::edge : SegLabel::vertex;
    default:
      return std::nullopt;
  }
}

}  // namespace

IrProgram lower_to_ir(const ModelGraph& model) {
  const RoundSplit rs = split_rounds(model);
  const ModelGraph& m = rs.model;
  const int n = static_cast<int>(m.size());
  auto is_weight = [&](int i) {
    return m.node(i).kind == OpKind::input && m.node(i).out.domain == Domain::weight;
  };

  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < n; ++i) {
    const ModelOp& node = m.node(i);
    if (is_weight(i) || is_gop(node.kind)) continue;
    for (int in : node.inputs) {
      if (!is_weight(in)) parent[static_cast<std::size_t>(find_root(parent, i))] = find_root(parent, in);
    }
  }

  IrProgram p;
  std::vector<Placed> placed;
  for (int i = 0; i < n; ++i) {
    const ModelOp& node = m.node(i);
    const int phase = rs.phase[static_cast<std::size_t>(i)];
    if (is_weight(i)) {
      p.weights[node.name] = {node.out.rows, node.out.dim, node.out.batches};
      continue;
    }
    if (is_gop(node.kind)) {
      const int u = node.inputs[0];
      Channel c;
      c.id = static_cast<int>(p.channels.size());
      c.dim = m.node(u).out.dim;
      IrKind send{}, recv{};
      switch (node.kind) {
        case OpKind::scatter_src:
          c.kind = ChannelKind::src_scatter;
          c.round = phase;
          send = IrKind::send_out_edge;
          recv = IrKind::recv_src;
          break;
        case OpKind::scatter_dst:
          c.kind = ChannelKind::dst_scatter;
          c.round = phase;
          send = IrKind::send_in_edge;
          recv = IrKind::recv_dst;
          break;
        default:
          c.kind = node.reduce == ReduceKind::sum ? ChannelKind::gather_sum : ChannelKind::gather_max;
          c.round = phase - 1;
          send = node.reduce == ReduceKind::sum ? IrKind::send_dst_sum : IrKind::send_dst_max;
          recv = IrKind::recv_in_edge;
          break;
      }
      p.channels.push_back(c);

      Placed s;
      s.comp = find_root(parent, u);
      s.pos = i;
      s.input_nodes = {u};
      s.op.kind = send;
      s.op.channel = c.id;
      s.op.name = node.name;
      s.op.dim = c.dim;
      s.op.round = c.round;
      placed.push_back(std::move(s));

      Placed r;
      r.comp = find_root(parent, i);
      r.pos = i;
      r.sub = 1;
      r.value = i;
      r.op.kind = recv;
      r.op.channel = c.id;
      r.op.name = node.name;
      r.op.dim = node.out.dim;
      r.op.round = phase;
      placed.push_back(std::move(r));
      continue;
    }
    Placed o;
    o.comp = find_root(parent, i);
    o.pos = i;
    o.value = i;
    o.op.kind = ir_kind_of(node.kind);
    o.op.name = node.name;
    o.op.dim = node.out.dim;
    o.op.round = phase;
    if (node.kind == OpKind::input || node.kind == OpKind::output) {
      o.op.ref = node.name;
      o.op.marker = to_string(node.out.domain);
    }
    for (int in : node.inputs) {
      if (is_weight(in)) {
        o.op.ref = m.node(in).name;
      } else {
        o.input_nodes.push_back(in);
      }
    }
    placed.push_back(std::move(o));
  }

  // Components become segments, ordered by their first model node.
  std::map<int, int> first_pos;
  for (const auto& pl : placed) {
    auto [it, fresh] = first_pos.emplace(pl.comp, pl.pos);
    if (!fresh) it->second = std::min(it->second, pl.pos);
  }
  std::vector<std::pair<int, int>> order;
  for (const auto& [comp, pos] : first_pos) order.emplace_back(pos, comp);
  std::sort(order.begin(), order.end());

  std::stable_sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
    return std::tie(a.pos, a.sub) < std::tie(b.pos, b.sub);
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int comp = order[k].second;
    Segment seg;
    seg.index = static_cast<int>(k);
    std::map<int, int> position;  // model node value -> op index
    std::optional<SegLabel> label;
    for (const auto& pl : placed) {
      if (pl.comp != comp) continue;
      IrOp op = pl.op;
      for (int in : pl.input_nodes) op.inputs.push_back(position.at(in));
      if (auto f = forced_label(op)) {
        if (label && *label != *f) {
          throw LoweringError("segment " + std::to_string(k) + " mixes vertex-only and edge-only operations");
        }
        label = f;
      }
      if (pl.value >= 0) position[pl.value] = static_cast<int>(seg.ops.size());
      seg.ops.push_back(std::move(op));
    }
    seg.label = label.value_or(SegLabel::vertex);
    p.segments.push_back(std::move(seg));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Verification

std::optional<std::string> verify_ir(const IrProgram& p) {
  std::map<int, int> sends, recvs;
  std::set<int> ids;
  for (const auto& c : p.channels) {
    if (!ids.insert(c.id).second) return "duplicate channel " + std::to_string(c.id);
    if (c.dim < 1) return "channel " + std::to_string(c.id) + " has no payload width";
    sends[c.id] = 0;
    recvs[c.id] = 0;
  }
  for (const auto& seg : p.segments) {
    const std::string where = " in segment " + seg.name();
    const int n = static_cast<int>(seg.ops.size());
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> users(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const IrOp& op = seg.ops[static_cast<std::size_t>(i)];
      const std::string what = std::string(to_string(op.kind)) + " %" + std::to_string(i) + where;
      if (static_cast<int>(op.inputs.size()) != ir_arity(op.kind)) return "wrong operand count for " + what;
      for (int in : op.inputs) {
        if (in < 0 || in >= n) return "operand out of range for " + what;
        if (is_send(seg.ops[static_cast<std::size_t>(in)].kind)) return "send used as a value by " + what;
        ++indeg[static_cast<std::size_t>(i)];
        users[static_cast<std::size_t>(in)].push_back(i);
      }
      if (auto f = forced_label(op); f && *f != seg.label) {
        return "illegal " + what;
      }
      if (op.kind == IrKind::input || op.kind == IrKind::output) {
        if (op.marker != "vertex" && op.marker != "edge") return "bad marker on " + what;
      }
      if (is_comm(op.kind)) {
        const Channel* c = p.channel(op.channel);
        if (!c) return "unknown channel " + std::to_string(op.channel) + " on " + what;
        const bool ok =
            (c->kind == ChannelKind::src_scatter &&
             (op.kind == IrKind::send_out_edge || op.kind == IrKind::recv_src)) ||
            (c->kind == ChannelKind::dst_scatter &&
             (op.kind == IrKind::send_in_edge || op.kind == IrKind::recv_dst)) ||
            (c->kind == ChannelKind::gather_sum &&
             (op.kind == IrKind::send_dst_sum || op.kind == IrKind::recv_in_edge)) ||
            (c->kind == ChannelKind::gather_max &&
             (op.kind == IrKind::send_dst_max || op.kind == IrKind::recv_in_edge));
        if (!ok) return "channel " + std::to_string(op.channel) + " kind does not match " + what;
        ++(is_send(op.kind) ? sends : recvs)[op.channel];
      } else if (op.channel != -1) {
        return "channel annotation on " + what;
      }
      if (op.kind == IrKind::mv || op.kind == IrKind::bmm_row) {
        auto w = p.weights.find(op.ref);
        if (w == p.weights.end()) return "unknown weight '" + op.ref + "' on " + what;
        if (op.kind == IrKind::mv && w->second.batches != 1) return "batched weight on " + what;
        if (op.dim != w->second.cols) return "weight width mismatch on " + what;
      }
    }
    // Kahn's algorithm; leftovers sit on a cycle.
    std::vector<int> ready;
    for (int i = 0; i < n; ++i) {
      if (indeg[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
    }
    int visited = 0;
    while (!ready.empty()) {
      const int i = ready.back();
      ready.pop_back();
      ++visited;
      for (int u : users[static_cast<std::size_t>(i)]) {
        if (--indeg[static_cast<std::size_t>(u)] == 0) ready.push_back(u);
      }
    }
    if (visited != n) return "cycle in segment " + seg.name();
    for (int i = 0; i < n; ++i) {
      const IrOp& op = seg.ops[static_cast<std::size_t>(i)];
      if (op.kind == IrKind::mv || op.kind == IrKind::bmm_row) {
        const int k = seg.ops[static_cast<std::size_t>(op.inputs[0])].dim;
        if (k != p.weights.at(op.ref).rows) {
          return "weight depth mismatch on " + std::string(to_string(op.kind)) + " %" + std::to_string(i) +
                 " in segment " + seg.name();
        }
      }
    }
  }
  for (const auto& c : p.channels) {
    if (sends[c.id] != 1 || recvs[c.id] != 1) return "unmatched channel " + std::to_string(c.id);
  }
  for (const auto& [id, count] : sends) {
    if (!ids.count(id)) return "unmatched channel " + std::to_string(id);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Interpretation

template <typename Scalar>
FeatureSet<Scalar> interpret_ir(const IrProgram& p, const Graph& g, const FeatureSet<Scalar>& feats,
                                const WeightSet<Scalar>& weights) {
  const auto V = static_cast<Eigen::Index>(g.num_vertices());
  const auto E = static_cast<Eigen::Index>(g.num_edges());
  std::vector<std::vector<Matrix<Scalar>>> vals(p.segments.size());
  std::vector<std::vector<char>> done(p.segments.size());
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    vals[s].resize(p.segments[s].ops.size());
    done[s].assign(p.segments[s].ops.size(), 0);
  }
  std::map<int, Matrix<Scalar>> sent;
  FeatureSet<Scalar> out;

  auto weight = [&](const std::string& name) -> const Matrix<Scalar>& {
    auto it = weights.find(name);
    if (it == weights.end()) throw ShapeError("missing weight '" + name + "'");
    const WeightInfo& info = p.weights.at(name);
    if (it->second.rows() != static_cast<Eigen::Index>(info.rows) * info.batches ||
        it->second.cols() != info.cols) {
      throw ShapeError("weight '" + name + "' has the wrong shape");
    }
    return it->second;
  };

  bool progress = true;
  std::size_t remaining = 0;
  for (const auto& seg : p.segments) remaining += seg.ops.size();
  while (remaining > 0 && progress) {
    progress = false;
    for (std::size_t s = 0; s < p.segments.size(); ++s) {
      const Segment& seg = p.segments[s];
      for (std::size_t i = 0; i < seg.ops.size(); ++i) {
        if (done[s][i]) continue;
        const IrOp& op = seg.ops[i];
        bool ready = std::all_of(op.inputs.begin(), op.inputs.end(),
                                 [&](int in) { return done[s][static_cast<std::size_t>(in)] != 0; });
        if (is_recv(op.kind)) ready = ready && sent.count(op.channel);
        if (!ready) continue;
        auto arg = [&](std::size_t k) -> const Matrix<Scalar>& {
          return vals[s][static_cast<std::size_t>(op.inputs[k])];
        };
        Matrix<Scalar>& dst = vals[s][i];
        switch (op.kind) {
          case IrKind::input: {
            const bool vertex = op.marker == "vertex";
            if (!vertex && !feats.edge) throw ShapeError("input '" + op.ref + "' needs edge features");
            const Matrix<Scalar>& src = vertex ? feats.vertex : *feats.edge;
            if (src.rows() != (vertex ? V : E) || src.cols() != op.dim) {
              throw ShapeError("features for '" + op.ref + "' have the wrong shape");
            }
            dst = src;
            break;
          }
          case IrKind::output:
            out.vertex = arg(0);
            break;
          case IrKind::mv:
            dst = rowwise_product<Scalar>(arg(0), weight(op.ref));
            break;
          case IrKind::bmm_row:
            dst = batched_product<Scalar>(arg(0), weight(op.ref), p.weights.at(op.ref).batches,
                                          [&](Eigen::Index e) { return g.edge_type(static_cast<EdgeId>(e)); });
            break;
          case IrKind::send_out_edge:
          case IrKind::send_in_edge:
          case IrKind::send_dst_sum:
          case IrKind::send_dst_max:
            sent[op.channel] = arg(0);
            break;
          case IrKind::recv_src:
          case IrKind::recv_dst: {
            const Matrix<Scalar>& x = sent.at(op.channel);
            dst.resize(E, x.cols());
            for (EdgeId e = 0; e < static_cast<EdgeId>(E); ++e) {
              dst.row(e) = x.row(op.kind == IrKind::recv_src ? g.edge_src(e) : g.edge_dst(e));
            }
            break;
          }
          case IrKind::recv_in_edge: {
            const Matrix<Scalar>& x = sent.at(op.channel);
            const ReduceKind rk =
                p.channel(op.channel)->kind == ChannelKind::gather_max ? ReduceKind::max : ReduceKind::sum;
            dst = Matrix<Scalar>::Constant(V, x.cols(), reduce_identity<Scalar>(rk));
            for (VertexId v = 0; v < static_cast<VertexId>(V); ++v) {
              for (EdgeId e : g.in_edges(v)) {
                for (Eigen::Index j = 0; j < x.cols(); ++j) dst(v, j) = reduce(rk, dst(v, j), x(e, j));
              }
            }
            break;
          }
          default:
            if (op.inputs.size() == 1) {
              dst = elementwise<Scalar>(ir_elw_kind(op.kind), arg(0));
            } else {
              dst = elementwise<Scalar>(ir_elw_kind(op.kind), arg(0), arg(1));
            }
            break;
        }
        done[s][i] = 1;
        --remaining;
        progress = true;
      }
    }
  }
  if (remaining > 0) throw LoweringError("IR program stalls: circular channel dependency");
  return out;
}

template FeatureSet<float> interpret_ir(const IrProgram&, const Graph&, const FeatureSet<float>&,
                                        const WeightSet<float>&);
template FeatureSet<double> interpret_ir(const IrProgram&, const Graph&, const FeatureSet<double>&,
                                         const WeightSet<double>&);

// ---------------------------------------------------------------------------
// Text form

std::string dump_ir(const IrProgram& p) {
  std::ostringstream out;
  for (const auto& [name, w] : p.weights) {
    out << "weight " << name << ' ';
    if (w.batches != 1) out << w.batches << 'x';
    out << w.rows << 'x' << w.cols << '\n';
  }
  for (const auto& c : p.channels) {
    out << "channel " << c.id << ' ' << to_string(c.kind) << " dim=" << c.dim << " round=" << c.round << '\n';
  }
  for (const auto& seg : p.segments) {
    out << "segment " << seg.name();
    if (seg.role != Role::none) out << ' ' << role_name(seg.role);
    out << '\n';
    for (std::size_t i = 0; i < seg.ops.size(); ++i) {
      const IrOp& op = seg.ops[i];
      out << "  %" << i << " = " << to_string(op.kind);
      if (!op.marker.empty()) out << ' ' << op.marker;
      for (int in : op.inputs) out << " %" << in;
      if (op.channel >= 0) out << " ch=" << op.channel;
      if (!op.ref.empty()) out << " ref=" << op.ref;
      out << " name=" << op.name << " dim=" << op.dim << " round=" << op.round << '\n';
    }
  }
  return out.str();
}

namespace {

int to_int(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "expected an integer, got '" + s + "'");
  }
}

std::vector<int> split_dims(const std::string& s, std::size_t line) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) out.push_back(to_int(part, line));
  return out;
}

}  // namespace

IrProgram parse_ir(const std::string& text) {
  IrProgram p;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  Segment* seg = nullptr;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "weight") {
      if (tok.size() != 3) throw ParseError(lineno, "expected 'weight <name> <shape>'");
      auto d = split_dims(tok[2], lineno);
      if (d.size() == 2) {
        p.weights[tok[1]] = {d[0], d[1], 1};
      } else if (d.size() == 3) {
        p.weights[tok[1]] = {d[1], d[2], d[0]};
      } else {
        throw ParseError(lineno, "weight shape must be RxC or BxRxC");
      }
    } else if (tok[0] == "channel") {
      if (tok.size() != 5) throw ParseError(lineno, "expected 'channel <id> <kind> dim=<n> round=<r>'");
      Channel c;
      c.id = to_int(tok[1], lineno);
      try {
        c.kind = parse_channel_kind(tok[2]);
      } catch (const LoweringError& e) {
        throw ParseError(lineno, e.what());
      }
      if (tok[3].rfind("dim=", 0) != 0 || tok[4].rfind("round=", 0) != 0) {
        throw ParseError(lineno, "expected dim= and round= fields");
      }
      c.dim = to_int(tok[3].substr(4), lineno);
      c.round = to_int(tok[4].substr(6), lineno);
      p.channels.push_back(c);
    } else if (tok[0] == "segment") {
      if (tok.size() < 2 || tok.size() > 3 || tok[1].size() < 3 || tok[1][1] != '.' ||
          (tok[1][0] != 'v' && tok[1][0] != 'e')) {
        throw ParseError(lineno, "expected 'segment <v|e>.<index> [src|dst]'");
      }
      Segment s;
      s.label = tok[1][0] == 'v' ? SegLabel::vertex : SegLabel::edge;
      s.index = to_int(tok[1].substr(2), lineno);
      if (tok.size() == 3) {
        if (tok[2] == "src") {
          s.role = Role::src;
        } else if (tok[2] == "dst") {
          s.role = Role::dst;
        } else {
          throw ParseError(lineno, "unknown segment role '" + tok[2] + "'");
        }
      }
      p.segments.push_back(std::move(s));
      seg = &p.segments.back();
    } else if (tok[0][0] == '%') {
      if (!seg) throw ParseError(lineno, "operation outside a segment");
      if (tok.size() < 3 || tok[1] != "=") throw ParseError(lineno, "expected '%<i> = <op> ...'");
      if (to_int(tok[0].substr(1), lineno) != static_cast<int>(seg->ops.size())) {
        throw ParseError(lineno, "operations must be numbered consecutively");
      }
      IrOp op;
      try {
        op.kind = parse_ir_kind(tok[2]);
      } catch (const LoweringError& e) {
        throw ParseError(lineno, e.what());
      }
      for (std::size_t k = 3; k < tok.size(); ++k) {
        const std::string& t = tok[k];
        if (t[0] == '%') {
          op.inputs.push_back(to_int(t.substr(1), lineno));
        } else if (t == "vertex" || t == "edge") {
          op.marker = t;
        } else if (t.rfind("ch=", 0) == 0) {
          op.channel = to_int(t.substr(3), lineno);
        } else if (t.rfind("ref=", 0) == 0) {
          op.ref = t.substr(4);
        } else if (t.rfind("name=", 0) == 0) {
          op.name = t.substr(5);
        } else if (t.rfind("dim=", 0) == 0) {
          op.dim = to_int(t.substr(4), lineno);
        } else if (t.rfind("round=", 0) == 0) {
          op.round = to_int(t.substr(6), lineno);
        } else {
          throw ParseError(lineno, "unexpected token '" + t + "'");
        }
      }
      seg->ops.push_back(std::move(op));
    } else {
      throw ParseError(lineno, "unexpected line '" + tok[0] + "'");
    }
  }
  return p;
}

std::size_t item_op_count(const IrProgram& p, std::size_t num_vertices, std::size_t num_edges) {
  std::size_t total = 0;
  for (const auto& seg : p.segments) {
    for (const auto& op : seg.ops) {
      if (op.kind == IrKind::input || op.kind == IrKind::output || is_comm(op.kind)) continue;
      total += seg.label == SegLabel::vertex ? num_vertices : num_edges;
    }
  }
  return total;
}

std::size_t count_ops(const IrProgram& p, SegLabel label, IrKind kind) {
  std::size_t n = 0;
  for (const auto& seg : p.segments) {
    if (seg.label != label) continue;
    for (const auto& op : seg.ops) n += op.kind == kind;
  }
  return n;
}

}  // namespace zipper
