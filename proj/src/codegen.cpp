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

#include "zipper/codegen.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "zipper/error.hpp"

namespace zipper {

namespace {

constexpr const char* kMnemonics[kNumOpcodes] = {
    "ADD",       "SUB",          "MUL",          "DIV",       "MAX",       "EXP",
    "RELU",      "SIGMOID",      "GEMV",         "GEMM",      "BMM",       "GTHR.DST.SUM",
    "GTHR.DST.MAX", "SCTR.OUTE", "SCTR.INE",     "LD.SRC",    "LD.DST",    "LD.EDGE",
    "ST.DST",    "SIGNAL",       "WAIT",         "FCH.TILE",  "FCH.PTT",   "UPD.PTT",
    "CHK.PTT",
};

}  // namespace

const char* mnemonic(Opcode op) { return kMnemonics[static_cast<int>(op)]; }

bool is_elementwise(Opcode op) { return op <= Opcode::SIGMOID; }

ElwKind elw_kind(Opcode op) {
  switch (op) {
    case Opcode::ADD: return ElwKind::add;
    case Opcode::SUB: return ElwKind::sub;
    case Opcode::MUL: return ElwKind::mul;
    case Opcode::DIV: return ElwKind::div;
    case Opcode::MAX: return ElwKind::max;
    case Opcode::EXP: return ElwKind::exp;
    case Opcode::RELU: return ElwKind::relu;
    case Opcode::SIGMOID: return ElwKind::sigmoid;
    default: throw CodegenError(std::string(mnemonic(op)) + " is not elementwise");
  }
}

const char* to_string(Target t) {
  switch (t) {
    case Target::none: return "-";
    case Target::s: return "s";
    case Target::e: return "e";
    case Target::d: return "d";
    case Target::chk: return "chk";
  }
  return "?";
}

const char* to_string(Occupancy o) {
  switch (o) {
    case Occupancy::per_tile_src: return "per-tile-src";
    case Occupancy::per_tile_edge: return "per-tile-edge";
    case Occupancy::per_partition_dst: return "per-partition-dst";
    case Occupancy::weights: return "weights";
  }
  return "?";
}

const std::vector<Instruction>& Program::function(FunctionKind f) const {
  return f == FunctionKind::s ? s_function : f == FunctionKind::e ? e_function : d_function;
}

std::vector<Instruction>& Program::function(FunctionKind f) {
  return f == FunctionKind::s ? s_function : f == FunctionKind::e ? e_function : d_function;
}

std::vector<int> Program::rounds() const {
  std::set<int> r;
  for (const auto& in : e_function) r.insert(in.round);
  for (const auto& in : s_function) r.insert(in.round);
  return {r.begin(), r.end()};
}

const ChannelDesc* Program::channel(std::uint32_t id) const {
  for (const auto& c : channels) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

Capacities Capacities::from_plan(const TilingPlan& plan, const StreamConfig& cfg) {
  Capacities c;
  c.tile_sources = 1;
  c.tile_edges = 1;
  for (const auto& p : plan.partitions) {
    for (const auto& t : p.tiles) {
      c.tile_sources = std::max(c.tile_sources, static_cast<std::uint32_t>(t.num_sources()));
      c.tile_edges = std::max(c.tile_edges, static_cast<std::uint32_t>(t.num_edges()));
    }
  }
  c.partition_rows = static_cast<std::uint32_t>(
      std::max<std::size_t>(1, std::min(plan.dst_partition_size, plan.num_vertices)));
  c.slots = static_cast<std::uint32_t>(std::max(1, cfg.n_s));
  return c;
}

// ---------------------------------------------------------------------------
// Specialization

namespace {

std::vector<char> ancestors(const Segment& seg, const std::function<bool(const IrOp&)>& root) {
  std::vector<char> keep(seg.ops.size(), 0);
  for (std::size_t i = seg.ops.size(); i-- > 0;) {
    if (root(seg.ops[i])) keep[i] = 1;
    if (!keep[i]) continue;
    for (int in : seg.ops[i].inputs) keep[static_cast<std::size_t>(in)] = 1;
  }
  return keep;
}

}  // namespace

IrProgram specialize(const IrProgram& p) {
  IrProgram out;
  out.channels = p.channels;
  out.weights = p.weights;
  for (const auto& seg : p.segments) {
    if (seg.label == SegLabel::edge || seg.role != Role::none) {
      out.segments.push_back(seg);
      continue;
    }
    const auto src = ancestors(seg, [](const IrOp& op) { return op.kind == IrKind::send_out_edge; });
    const auto dst = ancestors(seg, [](const IrOp& op) {
      return op.kind == IrKind::send_in_edge || op.kind == IrKind::output;
    });
    for (auto [keep, role] : {std::pair{src, Role::src}, std::pair{dst, Role::dst}}) {
      if (std::none_of(keep.begin(), keep.end(), [](char k) { return k != 0; })) continue;
      Segment replica = seg;
      replica.role = role;
      compact_segment(replica, keep);
      out.segments.push_back(std::move(replica));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

class Emitter {
 public:
  Emitter(const IrProgram& p, const Capacities& caps) : p_(p), caps_(caps) {}

  Program run() {
    for (const auto& [name, w] : p_.weights) {
      weight_region_[name] = add_region(name, name, Occupancy::weights,
                                        static_cast<std::uint32_t>(w.cols),
                                        static_cast<std::uint32_t>(w.rows * w.batches), 1);
    }
    for (const auto& c : p_.channels) {
      ChannelDesc d;
      d.id = static_cast<std::uint32_t>(c.id);
      d.kind = c.kind;
      d.dim = static_cast<std::uint32_t>(c.dim);
      d.round = static_cast<std::uint8_t>(c.round);
      if (c.kind == ChannelKind::gather_sum || c.kind == ChannelKind::gather_max) {
        d.region = add_region("acc" + std::to_string(c.id), "", Occupancy::per_partition_dst, d.dim,
                              caps_.partition_rows, 1);
      } else {
        d.region = add_region("ch" + std::to_string(c.id), "", Occupancy::per_tile_edge, d.dim,
                              caps_.tile_edges, caps_.slots);
      }
      prog_.channels.push_back(d);
    }
    classify();

    std::set<int> rounds;
    for (auto si : edge_) rounds.insert(p_.segments[si].ops.empty() ? 0 : p_.segments[si].ops[0].round);
    for (const auto& c : p_.channels) {
      if (c.kind == ChannelKind::src_scatter) rounds.insert(c.round);
    }
    for (int r : rounds) {
      emit_s_round(r);
      emit_e_round(r);
    }
    emit_d(rounds);
    return std::move(prog_);
  }

 private:
  struct Key {
    std::size_t seg;
    std::size_t op;
    auto operator<=>(const Key&) const = default;
  };

  std::uint32_t add_region(const std::string& name, const std::string& binding, Occupancy occ,
                           std::uint32_t width, std::uint32_t capacity, std::uint32_t slots) {
    std::string unique = name;
    for (int k = 2; std::any_of(prog_.regions.begin(), prog_.regions.end(),
                                [&](const Region& r) { return r.name == unique; });
         ++k) {
      unique = name + "." + std::to_string(k);
    }
    Region r;
    r.name = unique;
    r.binding = binding;
    r.occupancy = occ;
    r.row_bytes = width * 4;
    r.capacity = capacity;
    r.slots = slots;
    r.base = next_base_;
    r.extent = static_cast<std::uint64_t>(r.row_bytes) * capacity * slots;
    next_base_ += (r.extent + 63) / 64 * 64;
    prog_.regions.push_back(r);
    return static_cast<std::uint32_t>(prog_.regions.size() - 1);
  }

  void classify() {
    for (std::size_t si = 0; si < p_.segments.size(); ++si) {
      const Segment& seg = p_.segments[si];
      if (seg.label == SegLabel::edge) {
        edge_.push_back(si);
        continue;
      }
      if (seg.role == Role::none) throw CodegenError("segment " + seg.name() + " is not specialized");
      for (const auto& op : seg.ops) {
        if (seg.role == Role::src && (is_recv(op.kind) || op.kind == IrKind::output ||
                                      op.kind == IrKind::send_in_edge)) {
          throw CodegenError("source replica " + seg.name() + " contains " + to_string(op.kind) +
                             "; source-side values may not depend on gathers");
        }
        if (seg.role == Role::dst && op.kind == IrKind::send_out_edge) {
          throw CodegenError("destination replica " + seg.name() + " contains sendOutEdge");
        }
      }
      (seg.role == Role::src ? src_ : dst_).push_back(si);
    }
    // Where each channel's sent value lives on the destination side.
    for (auto si : dst_) {
      const Segment& seg = p_.segments[si];
      for (std::size_t i = 0; i < seg.ops.size(); ++i) {
        if (seg.ops[i].kind == IrKind::send_in_edge) {
          dst_source_[seg.ops[i].channel] = {si, static_cast<std::size_t>(seg.ops[i].inputs[0])};
        }
      }
    }
  }

  ChannelDesc& channel(int id) {
    for (auto& c : prog_.channels) {
      if (c.id == static_cast<std::uint32_t>(id)) return c;
    }
    throw CodegenError("unknown channel " + std::to_string(id));
  }

  std::uint32_t value_region(std::size_t si, std::size_t oi) {
    const Segment& seg = p_.segments[si];
    const IrOp& op = seg.ops[oi];
    if (is_recv(op.kind)) return channel(op.channel).region;
    auto it = regions_.find({si, oi});
    if (it != regions_.end()) return it->second;
    Occupancy occ = Occupancy::per_partition_dst;
    std::string prefix = "d.";
    std::uint32_t cap = caps_.partition_rows, slots = 1;
    if (seg.label == SegLabel::edge) {
      occ = Occupancy::per_tile_edge;
      prefix = "e.";
      cap = caps_.tile_edges;
      slots = caps_.slots;
    } else if (seg.role == Role::src) {
      occ = Occupancy::per_tile_src;
      prefix = "s.";
      cap = caps_.tile_sources;
      slots = caps_.slots;
    }
    const std::string binding = op.kind == IrKind::input ? op.ref : "";
    const auto id = add_region(prefix + op.name, binding, occ, static_cast<std::uint32_t>(op.dim), cap, slots);
    regions_[{si, oi}] = id;
    return id;
  }

  /// Computational instruction for a single-item op; nullopt for ops that
  /// need no instruction of their own.
  std::optional<Instruction> lower(std::size_t si, std::size_t oi, int round) {
    const Segment& seg = p_.segments[si];
    const IrOp& op = seg.ops[oi];
    Instruction in;
    in.round = static_cast<std::uint8_t>(round);
    auto input_region = [&](std::size_t k) {
      return value_region(si, static_cast<std::size_t>(op.inputs[k]));
    };
    auto input_dim = [&](std::size_t k) {
      return static_cast<std::uint32_t>(seg.ops[static_cast<std::size_t>(op.inputs[k])].dim);
    };
    switch (op.kind) {
      case IrKind::input:
        in.op = seg.label == SegLabel::edge ? Opcode::LD_EDGE
                : seg.role == Role::src     ? Opcode::LD_SRC
                                            : Opcode::LD_DST;
        in.dst = value_region(si, oi);
        in.dim_out = static_cast<std::uint32_t>(op.dim);
        return in;
      case IrKind::output: {
        in.op = Opcode::ST_DST;
        in.src0 = input_region(0);
        in.dim_in = input_dim(0);
        const auto out = add_region("out." + op.ref, op.ref, Occupancy::per_partition_dst, in.dim_in,
                                    caps_.partition_rows, 1);
        in.dst = out;
        return in;
      }
      case IrKind::mv:
      case IrKind::bmm_row:
        in.op = op.kind == IrKind::bmm_row ? Opcode::BMM : op.dim > 1 ? Opcode::GEMM : Opcode::GEMV;
        in.src0 = input_region(0);
        in.weight = weight_region_.at(op.ref);
        in.dim_in = input_dim(0);
        in.dim_out = static_cast<std::uint32_t>(op.dim);
        in.dst = value_region(si, oi);
        return in;
      case IrKind::send_out_edge:
        in.op = Opcode::SCTR_OUTE;
        in.src0 = input_region(0);
        in.dst = channel(op.channel).region;
        in.dim_in = in.dim_out = static_cast<std::uint32_t>(op.dim);
        in.channel = static_cast<std::uint32_t>(op.channel);
        return in;
      case IrKind::recv_dst: {
        auto it = dst_source_.find(op.channel);
        if (it == dst_source_.end()) {
          throw CodegenError("channel " + std::to_string(op.channel) + " has no destination-side sender");
        }
        in.op = Opcode::SCTR_INE;
        in.src0 = value_region(it->second.seg, it->second.op);
        in.dst = channel(op.channel).region;
        in.dim_in = in.dim_out = static_cast<std::uint32_t>(op.dim);
        in.channel = static_cast<std::uint32_t>(op.channel);
        return in;
      }
      case IrKind::send_dst_sum:
      case IrKind::send_dst_max:
        in.op = op.kind == IrKind::send_dst_sum ? Opcode::GTHR_DST_SUM : Opcode::GTHR_DST_MAX;
        in.src0 = input_region(0);
        in.dst = channel(op.channel).region;
        in.dim_in = in.dim_out = static_cast<std::uint32_t>(op.dim);
        in.channel = static_cast<std::uint32_t>(op.channel);
        return in;
      case IrKind::recv_src:
      case IrKind::recv_in_edge:
      case IrKind::send_in_edge:
        return std::nullopt;
      default: {
        const ElwKind k = ir_elw_kind(op.kind);
        static constexpr Opcode kOps[] = {Opcode::ADD, Opcode::SUB,  Opcode::MUL,  Opcode::DIV,
                                          Opcode::MAX, Opcode::EXP, Opcode::RELU, Opcode::SIGMOID};
        in.op = kOps[static_cast<int>(k)];
        in.src0 = input_region(0);
        in.dim_in = input_dim(0);
        if (op.inputs.size() == 2) {
          in.src1 = input_region(1);
          in.dim_in = std::max(in.dim_in, input_dim(1));
        }
        in.dim_out = static_cast<std::uint32_t>(op.dim);
        in.dst = value_region(si, oi);
        return in;
      }
    }
  }

  static Instruction control(Opcode op, int round, Target target = Target::none) {
    Instruction in;
    in.op = op;
    in.round = static_cast<std::uint8_t>(round);
    in.target = target;
    return in;
  }

  void emit_s_round(int r) {
    auto& fn = prog_.s_function;
    fn.push_back(control(Opcode::WAIT, r, Target::s));
    for (auto si : src_) {
      const auto keep = ancestors(p_.segments[si], [&](const IrOp& op) {
        return op.kind == IrKind::send_out_edge && p_.channel(op.channel)->round == r;
      });
      for (std::size_t oi = 0; oi < keep.size(); ++oi) {
        if (!keep[oi]) continue;
        if (auto in = lower(si, oi, r)) fn.push_back(*in);
      }
    }
    fn.push_back(control(Opcode::SIGNAL, r, Target::e));
  }

  void emit_e_round(int r) {
    auto& fn = prog_.e_function;
    fn.push_back(control(Opcode::WAIT, r, Target::e));
    for (auto si : edge_) {
      const Segment& seg = p_.segments[si];
      if (seg.ops.empty() || seg.ops[0].round != r) continue;
      for (std::size_t oi = 0; oi < seg.ops.size(); ++oi) {
        if (auto in = lower(si, oi, r)) fn.push_back(*in);
      }
    }
    fn.push_back(control(Opcode::FCH_TILE, r));
    fn.push_back(control(Opcode::CHK_PTT, r));
    fn.push_back(control(Opcode::SIGNAL, r, Target::chk));
  }

  void emit_d(const std::set<int>& rounds) {
    auto& fn = prog_.d_function;
    fn.push_back(control(Opcode::FCH_PTT, 0));
    std::set<Key> emitted;
    auto emit_upto = [&](int limit, int round_tag) {
      for (auto si : dst_) {
        const Segment& seg = p_.segments[si];
        for (std::size_t oi = 0; oi < seg.ops.size(); ++oi) {
          if (seg.ops[oi].round > limit || emitted.count({si, oi})) continue;
          emitted.insert({si, oi});
          if (auto in = lower(si, oi, round_tag)) fn.push_back(*in);
        }
      }
    };
    int last = 0;
    for (int r : rounds) {
      emit_upto(r, r);
      fn.push_back(control(Opcode::UPD_PTT, r, Target::d));
      fn.push_back(control(Opcode::SIGNAL, r, Target::s));
      fn.push_back(control(Opcode::WAIT, r, Target::d));
      last = r + 1;
    }
    emit_upto(std::numeric_limits<int>::max(), last);
  }

  const IrProgram& p_;
  Capacities caps_;
  Program prog_;
  std::uint64_t next_base_ = 0;
  std::vector<std::size_t> src_, dst_, edge_;
  std::map<Key, std::uint32_t> regions_;
  std::map<std::string, std::uint32_t> weight_region_;
  std::map<int, Key> dst_source_;
};

}  // namespace

Program emit(const IrProgram& specialized, const Capacities& caps) {
  if (auto err = verify_ir(specialized)) throw CodegenError("invalid IR: " + *err);
  return Emitter(specialized, caps).run();
}

CompileResult compile_model(const ModelGraph& m, bool enable_e2v, const Capacities& caps) {
  CompileResult r;
  IrProgram ir = lower_to_ir(defuse(m));
  if (enable_e2v) ir = e2v(ir, &r.report);
  r.ir = prune_dead(ir, &r.report);
  r.specialized = specialize(r.ir);
  r.program = emit(r.specialized, caps);
  return r;
}

// ---------------------------------------------------------------------------
// Binary codec

namespace {

constexpr char kMagic[4] = {'Z', 'I', 'P', 'R'};
constexpr std::uint16_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  void put_string(const std::string& s) {
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string get_string() {
    const auto n = get<std::uint16_t>();
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DecodeError("truncated program stream at byte " + std::to_string(pos_));
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

void put_instruction(Writer& w, const Instruction& in) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(in.op));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(in.target));
  w.put<std::uint8_t>(in.round);
  w.put<std::uint8_t>(in.flags);
  for (auto v : {in.dim_in, in.dim_out, in.src0, in.src1, in.dst, in.weight, in.channel}) w.put<std::uint32_t>(v);
}

Instruction get_instruction(Reader& r) {
  Instruction in;
  const auto op = r.get<std::uint8_t>();
  if (op >= kNumOpcodes) throw DecodeError("unknown opcode " + std::to_string(op));
  in.op = static_cast<Opcode>(op);
  const auto target = r.get<std::uint8_t>();
  if (target > static_cast<std::uint8_t>(Target::chk)) throw DecodeError("unknown signal target");
  in.target = static_cast<Target>(target);
  in.round = r.get<std::uint8_t>();
  in.flags = r.get<std::uint8_t>();
  in.dim_in = r.get<std::uint32_t>();
  in.dim_out = r.get<std::uint32_t>();
  in.src0 = r.get<std::uint32_t>();
  in.src1 = r.get<std::uint32_t>();
  in.dst = r.get<std::uint32_t>();
  in.weight = r.get<std::uint32_t>();
  in.channel = r.get<std::uint32_t>();
  return in;
}

}  // namespace

std::vector<std::uint8_t> encode(const Program& p) {
  Writer w;
  for (char c : kMagic) w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.regions.size()));
  for (const auto& r : p.regions) {
    w.put_string(r.name);
    w.put_string(r.binding);
    w.put<std::uint64_t>(r.base);
    w.put<std::uint64_t>(r.extent);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(r.occupancy));
    w.put<std::uint32_t>(r.row_bytes);
    w.put<std::uint32_t>(r.capacity);
    w.put<std::uint32_t>(r.slots);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.channels.size()));
  for (const auto& c : p.channels) {
    w.put<std::uint32_t>(c.id);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.kind));
    w.put<std::uint32_t>(c.dim);
    w.put<std::uint8_t>(c.round);
    w.put<std::uint32_t>(c.region);
  }
  for (const auto* fn : {&p.s_function, &p.e_function, &p.d_function}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(fn->size()));
    for (const auto& in : *fn) put_instruction(w, in);
  }
  return std::move(w.bytes);
}

Program decode(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(c)) throw DecodeError("bad magic header");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) throw DecodeError("unsupported program version " + std::to_string(version));
  Program p;
  const auto nregions = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nregions; ++i) {
    Region reg;
    reg.name = r.get_string();
    reg.binding = r.get_string();
    reg.base = r.get<std::uint64_t>();
    reg.extent = r.get<std::uint64_t>();
    const auto occ = r.get<std::uint8_t>();
    if (occ > static_cast<std::uint8_t>(Occupancy::weights)) throw DecodeError("unknown region occupancy");
    reg.occupancy = static_cast<Occupancy>(occ);
    reg.row_bytes = r.get<std::uint32_t>();
    reg.capacity = r.get<std::uint32_t>();
    reg.slots = r.get<std::uint32_t>();
    p.regions.push_back(std::move(reg));
  }
  const auto nchannels = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nchannels; ++i) {
    ChannelDesc c;
    c.id = r.get<std::uint32_t>();
    const auto kind = r.get<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(ChannelKind::gather_max)) throw DecodeError("unknown channel kind");
    c.kind = static_cast<ChannelKind>(kind);
    c.dim = r.get<std::uint32_t>();
    c.round = r.get<std::uint8_t>();
    c.region = r.get<std::uint32_t>();
    p.channels.push_back(c);
  }
  for (auto* fn : {&p.s_function, &p.e_function, &p.d_function}) {
    const auto n = r.get<std::uint32_t>();
    r.need(static_cast<std::size_t>(n) * kInstructionBytes);
    for (std::uint32_t i = 0; i < n; ++i) fn->push_back(get_instruction(r));
  }
  if (!r.done()) throw DecodeError("trailing bytes after program");
  return p;
}

// ---------------------------------------------------------------------------
// Listing

std::string disassemble(const Program& p) {
  std::ostringstream out;
  auto region = [&](std::uint32_t id) -> std::string {
    return id < p.regions.size() ? p.regions[id].name : "#" + std::to_string(id);
  };
  for (std::size_t i = 0; i < p.regions.size(); ++i) {
    const Region& r = p.regions[i];
    out << "region " << i << ' ' << r.name << ' ' << to_string(r.occupancy) << " base=" << r.base
        << " extent=" << r.extent << " row=" << r.row_bytes << " rows=" << r.capacity << " slots=" << r.slots;
    if (!r.binding.empty()) out << " bind=" << r.binding;
    out << '\n';
  }
  for (const auto& c : p.channels) {
    out << "channel " << c.id << ' ' << to_string(c.kind) << " dim=" << c.dim << " round=" << int(c.round)
        << " region=" << region(c.region) << '\n';
  }
  const std::pair<const char*, const std::vector<Instruction>*> fns[] = {
      {"s_function", &p.s_function}, {"e_function", &p.e_function}, {"d_function", &p.d_function}};
  for (const auto& [name, fn] : fns) {
    out << name << ":\n";
    for (std::size_t i = 0; i < fn->size(); ++i) {
      const Instruction& in = (*fn)[i];
      out << "  " << i << ": " << mnemonic(in.op);
      if (in.target != Target::none) out << ' ' << to_string(in.target);
      out << " r" << int(in.round);
      if (in.src0 != kNoOperand) out << " src0=" << region(in.src0);
      if (in.src1 != kNoOperand) out << " src1=" << region(in.src1);
      if (in.weight != kNoOperand) out << " w=" << region(in.weight);
      if (in.dst != kNoOperand) out << " dst=" << region(in.dst);
      if (in.channel != kNoOperand) out << " ch=" << in.channel;
      if (in.dim_in) out << " in=" << in.dim_in;
      if (in.dim_out) out << " out=" << in.dim_out;
      out << '\n';
    }
  }
  return out.str();
}

std::optional<std::string> check_operand_ranges(const Program& p, const TilingPlan& plan) {
  std::size_t max_src = 0, max_edges = 0, max_dst = 0;
  for (const auto& part : plan.partitions) {
    max_dst = std::max(max_dst, part.num_dst());
    for (const auto& t : part.tiles) {
      max_src = std::max(max_src, t.num_sources());
      max_edges = std::max(max_edges, t.num_edges());
    }
  }
  const std::pair<const char*, const std::vector<Instruction>*> fns[] = {
      {"s", &p.s_function}, {"e", &p.e_function}, {"d", &p.d_function}};
  for (const auto& [name, fn] : fns) {
    for (std::size_t i = 0; i < fn->size(); ++i) {
      const Instruction& in = (*fn)[i];
      std::uint32_t reg = kNoOperand, dim = 0;
      Occupancy occ{};
      std::size_t rows = 0;
      switch (in.op) {
        case Opcode::LD_SRC: reg = in.dst; dim = in.dim_out; occ = Occupancy::per_tile_src; rows = max_src; break;
        case Opcode::LD_EDGE: reg = in.dst; dim = in.dim_out; occ = Occupancy::per_tile_edge; rows = max_edges; break;
        case Opcode::LD_DST: reg = in.dst; dim = in.dim_out; occ = Occupancy::per_partition_dst; rows = max_dst; break;
        case Opcode::ST_DST: reg = in.src0; dim = in.dim_in; occ = Occupancy::per_partition_dst; rows = max_dst; break;
        default: continue;
      }
      const std::string where = std::string(name) + "[" + std::to_string(i) + "] " + mnemonic(in.op);
      if (reg >= p.regions.size()) return where + " names no region";
      const Region& r = p.regions[reg];
      if (r.occupancy != occ) return where + " uses " + to_string(r.occupancy) + " region " + r.name;
      if (r.width() != dim) return where + " width " + std::to_string(dim) + " differs from region " + r.name;
      if (rows > r.capacity) {
        return where + " needs " + std::to_string(rows) + " rows, region " + r.name + " holds " +
               std::to_string(r.capacity);
      }
      if (static_cast<std::uint64_t>(r.row_bytes) * r.capacity * r.slots > r.extent) {
        return where + " region " + r.name + " extent too small";
      }
    }
  }
  return std::nullopt;
}

Program drop_edge_signal(const Program& p) {
  Program q = p;
  std::erase_if(q.s_function, [](const Instruction& in) {
    return in.op == Opcode::SIGNAL && in.target == Target::e;
  });
  return q;
}

}  // namespace zipper
