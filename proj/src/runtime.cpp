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

#include "zipper/runtime.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "zipper/error.hpp"

namespace zipper {

std::string Trace::to_text() const {
  std::ostringstream out;
  for (const auto& ev : events) {
    out << ev.step << ' ' << (ev.cls == StreamClass::d ? "d" : to_string(ev.cls) + std::to_string(ev.stream_index))
        << ' ' << ev.pc << ' ' << mnemonic(ev.op);
    if (ev.target != Target::none) out << ' ' << to_string(ev.target);
    out << " p=" << ev.partition << " t=" << ev.tile << " r=" << ev.round << '\n';
  }
  for (const auto& s : final_streams) out << "# " << s.name << ' ' << to_string(s.status) << " pc=" << s.pc << '\n';
  return out.str();
}

namespace {

Trace snapshot(const Protocol& proto, std::vector<TraceEvent> events) {
  Trace t;
  t.events = std::move(events);
  for (std::size_t i = 0; i < proto.num_streams(); ++i) {
    const StreamState& st = proto.stream(i);
    t.final_streams.push_back({st.name(), st.cls, proto.status(i), static_cast<std::uint32_t>(st.pc)});
  }
  return t;
}

template <typename Scalar>
class Machine {
 public:
  Machine(const Program& prog, const TilingPlan& plan, const Graph& g, const FeatureSet<Scalar>& feats,
          const WeightSet<Scalar>& weights)
      : prog_(prog), plan_(plan), g_(g), feats_(feats) {
    for (std::uint32_t r = 0; r < prog.regions.size(); ++r) {
      const Region& reg = prog.regions[r];
      if (reg.occupancy != Occupancy::weights) continue;
      auto it = weights.find(reg.binding);
      if (it == weights.end()) throw ShapeError("missing weight '" + reg.binding + "'");
      if (static_cast<std::uint64_t>(it->second.rows()) != reg.capacity || it->second.cols() != reg.width()) {
        throw ShapeError("weight '" + reg.binding + "' is " + std::to_string(it->second.rows()) + "x" +
                         std::to_string(it->second.cols()) + ", expected " + std::to_string(reg.capacity) + "x" +
                         std::to_string(reg.width()));
      }
      weights_[r] = &it->second;
      weight_bytes_ += reg.extent;
    }
    out_.vertex = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(g.num_vertices()), 0);
    for (const auto& reg : prog.regions) {
      if (reg.occupancy == Occupancy::per_partition_dst && reg.name.rfind("out.", 0) == 0) {
        out_.vertex = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(g.num_vertices()), reg.width());
      }
    }
    live_ = weight_bytes_;
    stats.peak_live_bytes = live_;
  }

  void apply(const StepInfo& info) {
    const Instruction& in = *info.inst;
    for (auto t : info.claimed) {
      stats.offchip_read_bytes += partition().tiles[t].num_edges() * kEdgeRecordBytes;
    }
    if (info.partition_begin) {
      part_.clear();
      pending_.clear();
      recount();
    }
    if (info.finished) return;
    const Tile* tile = info.tile >= 0 ? &partition().tiles[static_cast<std::size_t>(info.tile)] : nullptr;
    Ctx ctx{tile, info.tile, info.round};
    switch (in.op) {
      case Opcode::LD_SRC: {
        need_tile(ctx, in);
        Matrix<Scalar> m(static_cast<Eigen::Index>(tile->num_sources()), feats_.vertex.cols());
        for (std::size_t i = 0; i < tile->num_sources(); ++i) {
          m.row(static_cast<Eigen::Index>(i)) = feats_.vertex.row(tile->kept_sources[i]);
        }
        load(ctx, in, std::move(m));
        break;
      }
      case Opcode::LD_EDGE: {
        need_tile(ctx, in);
        if (!feats_.edge) throw ShapeError("program loads edge features but none were given");
        Matrix<Scalar> m(static_cast<Eigen::Index>(tile->num_edges()), feats_.edge->cols());
        for (std::size_t i = 0; i < tile->num_edges(); ++i) {
          m.row(static_cast<Eigen::Index>(i)) = feats_.edge->row(tile->edges[i].id);
        }
        load(ctx, in, std::move(m));
        break;
      }
      case Opcode::LD_DST: {
        const Partition& p = partition();
        load(ctx, in, feats_.vertex.middleRows(p.dst_begin, static_cast<Eigen::Index>(p.num_dst())));
        break;
      }
      case Opcode::ST_DST: {
        const Partition& p = partition();
        const Matrix<Scalar>& x = read(ctx, in.src0);
        if (x.cols() != out_.vertex.cols()) throw ShapeError("store width differs from output region");
        out_.vertex.middleRows(p.dst_begin, static_cast<Eigen::Index>(p.num_dst())) = x;
        stats.offchip_write_bytes += static_cast<std::uint64_t>(x.size()) * 4;
        break;
      }
      case Opcode::GEMM:
      case Opcode::GEMV:
        write(ctx, in.dst, rowwise_product<Scalar>(read(ctx, in.src0), weight(in.weight)));
        break;
      case Opcode::BMM: {
        need_tile(ctx, in);
        const Matrix<Scalar>& w = weight(in.weight);
        const int types = static_cast<int>(w.rows() / std::max<Eigen::Index>(1, in.dim_in));
        write(ctx, in.dst, batched_product<Scalar>(read(ctx, in.src0), w, types, [&](Eigen::Index i) {
                return tile->edges[static_cast<std::size_t>(i)].type;
              }));
        break;
      }
      case Opcode::SCTR_OUTE:
      case Opcode::SCTR_INE: {
        need_tile(ctx, in);
        const Matrix<Scalar>& x = read(ctx, in.src0);
        Matrix<Scalar> m(static_cast<Eigen::Index>(tile->num_edges()), x.cols());
        for (std::size_t i = 0; i < tile->num_edges(); ++i) {
          const auto& e = tile->edges[i];
          m.row(static_cast<Eigen::Index>(i)) = x.row(in.op == Opcode::SCTR_OUTE ? e.local_src : e.local_dst);
        }
        write(ctx, in.dst, std::move(m));
        break;
      }
      case Opcode::GTHR_DST_SUM:
      case Opcode::GTHR_DST_MAX: {
        need_tile(ctx, in);
        Matrix<Scalar> x = read(ctx, in.src0);
        live_ += static_cast<std::uint64_t>(x.size()) * sizeof(float);
        pending_[{in.channel, static_cast<std::uint32_t>(ctx.tile_index)}] = std::move(x);
        break;
      }
      case Opcode::UPD_PTT:
        for (const auto& c : prog_.channels) {
          if (c.round != in.round || (c.kind != ChannelKind::gather_sum && c.kind != ChannelKind::gather_max)) continue;
          const ReduceKind rk = c.kind == ChannelKind::gather_max ? ReduceKind::max : ReduceKind::sum;
          write(ctx, c.region,
                Matrix<Scalar>::Constant(static_cast<Eigen::Index>(partition().num_dst()), c.dim,
                                         reduce_identity<Scalar>(rk)));
        }
        break;
      case Opcode::WAIT:
        if (info.tile < 0) commit(in.round);
        break;
      case Opcode::FCH_TILE:
        release(ctx);
        break;
      case Opcode::SIGNAL:
      case Opcode::FCH_PTT:
      case Opcode::CHK_PTT:
        break;
      default: {
        const ElwKind k = elw_kind(in.op);
        if (is_unary(k)) {
          write(ctx, in.dst, elementwise<Scalar>(k, read(ctx, in.src0)));
        } else {
          write(ctx, in.dst, elementwise<Scalar>(k, read(ctx, in.src0), read(ctx, in.src1)));
        }
        break;
      }
    }
    stats.peak_live_bytes = std::max(stats.peak_live_bytes, live_);
  }

  FeatureSet<Scalar> output() { return std::move(out_); }

  RuntimeStats stats;

 private:
  struct Ctx {
    const Tile* tile;
    int tile_index;
    int round;
  };
  using TileKey = std::tuple<std::uint32_t, int, int>;  // region, tile index, round

  const Partition& partition() const {
    return plan_.partitions.at(static_cast<std::size_t>(std::max(0, current_partition_)));
  }

  void need_tile(const Ctx& ctx, const Instruction& in) const {
    if (!ctx.tile) throw ProtocolError(std::string(mnemonic(in.op)) + " executed outside a tile");
  }

  const Region& region(std::uint32_t id) const {
    if (id >= prog_.regions.size()) throw ProtocolError("operand names no region");
    return prog_.regions[id];
  }

  static bool tile_scoped(const Region& r) {
    return r.occupancy == Occupancy::per_tile_src || r.occupancy == Occupancy::per_tile_edge;
  }

  const Matrix<Scalar>& weight(std::uint32_t id) const {
    auto it = weights_.find(id);
    if (it == weights_.end()) throw ProtocolError("region " + region(id).name + " is not a weight");
    return *it->second;
  }

  const Matrix<Scalar>& read(const Ctx& ctx, std::uint32_t id) const {
    const Region& r = region(id);
    if (r.occupancy == Occupancy::weights) return weight(id);
    if (tile_scoped(r)) {
      auto it = tiles_.find({id, ctx.tile_index, ctx.round});
      if (it == tiles_.end()) throw ProtocolError("read of unwritten tile region " + r.name);
      return it->second;
    }
    auto it = part_.find(id);
    if (it == part_.end()) throw ProtocolError("read of unwritten region " + r.name);
    return it->second;
  }

  void write(const Ctx& ctx, std::uint32_t id, Matrix<Scalar> m) {
    const Region& r = region(id);
    if (r.occupancy == Occupancy::weights) throw ProtocolError("write to weight region " + r.name);
    if (m.cols() != static_cast<Eigen::Index>(r.width())) {
      throw ShapeError("value of width " + std::to_string(m.cols()) + " written to region " + r.name + " of width " +
                       std::to_string(r.width()));
    }
    if (static_cast<std::uint64_t>(m.rows()) > r.capacity) {
      throw CapacityError("region " + r.name + " holds " + std::to_string(r.capacity) + " rows, " +
                          std::to_string(m.rows()) + " written");
    }
    Matrix<Scalar>* slot;
    if (tile_scoped(r)) {
      if (!ctx.tile) throw ProtocolError("tile region " + r.name + " written outside a tile");
      slot = &tiles_[{id, ctx.tile_index, ctx.round}];
    } else {
      slot = &part_[id];
    }
    live_ -= static_cast<std::uint64_t>(slot->size()) * sizeof(float);
    *slot = std::move(m);
    live_ += static_cast<std::uint64_t>(slot->size()) * sizeof(float);
  }

  void load(const Ctx& ctx, const Instruction& in, Matrix<Scalar> m) {
    stats.offchip_read_bytes += static_cast<std::uint64_t>(m.size()) * 4;
    write(ctx, in.dst, std::move(m));
  }

  /// Applies buffered gather contributions of a round: tiles ascending, and
  /// within a tile edges sorted by destination then source.
  void commit(int round) {
    const Partition& p = partition();
    for (const auto& c : prog_.channels) {
      if (c.round != round || (c.kind != ChannelKind::gather_sum && c.kind != ChannelKind::gather_max)) continue;
      const ReduceKind rk = c.kind == ChannelKind::gather_max ? ReduceKind::max : ReduceKind::sum;
      Matrix<Scalar>& acc = part_.at(c.region);
      for (auto it = pending_.lower_bound({c.id, 0}); it != pending_.end() && it->first.first == c.id;) {
        const Tile& t = p.tiles[it->first.second];
        const Matrix<Scalar>& x = it->second;
        for (std::size_t i = 0; i < t.num_edges(); ++i) {
          const auto row = static_cast<Eigen::Index>(i);
          for (Eigen::Index j = 0; j < x.cols(); ++j) {
            acc(t.edges[i].local_dst, j) = reduce(rk, acc(t.edges[i].local_dst, j), x(row, j));
          }
        }
        live_ -= static_cast<std::uint64_t>(x.size()) * sizeof(float);
        it = pending_.erase(it);
      }
    }
  }

  void release(const Ctx& ctx) {
    for (auto it = tiles_.begin(); it != tiles_.end();) {
      if (std::get<1>(it->first) == ctx.tile_index && std::get<2>(it->first) == ctx.round) {
        live_ -= static_cast<std::uint64_t>(it->second.size()) * sizeof(float);
        it = tiles_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void recount() {
    live_ = weight_bytes_;
    for (const auto& [k, m] : tiles_) live_ += static_cast<std::uint64_t>(m.size()) * sizeof(float);
  }

 public:
  int current_partition_ = -1;

 private:
  const Program& prog_;
  const TilingPlan& plan_;
  const Graph& g_;
  const FeatureSet<Scalar>& feats_;
  FeatureSet<Scalar> out_;
  std::map<std::uint32_t, const Matrix<Scalar>*> weights_;
  std::map<TileKey, Matrix<Scalar>> tiles_;
  std::map<std::uint32_t, Matrix<Scalar>> part_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, Matrix<Scalar>> pending_;  // channel, tile index
  std::uint64_t weight_bytes_ = 0;
  std::uint64_t live_ = 0;
};

}  // namespace

template <typename Scalar>
RunResult<Scalar> execute(const Program& prog, const TilingPlan& plan, const Graph& g,
                          const FeatureSet<Scalar>& feats, const WeightSet<Scalar>& weights,
                          const StreamConfig& cfg, const ExecOptions& opts) {
  validate(cfg);
  if (plan.num_vertices != g.num_vertices()) throw ShapeError("plan and graph differ in vertex count");
  if (static_cast<std::size_t>(feats.vertex.rows()) != g.num_vertices()) {
    throw ShapeError("feature rows differ from the vertex count");
  }
  if (auto err = check_operand_ranges(prog, plan)) throw CapacityError(*err);

  Protocol proto(prog, plan, cfg);
  Machine<Scalar> m(prog, plan, g, feats, weights);
  std::vector<TraceEvent> events;
  std::size_t tiles = plan.num_tiles(), rounds = std::max<std::size_t>(1, prog.rounds().size());
  const std::uint64_t bound =
      (prog.num_instructions() + 1) * (tiles + plan.partitions.size() + 1) * (rounds + 1) * 4 + 1024;
  std::size_t next = 0;
  const std::size_t n = proto.num_streams();
  while (!proto.finished()) {
    std::size_t pick = n;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (next + k) % n;
      if (proto.runnable(i)) {
        pick = i;
        break;
      }
    }
    if (pick == n) throw DeadlockError(proto.deadlock_report(), snapshot(proto, std::move(events)));
    if (m.stats.steps >= bound) throw ProtocolError("execution exceeded " + std::to_string(bound) + " steps");
    const StepInfo info = proto.step(pick);
    m.current_partition_ = proto.partition();
    m.apply(info);
    if (opts.record_trace) {
      TraceEvent ev;
      ev.step = m.stats.steps;
      ev.cls = proto.stream(pick).cls;
      ev.stream_index = proto.stream(pick).index;
      ev.pc = static_cast<std::uint32_t>(info.pc);
      ev.op = info.inst->op;
      ev.target = info.inst->target;
      ev.partition = info.partition;
      ev.tile = info.tile >= 0 ? static_cast<int>(plan.partitions[static_cast<std::size_t>(info.partition)]
                                                      .tiles[static_cast<std::size_t>(info.tile)]
                                                      .tile_id)
                               : -1;
      ev.round = info.round;
      events.push_back(ev);
    }
    ++m.stats.steps;
    next = (pick + 1) % n;
  }
  RunResult<Scalar> r;
  r.stats = m.stats;
  r.output = m.output();
  r.trace = snapshot(proto, std::move(events));
  return r;
}

template RunResult<float> execute(const Program&, const TilingPlan&, const Graph&, const FeatureSet<float>&,
                                  const WeightSet<float>&, const StreamConfig&, const ExecOptions&);
template RunResult<double> execute(const Program&, const TilingPlan&, const Graph&, const FeatureSet<double>&,
                                   const WeightSet<double>&, const StreamConfig&, const ExecOptions&);

DeadlockReport detect_deadlock(const Trace& trace) {
  DeadlockReport r;
  bool stuck = false;
  for (const auto& s : trace.final_streams) {
    if (s.status == StreamStatus::ready) return r;
    if (s.status != StreamStatus::finished) stuck = true;
  }
  if (!stuck) return r;
  r.deadlocked = true;

  std::set<StreamClass> ran;
  std::set<Target> signalled;
  for (const auto& ev : trace.events) {
    ran.insert(ev.cls);
    if (ev.op == Opcode::SIGNAL) signalled.insert(ev.target);
  }
  std::map<StreamClass, std::vector<StreamClass>> waits;
  for (const auto& s : trace.final_streams) {
    std::string line = s.name + " " + to_string(s.status);
    if (s.cls == StreamClass::d && s.status == StreamStatus::blocked) {
      waits[StreamClass::d] = {StreamClass::e};
      line += " at pc " + std::to_string(s.pc) + ", waiting on e";
    } else if (s.cls == StreamClass::e && s.status == StreamStatus::idle) {
      waits[StreamClass::e] = {StreamClass::s};
      line += ", waiting on s";
    } else if (s.cls == StreamClass::s && s.status == StreamStatus::idle) {
      waits[StreamClass::s] = {StreamClass::d, StreamClass::e};
      line += ", waiting on d or e";
    }
    r.streams.push_back(line);
  }
  if (waits.count(StreamClass::d) && waits.count(StreamClass::e) && waits.count(StreamClass::s)) {
    r.cycle = {"d", "e", "s", "d"};
  } else {
    for (const auto& [cls, on] : waits) r.cycle.push_back(to_string(cls));
  }
  // A class is starved when the class that should wake it ran but never
  // raised the waking signal.
  if (waits.count(StreamClass::e) && ran.count(StreamClass::s) && !signalled.count(Target::e)) r.starved.push_back("e");
  if (waits.count(StreamClass::d) && ran.count(StreamClass::e) && !signalled.count(Target::chk)) r.starved.push_back("d");
  if (waits.count(StreamClass::s) && ran.count(StreamClass::d) && !signalled.count(Target::s)) r.starved.push_back("s");
  return r;
}

}  // namespace zipper
