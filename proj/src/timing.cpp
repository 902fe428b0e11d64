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

#include "zipper/timing.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <json.hpp>
#include <set>
#include <sstream>

#include "zipper/error.hpp"
#include "zipper/protocol.hpp"

namespace zipper {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::uint64_t mu_cycles(std::uint64_t n, std::uint64_t m, std::uint64_t k, const HardwareConfig& hw) {
  const auto rows = static_cast<std::uint64_t>(hw.mu_rows), cols = static_cast<std::uint64_t>(hw.mu_cols);
  return ceil_div(n, rows) * ceil_div(m, cols) * (k + rows + cols - 1);
}

int latency_factor(ElwKind kind) {
  return kind == ElwKind::exp || kind == ElwKind::div || kind == ElwKind::sigmoid ? 4 : 1;
}

std::uint64_t vu_elw_cycles(ElwKind kind, std::uint64_t items, std::uint64_t dim, const HardwareConfig& hw) {
  const auto lanes = static_cast<std::uint64_t>(hw.vu_cores) * static_cast<std::uint64_t>(hw.vu_lanes);
  return ceil_div(items * dim, lanes) * static_cast<std::uint64_t>(latency_factor(kind));
}

std::uint64_t vu_gemv_cycles(std::uint64_t macs, const HardwareConfig& hw) {
  return ceil_div(macs, static_cast<std::uint64_t>(hw.vu_cores) * static_cast<std::uint64_t>(hw.vu_lanes));
}

std::uint64_t vu_gop_cycles(std::span<const std::uint32_t> edges_per_vertex, std::uint64_t dim,
                            const HardwareConfig& hw) {
  std::vector<std::uint64_t> core(static_cast<std::size_t>(hw.vu_cores), 0);
  const std::uint64_t per_edge = ceil_div(dim, static_cast<std::uint64_t>(hw.vu_lanes));
  for (std::size_t i = 0; i < edges_per_vertex.size(); ++i) core[i % core.size()] += edges_per_vertex[i] * per_edge;
  return *std::max_element(core.begin(), core.end());
}

std::uint64_t mem_cycles(std::uint64_t bytes, const HardwareConfig& hw) {
  return bytes == 0 ? 0 : hw.offchip_latency + ceil_div(bytes, hw.offchip_bw);
}

std::string SimStats::to_json() const {
  nlohmann::ordered_json j;
  j["total_cycles"] = total_cycles;
  j["mu_busy"] = mu_busy;
  j["vu_busy"] = vu_busy;
  j["mem_busy"] = mem_busy;
  j["unit_busy"] = unit_busy;
  j["stream_stall"] = stream_stall;
  j["offchip_read_bytes"] = offchip_read_bytes;
  j["offchip_write_bytes"] = offchip_write_bytes;
  j["onchip_bytes"] = onchip_bytes;
  j["macs"] = macs;
  j["instructions"] = instructions;
  j["histogram"] = histogram;
  return j.dump(2);
}

std::string EnergyReport::to_json() const {
  nlohmann::ordered_json j;
  j["mac_pj"] = mac_pj;
  j["onchip_pj"] = onchip_pj;
  j["offchip_pj"] = offchip_pj;
  j["total_pj"] = total_pj;
  return j.dump(2);
}

EnergyReport energy(const SimStats& s, const EnergyParams& p) {
  if (p.e_mac < 0 || p.e_onchip < 0 || p.e_offchip < 0) throw ParameterError("energy parameters must be non-negative");
  EnergyReport r;
  r.mac_pj = static_cast<double>(s.macs) * p.e_mac;
  r.onchip_pj = static_cast<double>(s.onchip_bytes) * p.e_onchip;
  r.offchip_pj = static_cast<double>(s.offchip_bytes()) * 8.0 * p.e_offchip;
  r.total_pj = r.mac_pj + r.onchip_pj + r.offchip_pj;
  return r;
}

namespace {

bool is_sync(Opcode op) {
  return op == Opcode::SIGNAL || op == Opcode::WAIT || op == Opcode::FCH_TILE || op == Opcode::FCH_PTT ||
         op == Opcode::UPD_PTT || op == Opcode::CHK_PTT;
}

/// Degree profiles of one tile, cached.
struct TileProfile {
  std::vector<std::uint32_t> per_dst;   // edges per destination with edges
  std::vector<std::uint32_t> per_src;   // edges per kept source with edges
  std::map<EdgeType, std::uint64_t> per_type;
};

class Simulator {
 public:
  Simulator(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg, const HardwareConfig& hw,
            const SimOptions& opts)
      : prog_(prog), plan_(plan), cfg_(cfg), hw_(hw), opts_(opts), proto_(prog, plan, cfg) {
    mu_free_.assign(static_cast<std::size_t>(hw.mu_count), 0);
    vu_free_.assign(static_cast<std::size_t>(hw.vu_count), 0);
    r_.stats.unit_busy.assign(mu_free_.size() + vu_free_.size(), 0);
    ready_.assign(proto_.num_streams(), 0);
    for (std::size_t i = 0; i < proto_.num_streams(); ++i) r_.stats.stream_stall[proto_.stream(i).name()] = 0;
  }

  SimResult run() {
    const std::size_t n = proto_.num_streams();
    std::size_t next = 0;
    while (!proto_.finished()) {
      std::size_t pick = n;
      std::uint64_t best = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = (next + k) % n;
        if (!proto_.runnable(i)) continue;
        const std::uint64_t t = effective(i);
        if (pick == n || t < best) {
          pick = i;
          best = t;
        }
      }
      if (pick == n) throw ProtocolError("timing replay stalled: " + proto_.deadlock_report().to_string());
      issue(pick, best);
      next = (pick + 1) % n;
    }
    return std::move(r_);
  }

 private:
  using Key = std::pair<std::uint32_t, std::uint8_t>;

  std::uint64_t effective(std::size_t i) const {
    const StreamState& st = proto_.stream(i);
    std::uint64_t t = ready_[i];
    if (st.cls == StreamClass::d) {
      const Instruction* in = proto_.peek(i);
      if (in && in->op == Opcode::WAIT && !sem_.empty()) t = std::max(t, sem_.front());
    } else if (!st.active) {
      const Token& tok = proto_.queue(st.cls).front();
      const auto& posts = st.cls == StreamClass::s ? s_post_ : e_post_;
      t = std::max(t, posts.at({tok.tile, tok.round}));
    }
    return t;
  }

  const Partition& partition() const { return plan_.partitions.at(static_cast<std::size_t>(proto_.partition())); }

  const TileProfile& profile(std::uint32_t tile) {
    auto key = std::make_pair(proto_.partition(), tile);
    auto it = profiles_.find(key);
    if (it != profiles_.end()) return it->second;
    const Tile& t = partition().tiles[tile];
    TileProfile p;
    std::map<std::uint32_t, std::uint32_t> dst, src;
    for (const auto& e : t.edges) {
      ++dst[e.local_dst];
      ++src[e.local_src];
      ++p.per_type[e.type];
    }
    for (auto [v, c] : dst) p.per_dst.push_back(c);
    for (auto [v, c] : src) p.per_src.push_back(c);
    return profiles_.emplace(key, std::move(p)).first->second;
  }

  std::uint64_t rows(std::uint32_t region, int tile) const {
    if (region >= prog_.regions.size()) throw CodegenError("operand names no region");
    switch (prog_.regions[region].occupancy) {
      case Occupancy::per_tile_src:
        return partition().tiles.at(static_cast<std::size_t>(tile)).num_sources();
      case Occupancy::per_tile_edge:
        return partition().tiles.at(static_cast<std::size_t>(tile)).num_edges();
      case Occupancy::per_partition_dst:
        return partition().num_dst();
      case Occupancy::weights:
        return prog_.regions[region].capacity;
    }
    return 0;
  }

  /// Start time on the off-chip channel for a transfer requested at `t`.
  std::uint64_t transfer(std::uint64_t t, std::uint64_t bytes) {
    if (bytes == 0) return t;
    const std::uint64_t start = std::max(t, mem_free_);
    const std::uint64_t occupancy = ceil_div(bytes, hw_.offchip_bw);
    mem_free_ = start + occupancy;
    r_.stats.mem_busy += occupancy;
    record(Unit::mem, 0, start, start + occupancy);
    return start + mem_cycles(bytes, hw_);
  }

  void record(Unit u, int index, std::uint64_t b, std::uint64_t e) {
    if (opts_.record_timeline && e > b) r_.timeline.push_back({u, index, b, e});
  }

  /// Bounded dispatcher queue: instructions waiting for a unit.
  std::uint64_t admit(std::uint64_t t) {
    while (!waiting_.empty() && *waiting_.begin() <= t) waiting_.erase(waiting_.begin());
    if (static_cast<int>(waiting_.size()) >= hw_.queue_entries(cfg_)) {
      t = *waiting_.begin();
      waiting_.erase(waiting_.begin());
    }
    return t;
  }

  std::uint64_t compute(Unit u, std::uint64_t t, std::uint64_t cost) {
    auto& units = u == Unit::mu ? mu_free_ : vu_free_;
    auto it = std::min_element(units.begin(), units.end());
    const std::uint64_t start = std::max(t, *it);
    if (start > t) waiting_.insert(start);
    *it = start + cost;
    const auto idx = static_cast<std::size_t>(it - units.begin());
    r_.stats.unit_busy[(u == Unit::mu ? 0 : mu_free_.size()) + idx] += cost;
    (u == Unit::mu ? r_.stats.mu_busy : r_.stats.vu_busy) += cost;
    record(u, static_cast<int>(idx), start, start + cost);
    return start + cost;
  }

  void issue(std::size_t i, std::uint64_t t) {
    const StreamState before = proto_.stream(i);
    const std::string name = before.name();
    r_.stats.stream_stall[name] += t - ready_[i];
    if (before.cls == StreamClass::d) {
      const Instruction* in = proto_.peek(i);
      if (in && in->op == Opcode::WAIT) sem_.pop_front();
    }
    const StepInfo info = proto_.step(i);
    const Instruction& in = *info.inst;
    ++r_.stats.instructions;
    ++r_.stats.histogram[mnemonic(in.op)];

    std::uint64_t end = t;
    if (is_sync(in.op)) {
      end = t + static_cast<std::uint64_t>(hw_.scheduler_overhead);
    } else {
      std::uint64_t at = admit(t + static_cast<std::uint64_t>(hw_.scheduler_overhead + hw_.dispatcher_overhead));
      end = execute(in, info.tile, at);
    }
    r_.stats.total_cycles = std::max(r_.stats.total_cycles, end);
    ready_[i] = end;

    // Tiles claimed here arrive once their edge lists are fetched.
    for (auto tile : info.claimed) {
      const std::uint64_t bytes = partition().tiles[tile].num_edges() * kEdgeRecordBytes;
      r_.stats.offchip_read_bytes += bytes;
      fetched_[tile] = transfer(end, bytes);
      r_.stats.total_cycles = std::max(r_.stats.total_cycles, fetched_[tile]);
    }
    for (const auto& tok : info.posted_s) s_post_[{tok.tile, tok.round}] = std::max(end, fetched_[tok.tile]);
    if (info.posted_e) e_post_[{info.posted_e->tile, info.posted_e->round}] = end;
    if (info.posted_d) sem_.push_back(end);
    if (info.partition_begin) profiles_.clear();
  }

  std::uint64_t execute(const Instruction& in, int tile, std::uint64_t t) {
    auto& s = r_.stats;
    switch (in.op) {
      case Opcode::LD_SRC:
      case Opcode::LD_EDGE:
      case Opcode::LD_DST: {
        const std::uint64_t bytes = rows(in.dst, tile) * in.dim_out * 4;
        s.offchip_read_bytes += bytes;
        s.onchip_bytes += bytes;
        return transfer(t, bytes);
      }
      case Opcode::ST_DST: {
        const std::uint64_t bytes = rows(in.src0, tile) * in.dim_in * 4;
        s.offchip_write_bytes += bytes;
        s.onchip_bytes += bytes;
        return transfer(t, bytes);
      }
      case Opcode::GEMM: {
        const std::uint64_t n = rows(in.src0, tile);
        if (n == 0) return t;
        s.macs += n * in.dim_out * in.dim_in;
        s.onchip_bytes += (n * (in.dim_in + in.dim_out) + std::uint64_t{in.dim_in} * in.dim_out) * 4;
        return compute(Unit::mu, t, mu_cycles(n, in.dim_out, in.dim_in, hw_) + in.dim_in);
      }
      case Opcode::BMM: {
        const auto& prof = profile(static_cast<std::uint32_t>(tile));
        std::uint64_t cost = 0, n = 0;
        for (auto [type, count] : prof.per_type) {
          cost += mu_cycles(count, in.dim_out, in.dim_in, hw_) + in.dim_in;
          n += count;
        }
        if (n == 0) return t;
        s.macs += n * in.dim_out * in.dim_in;
        s.onchip_bytes += (n * (in.dim_in + in.dim_out) + prof.per_type.size() * in.dim_in * in.dim_out) * 4;
        return compute(Unit::mu, t, cost);
      }
      case Opcode::GEMV: {
        const std::uint64_t n = rows(in.src0, tile);
        if (n == 0) return t;
        const std::uint64_t macs = n * in.dim_out * in.dim_in;
        s.macs += macs;
        s.onchip_bytes += (n * (in.dim_in + in.dim_out) + std::uint64_t{in.dim_in} * in.dim_out) * 4;
        return compute(Unit::vu, t, vu_gemv_cycles(macs, hw_));
      }
      case Opcode::SCTR_OUTE:
      case Opcode::SCTR_INE:
      case Opcode::GTHR_DST_SUM:
      case Opcode::GTHR_DST_MAX: {
        const auto& prof = profile(static_cast<std::uint32_t>(tile));
        const auto& degrees = in.op == Opcode::SCTR_OUTE ? prof.per_src : prof.per_dst;
        std::uint64_t edges = 0;
        for (auto d : degrees) edges += d;
        if (edges == 0) return t;
        s.onchip_bytes += edges * in.dim_in * 4 * 2;
        return compute(Unit::vu, t, vu_gop_cycles(degrees, in.dim_in, hw_));
      }
      default: {
        const ElwKind k = elw_kind(in.op);
        const std::uint64_t items = rows(in.dst, tile);
        if (items == 0) return t;
        s.onchip_bytes += items * (in.dim_in * (is_unary(k) ? 1 : 2) + in.dim_out) * 4;
        return compute(Unit::vu, t, vu_elw_cycles(k, items, in.dim_out, hw_));
      }
    }
  }

  const Program& prog_;
  const TilingPlan& plan_;
  StreamConfig cfg_;
  HardwareConfig hw_;
  SimOptions opts_;
  Protocol proto_;
  SimResult r_;
  std::vector<std::uint64_t> ready_, mu_free_, vu_free_;
  std::uint64_t mem_free_ = 0;
  std::multiset<std::uint64_t> waiting_;
  std::map<Key, std::uint64_t> s_post_, e_post_;
  std::map<std::uint32_t, std::uint64_t> fetched_;
  std::deque<std::uint64_t> sem_;
  std::map<std::pair<int, std::uint32_t>, TileProfile> profiles_;
};

}  // namespace

SimResult simulate(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg, const HardwareConfig& hw,
                   const SimOptions& opts) {
  validate(hw, cfg);
  if (auto err = check_operand_ranges(prog, plan)) throw CapacityError(*err);
  return Simulator(prog, plan, cfg, hw, opts).run();
}

std::string utilization_csv(const SimResult& r, const HardwareConfig& hw, std::uint64_t window) {
  if (window == 0) throw ParameterError("utilization window must be positive");
  const std::uint64_t total = r.stats.total_cycles;
  const std::size_t n = static_cast<std::size_t>((total + window - 1) / window);
  std::vector<std::array<double, 3>> busy(n, {0, 0, 0});
  for (const auto& iv : r.timeline) {
    for (std::uint64_t w = iv.begin / window; w * window < iv.end && w < n; ++w) {
      const std::uint64_t b = std::max(iv.begin, w * window), e = std::min(iv.end, (w + 1) * window);
      busy[w][static_cast<std::size_t>(iv.unit)] += static_cast<double>(e - b);
    }
  }
  std::ostringstream out;
  out << "cycle,mu,vu,mem\n";
  const double units[3] = {static_cast<double>(hw.mu_count), static_cast<double>(hw.vu_count), 1.0};
  for (std::size_t w = 0; w < n; ++w) {
    const double len = static_cast<double>(std::min<std::uint64_t>(window, total - w * window));
    out << w * window;
    for (std::size_t u = 0; u < 3; ++u) out << ',' << busy[w][u] / (len * units[u]);
    out << '\n';
  }
  return out.str();
}

}  // namespace zipper
