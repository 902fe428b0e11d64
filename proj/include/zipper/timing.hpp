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

#ifndef ZIPPER_TIMING_HPP
#define ZIPPER_TIMING_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zipper/codegen.hpp"
#include "zipper/hardware.hpp"
#include "zipper/kernels.hpp"
#include "zipper/tiling.hpp"

namespace zipper {

/// Output-stationary systolic array: one pass per (mu_rows x mu_cols) output
/// block, each costing k plus the fill and drain of the array.
std::uint64_t mu_cycles(std::uint64_t n, std::uint64_t m, std::uint64_t k, const HardwareConfig& hw);

/// Cycles per SIMD pass of an elementwise op.
int latency_factor(ElwKind kind);

std::uint64_t vu_elw_cycles(ElwKind kind, std::uint64_t items, std::uint64_t dim, const HardwareConfig& hw);
std::uint64_t vu_gemv_cycles(std::uint64_t macs, const HardwareConfig& hw);

/// Scatter/gather: vertex i of the list goes to core i mod vu_cores and costs
/// edges(i) * ceil(dim / vu_lanes); the slowest core sets the time.
std::uint64_t vu_gop_cycles(std::span<const std::uint32_t> edges_per_vertex, std::uint64_t dim,
                            const HardwareConfig& hw);

/// Latency plus serialization on the off-chip channel; 0 for an empty transfer.
std::uint64_t mem_cycles(std::uint64_t bytes, const HardwareConfig& hw);

struct SimStats {
  std::uint64_t total_cycles = 0;
  std::uint64_t mu_busy = 0;
  std::uint64_t vu_busy = 0;
  std::uint64_t mem_busy = 0;
  std::vector<std::uint64_t> unit_busy;  // MUs then VUs
  std::map<std::string, std::uint64_t> stream_stall;
  std::uint64_t offchip_read_bytes = 0;
  std::uint64_t offchip_write_bytes = 0;
  std::uint64_t onchip_bytes = 0;
  std::uint64_t macs = 0;
  std::uint64_t instructions = 0;
  std::map<std::string, std::uint64_t> histogram;

  std::uint64_t offchip_bytes() const { return offchip_read_bytes + offchip_write_bytes; }
  std::string to_json() const;
};

enum class Unit : std::uint8_t { mu, vu, mem };

struct BusyInterval {
  Unit unit = Unit::mu;
  int index = 0;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

struct SimResult {
  SimStats stats;
  std::vector<BusyInterval> timeline;
};

struct SimOptions {
  bool record_timeline = false;
};

/// Event-driven replay of the stream protocol with unit contention. The
/// scheduler issues from the stream that is ready earliest (round-robin on
/// ties); compute goes to the first free unit of its class, transfers to the
/// single off-chip channel.
SimResult simulate(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg,
                   const HardwareConfig& hw, const SimOptions& opts = {});

/// Busy fraction per unit class over fixed windows:
/// `cycle,mu,vu,mem` with one row per window.
std::string utilization_csv(const SimResult& r, const HardwareConfig& hw, std::uint64_t window);

struct EnergyParams {
  double e_mac = 0.5;      // pJ per MAC
  double e_onchip = 1.0;   // pJ per byte
  double e_offchip = 7.0;  // pJ per bit
};

struct EnergyReport {
  double mac_pj = 0;
  double onchip_pj = 0;
  double offchip_pj = 0;
  double total_pj = 0;

  std::string to_json() const;
};

EnergyReport energy(const SimStats& stats, const EnergyParams& p = {});

}  // namespace zipper

#endif  // ZIPPER_TIMING_HPP
