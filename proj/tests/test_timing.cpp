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

#include <span>

#include "support.hpp"
#include "zipper/error.hpp"
#include "zipper/random.hpp"
#include "zipper/tiling.hpp"
#include "zipper/timing.hpp"

using namespace zipper;

namespace {

// one partition of `rows` destinations, no tiles, and a single GEMM
Program single_gemm(std::uint32_t rows, std::uint32_t k, std::uint32_t m) {
  Program p;
  Region act;
  act.name = "a";
  act.occupancy = Occupancy::per_partition_dst;
  act.row_bytes = k * 4;
  act.capacity = rows;
  act.extent = std::uint64_t{act.row_bytes} * rows;
  Region out = act;
  out.name = "b";
  out.row_bytes = m * 4;
  out.base = act.extent;
  out.extent = std::uint64_t{out.row_bytes} * rows;
  Region w;
  w.name = "W";
  w.binding = "W";
  w.occupancy = Occupancy::weights;
  w.row_bytes = m * 4;
  w.capacity = k;
  w.base = out.base + out.extent;
  w.extent = std::uint64_t{w.row_bytes} * k;
  p.regions = {act, out, w};
  Instruction fch;
  fch.op = Opcode::FCH_PTT;
  Instruction gemm;
  gemm.op = Opcode::GEMM;
  gemm.dim_in = k;
  gemm.dim_out = m;
  gemm.src0 = 0;
  gemm.dst = 1;
  gemm.weight = 2;
  p.d_function = {fch, gemm};
  return p;
}

}  // namespace

TEST_CASE("matrix unit closed form") {
  const HardwareConfig hw;
  CHECK(mu_cycles(32, 128, 128, hw) == 287);
  CHECK(mu_cycles(1, 1, 1, hw) == 160);
  CHECK(mu_cycles(64, 256, 128, hw) == 1148);
  CHECK(mu_cycles(0, 128, 128, hw) == 0);
}

TEST_CASE("vector unit closed forms") {
  const HardwareConfig hw;
  CHECK(vu_elw_cycles(ElwKind::add, 4, 128, hw) == 2);
  CHECK(vu_elw_cycles(ElwKind::exp, 1, 256, hw) == 4);
  const std::vector<std::uint32_t> star{8};
  CHECK(vu_gop_cycles(star, 32, hw) == 8);
  // idle cores do not help a hub vertex
  const std::vector<std::uint32_t> skew{8, 1, 1, 1};
  CHECK(vu_gop_cycles(skew, 32, hw) == 8);
  const std::vector<std::uint32_t> wide{1, 1, 1, 1, 1, 1, 1, 1, 1};
  CHECK(vu_gop_cycles(wide, 64, hw) == 4);
  CHECK(vu_gemv_cycles(257, hw) == 2);
}

TEST_CASE("memory closed form") {
  const HardwareConfig hw;
  CHECK(mem_cycles(256, hw) == 101);
  CHECK(mem_cycles(0, hw) == 0);
  CHECK(mem_cycles(1 << 20, hw) == 4196);
}

TEST_CASE("randomized closed forms") {
  Rng rng(2026);
  for (int i = 0; i < 20; ++i) {
    HardwareConfig hw;
    hw.mu_rows = static_cast<int>(1 + rng.below(64));
    hw.mu_cols = static_cast<int>(1 + rng.below(256));
    hw.vu_cores = static_cast<int>(1 + rng.below(16));
    hw.vu_lanes = static_cast<int>(1 + rng.below(64));
    hw.offchip_bw = 1 + rng.below(512);
    hw.offchip_latency = rng.below(300);
    const std::uint64_t n = 1 + rng.below(1000), m = 1 + rng.below(1000), k = 1 + rng.below(1000);
    const std::uint64_t R = static_cast<std::uint64_t>(hw.mu_rows), C = static_cast<std::uint64_t>(hw.mu_cols);
    CHECK(mu_cycles(n, m, k, hw) == ((n + R - 1) / R) * ((m + C - 1) / C) * (k + R + C - 1));
    const std::uint64_t lanes = static_cast<std::uint64_t>(hw.vu_cores * hw.vu_lanes);
    CHECK(vu_elw_cycles(ElwKind::mul, n, m, hw) == (n * m + lanes - 1) / lanes);
    CHECK(vu_elw_cycles(ElwKind::div, n, m, hw) == 4 * ((n * m + lanes - 1) / lanes));
    const std::uint64_t bytes = rng.below(1 << 22);
    CHECK(mem_cycles(bytes, hw) == (bytes == 0 ? 0 : hw.offchip_latency + (bytes + hw.offchip_bw - 1) / hw.offchip_bw));
  }
}

TEST_CASE("energy arithmetic") {
  SimStats s;
  s.offchip_read_bytes = 1024;
  const EnergyReport e = energy(s);
  CHECK(e.offchip_pj == 57344.0);
  CHECK(e.total_pj == 57344.0);
  CHECK(energy(SimStats{}).total_pj == 0.0);

  s.macs = 100;
  s.onchip_bytes = 10;
  const EnergyReport a = energy(s);
  CHECK(a.mac_pj == 50.0);
  CHECK(a.onchip_pj == 10.0);
  s.offchip_write_bytes = 1024;
  const EnergyReport b = energy(s);
  CHECK(b.offchip_pj == 2 * a.offchip_pj);
  CHECK(b.mac_pj == a.mac_pj);
  CHECK(b.onchip_pj == a.onchip_pj);
  CHECK_THROWS_AS(energy(s, EnergyParams{-1, 1, 7}), ParameterError);
}

TEST_CASE("a single GEMM costs the array time plus issue overhead") {
  const Graph g = Graph::from_edges(32, {});
  const auto plan = make_plan(g, 32, 32, TilingMode::sparse);
  const HardwareConfig hw;
  const SimResult r = simulate(single_gemm(32, 128, 128), plan, {1, 1}, hw);
  // array passes plus one weight load of k rows
  CHECK(r.stats.mu_busy == 287 + 128);
  CHECK(r.stats.total_cycles >= 287 + 128);
  CHECK(r.stats.total_cycles <= 287 + 128 + 8);
  CHECK(r.stats.macs == 32ull * 128 * 128);
  CHECK(r.stats.offchip_bytes() == 0);
}

TEST_CASE("empty program") {
  const auto plan = make_plan(test::g4(), 2, 2, TilingMode::sparse);
  const SimResult r = simulate(Program{}, plan, {1, 1}, HardwareConfig{});
  CHECK(r.stats.mu_busy == 0);
  CHECK(r.stats.vu_busy == 0);
  CHECK(r.stats.offchip_bytes() == 0);
}

TEST_CASE("busy cycles are conserved across stream counts") {
  const Graph g = gen_synthetic(SyntheticKind::rmat, 512, 4096, 1);
  for (const char* name : {"gcn", "gat", "ggnn"}) {
    const auto plan = make_plan(g, 128, 64, TilingMode::sparse);
    const Program prog = compile_model(build_model(name, 32, 32), true, Capacities::from_plan(plan, {8, 8})).program;
    const HardwareConfig hw;
    const SimStats base = simulate(prog, plan, {1, 1}, hw).stats;
    for (StreamConfig cfg : {StreamConfig{2, 2}, StreamConfig{4, 4}, StreamConfig{8, 2}}) {
      const SimStats s = simulate(prog, plan, cfg, hw).stats;
      CHECK(s.mu_busy + s.vu_busy == base.mu_busy + base.vu_busy);
      CHECK(s.mem_busy == base.mem_busy);
      CHECK(s.instructions == base.instructions);
      CHECK(s.macs == base.macs);
    }
  }
}

TEST_CASE("monotone in bandwidth and stream count") {
  for (const char* name : {"gcn", "gat", "sage", "ggnn", "rgcn"}) {
    const ModelGraph m = build_model(name, 32, 32);
    const Graph g = test::typed_for(m, gen_synthetic(SyntheticKind::rmat, 512, 4096, 2), 2);
    const auto plan = make_plan(g, 128, 64, TilingMode::sparse);
    const Program prog = compile_model(m, true, Capacities::from_plan(plan, {8, 8})).program;
    std::uint64_t prev = ~0ull;
    for (std::uint64_t bw : {16, 64, 256, 1024}) {
      HardwareConfig hw;
      hw.offchip_bw = bw;
      const std::uint64_t c = simulate(prog, plan, {2, 2}, hw).stats.total_cycles;
      CHECK(c <= prev);
      prev = c;
    }
    const HardwareConfig hw;
    const std::uint64_t slack = 4 * (hw.scheduler_overhead + hw.dispatcher_overhead) * plan.num_tiles();
    const int counts[] = {1, 2, 4, 8};
    for (int s = 0; s < 4; ++s) {
      for (int e = 0; e < 4; ++e) {
        const std::uint64_t c = simulate(prog, plan, {counts[s], counts[e]}, hw).stats.total_cycles;
        if (s + 1 < 4) CHECK(simulate(prog, plan, {counts[s + 1], counts[e]}, hw).stats.total_cycles <= c + slack);
        if (e + 1 < 4) CHECK(simulate(prog, plan, {counts[s], counts[e + 1]}, hw).stats.total_cycles <= c + slack);
      }
    }
  }
}

TEST_CASE("traffic matches the tiling prediction") {
  const Graph g = gen_synthetic(SyntheticKind::rmat, 1024, 8192, 4);
  for (auto mode : {TilingMode::regular, TilingMode::sparse}) {
    const auto plan = make_plan(g, 256, 128, mode);
    const Program prog = compile_model(build_model("gcn", 64, 64), true, Capacities::from_plan(plan, {4, 4})).program;
    const SimStats s = simulate(prog, plan, {4, 4}, HardwareConfig{}).stats;
    CHECK(s.offchip_bytes() == traffic_stats(plan, 64, 4).total_bytes);
  }
}

TEST_CASE("pipelining overlaps tiles") {
  const Graph g = gen_synthetic(SyntheticKind::rmat, 1024, 8192, 1);
  const auto plan = make_plan(g, 256, 128, TilingMode::sparse);
  REQUIRE(plan.num_tiles() >= 16);
  const Program prog = compile_model(build_model("gcn", 16, 16), true, Capacities::from_plan(plan, {4, 4})).program;
  const HardwareConfig hw;
  CHECK(simulate(prog, plan, {4, 4}, hw).stats.total_cycles < simulate(prog, plan, {1, 1}, hw).stats.total_cycles);
}

TEST_CASE("deterministic stats and utilization") {
  const Graph g = gen_synthetic(SyntheticKind::rmat, 256, 2048, 1);
  const auto plan = make_plan(g, 64, 64, TilingMode::sparse);
  const Program prog = compile_model(build_model("gat", 16, 16), true, Capacities::from_plan(plan, {2, 2})).program;
  SimOptions opts;
  opts.record_timeline = true;
  const HardwareConfig hw;
  const SimResult a = simulate(prog, plan, {2, 2}, hw, opts), b = simulate(prog, plan, {2, 2}, hw, opts);
  CHECK(a.stats.to_json() == b.stats.to_json());
  const std::string csv = utilization_csv(a, hw, 500);
  CHECK(csv.rfind("cycle,mu,vu,mem\n", 0) == 0);
  CHECK(csv == utilization_csv(b, hw, 500));
  std::uint64_t busy = 0;
  for (const auto& iv : a.timeline) busy += iv.end - iv.begin;
  CHECK(busy == a.stats.mu_busy + a.stats.vu_busy + a.stats.mem_busy);
  CHECK_THROWS_AS(utilization_csv(a, hw, 0), ParameterError);
}

TEST_CASE("invalid hardware") {
  const auto plan = make_plan(test::g4(), 2, 2, TilingMode::sparse);
  HardwareConfig hw;
  hw.mu_count = 0;
  CHECK_THROWS_AS(simulate(Program{}, plan, {1, 1}, hw), ParameterError);
  CHECK_THROWS_AS(simulate(Program{}, plan, {0, 1}, HardwareConfig{}), ParameterError);
}
