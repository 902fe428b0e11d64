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

#ifndef ZIPPER_CODEGEN_HPP
#define ZIPPER_CODEGEN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zipper/hardware.hpp"
#include "zipper/ir.hpp"
#include "zipper/optimizer.hpp"
#include "zipper/tiling.hpp"

namespace zipper {

enum class Opcode : std::uint8_t {
  ADD,
  SUB,
  MUL,
  DIV,
  MAX,
  EXP,
  RELU,
  SIGMOID,
  GEMV,
  GEMM,
  BMM,
  GTHR_DST_SUM,
  GTHR_DST_MAX,
  SCTR_OUTE,
  SCTR_INE,
  LD_SRC,
  LD_DST,
  LD_EDGE,
  ST_DST,
  SIGNAL,
  WAIT,
  FCH_TILE,
  FCH_PTT,
  UPD_PTT,
  CHK_PTT,
};

inline constexpr int kNumOpcodes = static_cast<int>(Opcode::CHK_PTT) + 1;

const char* mnemonic(Opcode op);
bool is_elementwise(Opcode op);
ElwKind elw_kind(Opcode op);

/// Stream class addressed by SIGNAL/WAIT. `chk` makes a SIGNAL act on the
/// outcome of the preceding CHK.PTT.
enum class Target : std::uint8_t { none, s, e, d, chk };

const char* to_string(Target t);

inline constexpr std::uint32_t kNoOperand = 0xFFFFFFFFu;

struct Instruction {
  Opcode op = Opcode::WAIT;
  Target target = Target::none;
  std::uint8_t round = 0;
  std::uint8_t flags = 0;
  std::uint32_t dim_in = 0;
  std::uint32_t dim_out = 0;
  std::uint32_t src0 = kNoOperand;
  std::uint32_t src1 = kNoOperand;
  std::uint32_t dst = kNoOperand;
  std::uint32_t weight = kNoOperand;
  std::uint32_t channel = kNoOperand;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

inline constexpr std::size_t kInstructionBytes = 32;

enum class Occupancy : std::uint8_t { per_tile_src, per_tile_edge, per_partition_dst, weights };

const char* to_string(Occupancy o);

struct Region {
  std::string name;
  std::string binding;  // feature input, output or weight bound to the region
  std::uint64_t base = 0;
  std::uint64_t extent = 0;
  Occupancy occupancy = Occupancy::per_partition_dst;
  std::uint32_t row_bytes = 0;
  std::uint32_t capacity = 0;  // rows per slot
  std::uint32_t slots = 1;

  std::uint32_t width() const { return row_bytes / 4; }

  friend bool operator==(const Region&, const Region&) = default;
};

struct ChannelDesc {
  std::uint32_t id = 0;
  ChannelKind kind = ChannelKind::src_scatter;
  std::uint32_t dim = 0;
  std::uint8_t round = 0;
  std::uint32_t region = kNoOperand;  // edge buffer, accumulator, or d-side source

  friend bool operator==(const ChannelDesc&, const ChannelDesc&) = default;
};

enum class FunctionKind { s, e, d };

struct Program {
  std::vector<Instruction> s_function;
  std::vector<Instruction> e_function;
  std::vector<Instruction> d_function;
  std::vector<Region> regions;
  std::vector<ChannelDesc> channels;

  const std::vector<Instruction>& function(FunctionKind f) const;
  std::vector<Instruction>& function(FunctionKind f);
  std::size_t num_instructions() const { return s_function.size() + e_function.size() + d_function.size(); }
  /// Rounds present in the s/e functions, ascending.
  std::vector<int> rounds() const;
  const ChannelDesc* channel(std::uint32_t id) const;

  friend bool operator==(const Program&, const Program&) = default;
};

/// Row counts the embedding-memory layout must accommodate.
struct Capacities {
  std::uint32_t tile_sources = 1024;
  std::uint32_t tile_edges = 4096;
  std::uint32_t partition_rows = 1024;
  std::uint32_t slots = 1;

  static Capacities from_plan(const TilingPlan& plan, const StreamConfig& cfg);
};

/// Splits every vertex segment into a source replica (paths into
/// sendOutEdge) and a destination replica (paths into sendInEdge or an
/// output); empty replicas are dropped.
IrProgram specialize(const IrProgram& p);

Program emit(const IrProgram& specialized, const Capacities& caps = {});

/// Full pipeline: lower, optionally E2V, prune, specialize, emit.
struct CompileResult {
  IrProgram ir;           // after optimization, before specialization
  IrProgram specialized;
  Program program;
  PassReport report;
};

CompileResult compile_model(const ModelGraph& m, bool enable_e2v, const Capacities& caps = {});

std::vector<std::uint8_t> encode(const Program& p);
Program decode(const std::vector<std::uint8_t>& bytes);

std::string disassemble(const Program& p);

/// First load/store whose operand rows or width fall outside its region, or
/// whose region is of the wrong occupancy, for the given plan.
std::optional<std::string> check_operand_ranges(const Program& p, const TilingPlan& plan);

/// Fault injection: removes every SIGNAL that wakes eStreams.
Program drop_edge_signal(const Program& p);

}  // namespace zipper

#endif  // ZIPPER_CODEGEN_HPP
