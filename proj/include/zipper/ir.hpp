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

#ifndef ZIPPER_IR_HPP
#define ZIPPER_IR_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zipper/features.hpp"
#include "zipper/graph.hpp"
#include "zipper/model.hpp"

namespace zipper {

enum class IrKind {
  input,
  output,
  mv,
  bmm_row,
  add,
  sub,
  mul,
  div,
  max,
  exp,
  relu,
  sigmoid,
  send_out_edge,
  recv_src,
  send_in_edge,
  recv_dst,
  send_dst_sum,
  send_dst_max,
  recv_in_edge,
};

const char* to_string(IrKind kind);
IrKind parse_ir_kind(const std::string& name);
bool is_send(IrKind kind);
bool is_recv(IrKind kind);
inline bool is_comm(IrKind kind) { return is_send(kind) || is_recv(kind); }
bool is_ir_elementwise(IrKind kind);
ElwKind ir_elw_kind(IrKind kind);
/// Number of operands an op of this kind takes.
int ir_arity(IrKind kind);

struct IrOp {
  IrKind kind = IrKind::input;
  std::vector<int> inputs;  // positions within the segment
  int channel = -1;
  std::string ref;     // weight for mv/bmm_row, feature binding for input/output
  std::string marker;  // "vertex" or "edge" on input/output markers
  std::string name;
  int dim = 0;
  int round = 0;

  friend bool operator==(const IrOp&, const IrOp&) = default;
};

enum class SegLabel { vertex, edge };

/// Which half of a vertex segment survives specialization.
enum class Role { none, src, dst };

struct Segment {
  SegLabel label = SegLabel::vertex;
  int index = 0;
  Role role = Role::none;
  std::vector<IrOp> ops;

  std::string name() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class ChannelKind { src_scatter, dst_scatter, gather_sum, gather_max };

const char* to_string(ChannelKind kind);

struct Channel {
  int id = 0;
  ChannelKind kind = ChannelKind::src_scatter;
  int dim = 0;
  int round = 0;

  friend bool operator==(const Channel&, const Channel&) = default;
};

struct WeightInfo {
  int rows = 0;
  int cols = 0;
  int batches = 1;

  friend bool operator==(const WeightInfo&, const WeightInfo&) = default;
};

struct IrProgram {
  std::vector<Segment> segments;
  std::vector<Channel> channels;
  std::map<std::string, WeightInfo> weights;

  const Channel* channel(int id) const;
  int next_channel_id() const;
  /// Number of edge rounds, i.e. one past the highest channel round.
  int num_rounds() const;

  friend bool operator==(const IrProgram&, const IrProgram&) = default;
};

/// Model with every edge value private to one round, plus the round of each
/// node. A gather closes a round; edge values read in a later round are
/// recomputed there from their vertex sources.
struct RoundSplit {
  ModelGraph model;
  std::vector<int> phase;
};

RoundSplit split_rounds(const ModelGraph& m);

IrProgram lower_to_ir(const ModelGraph& m);

/// First invariant violation, or nullopt when the program is well formed.
std::optional<std::string> verify_ir(const IrProgram& p);

/// Whole-graph reference execution of an IR program.
template <typename Scalar>
FeatureSet<Scalar> interpret_ir(const IrProgram& p, const Graph& g, const FeatureSet<Scalar>& feats,
                                const WeightSet<Scalar>& weights);

std::string dump_ir(const IrProgram& p);
IrProgram parse_ir(const std::string& text);

/// Per-item executions: vertex-segment ops run once per vertex, edge-segment
/// ops once per edge. Markers and communication ops are not counted.
std::size_t item_op_count(const IrProgram& p, std::size_t num_vertices, std::size_t num_edges);

/// Count of computational ops of `kind` across segments with `label`.
std::size_t count_ops(const IrProgram& p, SegLabel label, IrKind kind);

extern template FeatureSet<float> interpret_ir(const IrProgram&, const Graph&, const FeatureSet<float>&,
                                               const WeightSet<float>&);
extern template FeatureSet<double> interpret_ir(const IrProgram&, const Graph&, const FeatureSet<double>&,
                                                const WeightSet<double>&);

}  // namespace zipper

#endif  // ZIPPER_IR_HPP
