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

#ifndef ZIPPER_RUNTIME_HPP
#define ZIPPER_RUNTIME_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zipper/codegen.hpp"
#include "zipper/features.hpp"
#include "zipper/graph.hpp"
#include "zipper/protocol.hpp"
#include "zipper/tiling.hpp"

namespace zipper {

struct TraceEvent {
  std::uint64_t step = 0;
  StreamClass cls = StreamClass::d;
  int stream_index = 0;
  std::uint32_t pc = 0;
  Opcode op = Opcode::WAIT;
  Target target = Target::none;
  int partition = -1;
  int tile = -1;  // global tile id
  int round = 0;
};

struct StreamSnapshot {
  std::string name;
  StreamClass cls = StreamClass::d;
  StreamStatus status = StreamStatus::finished;
  std::uint32_t pc = 0;
};

/// Append-only event log plus the stream states when execution stopped.
struct Trace {
  std::vector<TraceEvent> events;
  std::vector<StreamSnapshot> final_streams;

  std::string to_text() const;
};

struct RuntimeStats {
  std::uint64_t steps = 0;
  std::uint64_t offchip_read_bytes = 0;   // feature loads and tile edge lists
  std::uint64_t offchip_write_bytes = 0;  // stores
  std::uint64_t peak_live_bytes = 0;      // embedding memory, weights included
};

template <typename Scalar>
struct RunResult {
  FeatureSet<Scalar> output;
  Trace trace;
  RuntimeStats stats;
};

class DeadlockError : public ProtocolError {
 public:
  DeadlockError(DeadlockReport report, Trace trace)
      : ProtocolError(report.to_string()), report_(std::move(report)), trace_(std::move(trace)) {}
  const DeadlockReport& report() const { return report_; }
  const Trace& trace() const { return trace_; }

 private:
  DeadlockReport report_;
  Trace trace_;
};

struct ExecOptions {
  bool record_trace = true;
};

/// Runs the program over the plan with round-robin interleaving of the
/// streams. Throws DeadlockError when every unfinished stream is stuck and
/// ProtocolError on semaphore underflow.
template <typename Scalar>
RunResult<Scalar> execute(const Program& prog, const TilingPlan& plan, const Graph& g,
                          const FeatureSet<Scalar>& feats, const WeightSet<Scalar>& weights,
                          const StreamConfig& cfg, const ExecOptions& opts = {});

extern template RunResult<float> execute(const Program&, const TilingPlan&, const Graph&,
                                         const FeatureSet<float>&, const WeightSet<float>&,
                                         const StreamConfig&, const ExecOptions&);
extern template RunResult<double> execute(const Program&, const TilingPlan&, const Graph&,
                                          const FeatureSet<double>&, const WeightSet<double>&,
                                          const StreamConfig&, const ExecOptions&);

/// Wait-for analysis of a finished or stalled trace; "none" when every
/// stream finished or some stream could still run.
DeadlockReport detect_deadlock(const Trace& trace);

}  // namespace zipper

#endif  // ZIPPER_RUNTIME_HPP
