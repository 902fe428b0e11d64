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

#ifndef ZIPPER_PROTOCOL_HPP
#define ZIPPER_PROTOCOL_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <tuple>
#include <string>
#include <vector>

#include "zipper/codegen.hpp"
#include "zipper/hardware.hpp"
#include "zipper/tiling.hpp"

namespace zipper {

enum class StreamClass : std::uint8_t { s, e, d };

const char* to_string(StreamClass c);

enum class StreamStatus : std::uint8_t { ready, blocked, idle, finished };

const char* to_string(StreamStatus s);

/// Unit of s/e work: one tile of the current partition in one round.
struct Token {
  std::uint32_t tile = 0;  // index within the partition
  std::uint8_t round = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class ChkFlag : std::uint8_t { none, next_tile, resume_d };

struct StreamState {
  StreamClass cls = StreamClass::d;
  int index = 0;
  std::size_t pc = 0;
  bool active = false;  // s/e: inside a round section
  Token token;
  ChkFlag flag = ChkFlag::none;
  std::optional<std::uint32_t> claimed;  // tile claimed by the last CHK.PTT
  bool finished = false;

  std::string name() const;
};

/// What one step did, for the executors layered on the protocol.
struct StepInfo {
  std::size_t stream = 0;
  std::size_t pc = 0;
  const Instruction* inst = nullptr;
  int partition = -1;
  int tile = -1;  // index within the partition, -1 on the d stream
  int round = 0;
  std::vector<std::uint32_t> claimed;  // tiles claimed by this step
  bool partition_begin = false;        // FCH.PTT moved to a new partition
  bool finished = false;               // d has run out of partitions
  std::vector<Token> posted_s;         // tokens queued for source streams
  std::optional<Token> posted_e;       // token queued for edge streams
  bool posted_d = false;               // d semaphore raised
};

/// Wait-for analysis of a stalled configuration.
struct DeadlockReport {
  bool deadlocked = false;
  std::vector<std::string> cycle;    // stream classes, first repeated at the end
  std::vector<std::string> starved;  // classes nobody can wake
  std::vector<std::string> streams;  // per-stream snapshot lines

  std::string to_string() const;
};

/// The multi-stream synchronization protocol: one d stream, n_s source
/// streams and n_e edge streams exchanging (tile, round) tokens.
///
/// d runs d_function per partition. Its SIGNAL s claims up to n_s tiles in
/// ascending order and queues them for source streams; an s stream takes a
/// token, runs the matching round section and hands it to an e stream. The e
/// stream's CHK.PTT retires its tile and either claims the next unprocessed
/// one, resumes d once the partition has drained, or does nothing.
class Protocol {
 public:
  Protocol(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg);

  std::size_t num_streams() const { return streams_.size(); }
  const StreamState& stream(std::size_t i) const { return streams_[i]; }
  StreamStatus status(std::size_t i) const;
  bool runnable(std::size_t i) const { return status(i) == StreamStatus::ready; }
  bool finished() const;
  bool deadlocked() const;

  /// Instruction the stream executes on its next step; nullptr if it has none.
  const Instruction* peek(std::size_t i) const;

  /// Executes one instruction of a runnable stream. Throws ProtocolError on
  /// semaphore underflow and when the stream is not runnable.
  StepInfo step(std::size_t i);

  int partition() const { return partition_; }
  const std::deque<Token>& queue(StreamClass cls) const { return cls == StreamClass::s ? s_queue_ : e_queue_; }
  const Program& program() const { return prog_; }
  const TilingPlan& plan() const { return plan_; }

  /// Number of times each (partition, tile, round) finished its e section.
  const std::map<std::tuple<int, std::uint32_t, int>, int>& completions() const { return done_; }

  DeadlockReport deadlock_report() const;

  /// Canonical serialization of the full state, for state-space search.
  std::vector<std::uint32_t> encode_state() const;

 private:
  std::size_t num_tiles() const;
  std::size_t section_of(StreamClass cls, int round) const;
  bool at_section_end(const StreamState& st) const;
  void claim(std::uint32_t tile, std::vector<std::uint32_t>& claimed);
  void maybe_finish();

  const Program& prog_;
  const TilingPlan& plan_;
  StreamConfig cfg_;
  std::vector<StreamState> streams_;
  std::map<int, std::size_t> s_sections_, e_sections_;

  int partition_ = -1;
  bool d_done_ = false;
  int round_ = 0;
  std::uint32_t cursor_ = 0;
  std::uint32_t outstanding_ = 0;
  std::uint32_t d_sem_ = 0;
  std::deque<Token> s_queue_, e_queue_;
  std::map<std::tuple<int, std::uint32_t, int>, int> done_;
};

/// Result of enumerating every interleaving of a protocol instance.
struct ExploreReport {
  std::uint64_t states = 0;
  std::uint64_t terminal = 0;
  std::uint64_t deadlocks = 0;
  std::uint64_t underflows = 0;
  std::uint64_t bad_completions = 0;  // finished with a tile run zero or twice
  std::string first_failure;

  bool safe() const { return deadlocks == 0 && underflows == 0 && bad_completions == 0; }
};

/// Depth-first search over all interleavings, merging identical states.
ExploreReport explore(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg,
                      std::uint64_t max_states = 5'000'000);

}  // namespace zipper

#endif  // ZIPPER_PROTOCOL_HPP
