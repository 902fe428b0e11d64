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

#include "zipper/protocol.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "zipper/error.hpp"

namespace zipper {

const char* to_string(StreamClass c) {
  switch (c) {
    case StreamClass::s: return "s";
    case StreamClass::e: return "e";
    case StreamClass::d: return "d";
  }
  return "?";
}

const char* to_string(StreamStatus s) {
  switch (s) {
    case StreamStatus::ready: return "ready";
    case StreamStatus::blocked: return "blocked";
    case StreamStatus::idle: return "idle";
    case StreamStatus::finished: return "finished";
  }
  return "?";
}

std::string StreamState::name() const {
  return cls == StreamClass::d ? "d" : zipper::to_string(cls) + std::to_string(index);
}

std::string DeadlockReport::to_string() const {
  if (!deadlocked) return "none";
  std::ostringstream out;
  out << "deadlock: wait-for cycle ";
  for (std::size_t i = 0; i < cycle.size(); ++i) out << (i ? " -> " : "") << cycle[i];
  if (!starved.empty()) {
    out << "; starved:";
    for (const auto& s : starved) out << ' ' << s;
  }
  for (const auto& line : streams) out << "\n  " << line;
  return out.str();
}

Protocol::Protocol(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg)
    : prog_(prog), plan_(plan), cfg_(cfg) {
  if (cfg.n_s < 1 || cfg.n_e < 1) throw ParameterError("stream counts must be at least 1");
  StreamState d;
  d.cls = StreamClass::d;
  d.finished = prog.d_function.empty();
  d_done_ = d.finished;
  streams_.push_back(d);
  for (int i = 0; i < cfg.n_s; ++i) {
    StreamState s;
    s.cls = StreamClass::s;
    s.index = i;
    streams_.push_back(s);
  }
  for (int i = 0; i < cfg.n_e; ++i) {
    StreamState e;
    e.cls = StreamClass::e;
    e.index = i;
    streams_.push_back(e);
  }
  for (std::size_t pc = 0; pc < prog.s_function.size(); ++pc) {
    if (prog.s_function[pc].op == Opcode::WAIT) s_sections_.emplace(prog.s_function[pc].round, pc);
  }
  for (std::size_t pc = 0; pc < prog.e_function.size(); ++pc) {
    if (prog.e_function[pc].op == Opcode::WAIT) e_sections_.emplace(prog.e_function[pc].round, pc);
  }
  maybe_finish();
}

std::size_t Protocol::num_tiles() const {
  if (partition_ < 0 || static_cast<std::size_t>(partition_) >= plan_.partitions.size()) return 0;
  return plan_.partitions[static_cast<std::size_t>(partition_)].tiles.size();
}

std::size_t Protocol::section_of(StreamClass cls, int round) const {
  const auto& sections = cls == StreamClass::s ? s_sections_ : e_sections_;
  auto it = sections.find(round);
  if (it == sections.end()) {
    throw ProtocolError(std::string("no ") + zipper::to_string(cls) + " section for round " + std::to_string(round));
  }
  return it->second;
}

bool Protocol::at_section_end(const StreamState& st) const {
  const auto& fn = prog_.function(st.cls == StreamClass::s ? FunctionKind::s : FunctionKind::e);
  return st.pc >= fn.size() || fn[st.pc].op == Opcode::WAIT;
}

StreamStatus Protocol::status(std::size_t i) const {
  const StreamState& st = streams_[i];
  if (st.finished) return StreamStatus::finished;
  if (st.cls == StreamClass::d) {
    const Instruction& in = prog_.d_function[st.pc];
    return in.op == Opcode::WAIT && d_sem_ == 0 ? StreamStatus::blocked : StreamStatus::ready;
  }
  if (st.active) return StreamStatus::ready;
  const auto& q = st.cls == StreamClass::s ? s_queue_ : e_queue_;
  return q.empty() ? StreamStatus::idle : StreamStatus::ready;
}

bool Protocol::finished() const {
  return std::all_of(streams_.begin(), streams_.end(), [](const StreamState& s) { return s.finished; });
}

bool Protocol::deadlocked() const {
  if (finished()) return false;
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    if (runnable(i)) return false;
  }
  return true;
}

const Instruction* Protocol::peek(std::size_t i) const {
  const StreamState& st = streams_[i];
  if (st.finished) return nullptr;
  if (st.cls == StreamClass::d) return &prog_.d_function[st.pc];
  if (st.active) return &prog_.function(st.cls == StreamClass::s ? FunctionKind::s : FunctionKind::e)[st.pc];
  const auto& q = st.cls == StreamClass::s ? s_queue_ : e_queue_;
  if (q.empty()) return nullptr;
  const auto& fn = prog_.function(st.cls == StreamClass::s ? FunctionKind::s : FunctionKind::e);
  return &fn[section_of(st.cls, q.front().round)];
}

void Protocol::claim(std::uint32_t tile, std::vector<std::uint32_t>& claimed) {
  ++outstanding_;
  claimed.push_back(tile);
}

void Protocol::maybe_finish() {
  if (!d_done_ || !s_queue_.empty() || !e_queue_.empty()) return;
  for (const auto& st : streams_) {
    if (st.active) return;
  }
  for (auto& st : streams_) st.finished = true;
}

StepInfo Protocol::step(std::size_t i) {
  if (!runnable(i)) throw ProtocolError("stream " + streams_[i].name() + " is not runnable");
  StreamState& st = streams_[i];
  StepInfo info;
  info.stream = i;
  info.partition = partition_;

  if (st.cls == StreamClass::d) {
    const Instruction& in = prog_.d_function[st.pc];
    info.pc = st.pc;
    info.inst = &in;
    info.round = in.round;
    switch (in.op) {
      case Opcode::FCH_PTT:
        ++partition_;
        info.partition = partition_;
        if (static_cast<std::size_t>(partition_) >= plan_.partitions.size()) {
          d_done_ = true;
          st.finished = true;
          info.finished = true;
          maybe_finish();
          return info;
        }
        info.partition_begin = true;
        break;
      case Opcode::UPD_PTT:
        round_ = in.round;
        cursor_ = 0;
        outstanding_ = 0;
        break;
      case Opcode::SIGNAL:
        if (in.target == Target::s) {
          const auto n = num_tiles();
          if (n == 0) {
            ++d_sem_;
            info.posted_d = true;
          }
          while (cursor_ < n && info.claimed.size() < static_cast<std::size_t>(cfg_.n_s)) {
            claim(cursor_, info.claimed);
            s_queue_.push_back({cursor_, static_cast<std::uint8_t>(round_)});
            info.posted_s.push_back(s_queue_.back());
            ++cursor_;
          }
        } else if (in.target == Target::d) {
          ++d_sem_;
          info.posted_d = true;
        }
        break;
      case Opcode::WAIT:
        --d_sem_;
        break;
      default:
        break;
    }
    st.pc = (st.pc + 1) % prog_.d_function.size();
    return info;
  }

  const auto& fn = prog_.function(st.cls == StreamClass::s ? FunctionKind::s : FunctionKind::e);
  if (!st.active) {
    auto& q = st.cls == StreamClass::s ? s_queue_ : e_queue_;
    st.token = q.front();
    q.pop_front();
    st.pc = section_of(st.cls, st.token.round);
    st.active = true;
    st.flag = ChkFlag::none;
    st.claimed.reset();
  }
  const Instruction& in = fn[st.pc];
  info.pc = st.pc;
  info.inst = &in;
  info.tile = static_cast<int>(st.token.tile);
  info.round = st.token.round;
  switch (in.op) {
    case Opcode::FCH_TILE:
      ++done_[{partition_, st.token.tile, st.token.round}];
      break;
    case Opcode::CHK_PTT:
      // Retiring the tile and testing for drain form one step; split apart, a
      // late check could land in the next round.
      if (outstanding_ == 0) {
        throw ProtocolError("semaphore underflow: " + st.name() + " checked tile " +
                            std::to_string(st.token.tile) + " with no tile outstanding");
      }
      --outstanding_;
      st.flag = ChkFlag::none;
      if (cursor_ < num_tiles()) {
        st.claimed = cursor_;
        claim(cursor_, info.claimed);
        ++cursor_;
        st.flag = ChkFlag::next_tile;
      } else if (outstanding_ == 0) {
        st.flag = ChkFlag::resume_d;
      }
      break;
    case Opcode::SIGNAL:
      switch (in.target) {
        case Target::e:
          e_queue_.push_back(st.token);
          info.posted_e = st.token;
          break;
        case Target::s:
          s_queue_.push_back(st.token);
          info.posted_s.push_back(st.token);
          break;
        case Target::d:
          ++d_sem_;
          info.posted_d = true;
          break;
        case Target::chk:
          if (st.flag == ChkFlag::next_tile) {
            s_queue_.push_back({*st.claimed, st.token.round});
            info.posted_s.push_back(s_queue_.back());
          } else if (st.flag == ChkFlag::resume_d) {
            ++d_sem_;
            info.posted_d = true;
          }
          st.flag = ChkFlag::none;
          break;
        case Target::none:
          break;
      }
      break;
    default:
      break;
  }
  ++st.pc;
  if (at_section_end(st)) st.active = false;
  maybe_finish();
  return info;
}

DeadlockReport Protocol::deadlock_report() const {
  DeadlockReport r;
  r.deadlocked = deadlocked();
  if (!r.deadlocked) return r;
  // Class-level wait-for edges of the stalled streams.
  std::map<StreamClass, std::set<StreamClass>> waits;
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    const StreamState& st = streams_[i];
    const StreamStatus s = status(i);
    std::string line = st.name() + " " + zipper::to_string(s);
    if (st.cls == StreamClass::d && s == StreamStatus::blocked) {
      waits[StreamClass::d].insert(StreamClass::e);
      line += " at pc " + std::to_string(st.pc) + " WAIT round " + std::to_string(prog_.d_function[st.pc].round) +
              ", waiting on e";
    } else if (st.cls == StreamClass::e && s == StreamStatus::idle) {
      waits[StreamClass::e].insert(StreamClass::s);
      line += ", waiting on s";
    } else if (st.cls == StreamClass::s && s == StreamStatus::idle) {
      waits[StreamClass::s].insert(StreamClass::d);
      waits[StreamClass::s].insert(StreamClass::e);
      line += ", waiting on d or e";
    }
    r.streams.push_back(line);
  }
  // Follow first edges from d until a class repeats.
  std::vector<StreamClass> path;
  StreamClass cur = waits.count(StreamClass::d) ? StreamClass::d : waits.begin()->first;
  while (std::find(path.begin(), path.end(), cur) == path.end()) {
    path.push_back(cur);
    auto it = waits.find(cur);
    if (it == waits.end() || it->second.empty()) break;
    // Prefer closing the cycle.
    StreamClass next = *it->second.begin();
    for (auto c : it->second) {
      if (std::find(path.begin(), path.end(), c) != path.end()) next = c;
    }
    cur = next;
  }
  auto start = std::find(path.begin(), path.end(), cur);
  for (auto it = start; it != path.end(); ++it) r.cycle.push_back(zipper::to_string(*it));
  if (start != path.end()) r.cycle.push_back(zipper::to_string(cur));

  auto has_signal = [](const std::vector<Instruction>& fn, Target t) {
    return std::any_of(fn.begin(), fn.end(),
                       [&](const Instruction& in) { return in.op == Opcode::SIGNAL && in.target == t; });
  };
  const bool wake_d = has_signal(prog_.e_function, Target::chk);
  const bool wake_s = has_signal(prog_.d_function, Target::s) || has_signal(prog_.e_function, Target::chk);
  const bool wake_e = has_signal(prog_.s_function, Target::e);
  for (const auto& [cls, targets] : waits) {
    (void)targets;
    const bool wakeable = cls == StreamClass::d ? wake_d : cls == StreamClass::s ? wake_s : wake_e;
    if (!wakeable) r.starved.push_back(zipper::to_string(cls));
  }
  return r;
}

std::vector<std::uint32_t> Protocol::encode_state() const {
  std::vector<std::uint32_t> v;
  v.push_back(static_cast<std::uint32_t>(partition_ + 1));
  v.push_back(d_done_);
  v.push_back(static_cast<std::uint32_t>(round_));
  v.push_back(cursor_);
  v.push_back(outstanding_);
  v.push_back(d_sem_);
  for (const auto* q : {&s_queue_, &e_queue_}) {
    v.push_back(static_cast<std::uint32_t>(q->size()));
    for (const auto& t : *q) v.push_back(t.tile << 8 | t.round);
  }
  // Streams of one class are interchangeable, so their states are sorted.
  std::vector<std::array<std::uint32_t, 5>> rows;
  for (const auto& st : streams_) {
    rows.push_back({static_cast<std::uint32_t>(st.cls), static_cast<std::uint32_t>(st.pc),
                    st.active | st.finished << 1 | static_cast<std::uint32_t>(st.flag) << 2,
                    st.token.tile << 8 | st.token.round, st.claimed ? *st.claimed + 1 : 0});
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& row : rows) v.insert(v.end(), row.begin(), row.end());
  for (const auto& [key, n] : done_) {
    v.push_back(static_cast<std::uint32_t>(std::get<0>(key) + 1));
    v.push_back(std::get<1>(key) << 8 | static_cast<std::uint32_t>(std::get<2>(key)));
    v.push_back(static_cast<std::uint32_t>(n));
  }
  return v;
}

ExploreReport explore(const Program& prog, const TilingPlan& plan, const StreamConfig& cfg,
                      std::uint64_t max_states) {
  ExploreReport r;
  std::set<std::vector<std::uint32_t>> seen;
  std::vector<Protocol> stack;
  stack.emplace_back(prog, plan, cfg);
  seen.insert(stack.back().encode_state());
  const auto rounds = prog.rounds();

  auto fail = [&](const std::string& why) {
    if (r.first_failure.empty()) r.first_failure = why;
  };

  while (!stack.empty()) {
    Protocol cur = std::move(stack.back());
    stack.pop_back();
    ++r.states;
    if (r.states > max_states) {
      fail("state budget exhausted");
      break;
    }
    if (cur.finished()) {
      ++r.terminal;
      for (std::size_t p = 0; p < plan.partitions.size(); ++p) {
        for (std::uint32_t t = 0; t < plan.partitions[p].tiles.size(); ++t) {
          for (int rd : rounds) {
            auto it = cur.completions().find({static_cast<int>(p), t, rd});
            if (it == cur.completions().end() || it->second != 1) {
              ++r.bad_completions;
              fail("partition " + std::to_string(p) + " tile " + std::to_string(t) + " round " +
                   std::to_string(rd) + " did not run exactly once");
            }
          }
        }
      }
      continue;
    }
    if (cur.deadlocked()) {
      ++r.deadlocks;
      fail(cur.deadlock_report().to_string());
      continue;
    }
    for (std::size_t i = 0; i < cur.num_streams(); ++i) {
      if (!cur.runnable(i)) continue;
      Protocol next = cur;
      try {
        next.step(i);
      } catch (const ProtocolError& e) {
        ++r.underflows;
        fail(e.what());
        continue;
      }
      if (seen.insert(next.encode_state()).second) stack.push_back(std::move(next));
    }
  }
  return r;
}

}  // namespace zipper
