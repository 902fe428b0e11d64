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

#include "zipper/optimizer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "zipper/error.hpp"

namespace zipper {

PassReport& PassReport::operator+=(const PassReport& o) {
  moved += o.moved;
  pruned += o.pruned;
  channels_added += o.channels_added;
  channels_removed += o.channels_removed;
  segments_removed += o.segments_removed;
  return *this;
}

std::string PassReport::to_json() const {
  nlohmann::ordered_json j;
  j["moved"] = moved;
  j["pruned"] = pruned;
  j["channels_added"] = channels_added;
  j["channels_removed"] = channels_removed;
  j["segments_removed"] = segments_removed;
  return j.dump(2);
}

void compact_segment(Segment& seg, const std::vector<char>& keep) {
  std::vector<int> remap(seg.ops.size(), -1);
  std::vector<IrOp> ops;
  for (std::size_t i = 0; i < seg.ops.size(); ++i) {
    if (!keep[i]) continue;
    remap[i] = static_cast<int>(ops.size());
    ops.push_back(std::move(seg.ops[i]));
  }
  for (auto& op : ops) {
    for (int& in : op.inputs) {
      in = remap[static_cast<std::size_t>(in)];
      if (in < 0) throw LoweringError("kept op reads a removed op in segment " + seg.name());
    }
  }
  seg.ops = std::move(ops);
}

namespace {

struct Site {
  std::size_t seg = 0;
  std::size_t op = 0;
};

std::map<int, Site> locate_sends(const IrProgram& p) {
  std::map<int, Site> out;
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    for (std::size_t i = 0; i < p.segments[s].ops.size(); ++i) {
      if (is_send(p.segments[s].ops[i].kind)) out[p.segments[s].ops[i].channel] = {s, i};
    }
  }
  return out;
}

bool movable(IrKind kind) { return is_ir_elementwise(kind) || kind == IrKind::mv; }

/// One motion for the first (edge segment, side, producer) group with a
/// non-empty closure. Returns false when nothing qualifies.
bool move_one_group(IrProgram& p, PassReport& rep) {
  const auto sends = locate_sends(p);
  for (std::size_t si = 0; si < p.segments.size(); ++si) {
    if (p.segments[si].label != SegLabel::edge) continue;

    // Groups keyed by (side, producer segment), in order of first recv.
    std::vector<std::pair<std::pair<IrKind, std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < p.segments[si].ops.size(); ++i) {
      const IrOp& op = p.segments[si].ops[i];
      if (op.kind != IrKind::recv_src && op.kind != IrKind::recv_dst) continue;
      const auto key = std::make_pair(op.kind, sends.at(op.channel).seg);
      auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
      if (it == groups.end()) {
        groups.push_back({key, {i}});
      } else {
        it->second.push_back(i);
      }
    }

    for (const auto& [key, members] : groups) {
      Segment& S = p.segments[si];
      const std::size_t n = S.ops.size();
      std::vector<char> in_group(n, 0), in_closure(n, 0);
      for (auto i : members) in_group[i] = 1;
      std::vector<std::size_t> closure;
      for (std::size_t i = 0; i < n; ++i) {
        const IrOp& op = S.ops[i];
        if (!movable(op.kind)) continue;
        const bool own = std::all_of(op.inputs.begin(), op.inputs.end(), [&](int in) {
          return in_group[static_cast<std::size_t>(in)] || in_closure[static_cast<std::size_t>(in)];
        });
        if (own) {
          in_closure[i] = 1;
          closure.push_back(i);
        }
      }
      if (closure.empty()) continue;

      const std::size_t pi = key.second;
      Segment& P = p.segments[pi];
      const bool src_side = key.first == IrKind::recv_src;
      std::map<std::size_t, int> clone_of;
      for (auto r : members) {
        const Site site = sends.at(S.ops[r].channel);
        clone_of[r] = P.ops[site.op].inputs[0];
      }
      for (auto c : closure) {
        IrOp moved = S.ops[c];
        for (int& in : moved.inputs) in = clone_of.at(static_cast<std::size_t>(in));
        clone_of[c] = static_cast<int>(P.ops.size());
        P.ops.push_back(std::move(moved));
        ++rep.moved;
      }

      std::vector<std::vector<std::size_t>> users(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (int in : S.ops[i].inputs) users[static_cast<std::size_t>(in)].push_back(i);
      }
      std::vector<char> keep(n, 1);
      for (auto c : closure) {
        const bool exported = std::any_of(users[c].begin(), users[c].end(),
                                          [&](std::size_t u) { return !in_closure[u]; });
        if (!exported) {
          keep[c] = 0;
          continue;
        }
        Channel ch;
        ch.id = p.next_channel_id();
        ch.kind = src_side ? ChannelKind::src_scatter : ChannelKind::dst_scatter;
        ch.dim = S.ops[c].dim;
        ch.round = S.ops[c].round;
        p.channels.push_back(ch);
        ++rep.channels_added;

        IrOp send;
        send.kind = src_side ? IrKind::send_out_edge : IrKind::send_in_edge;
        send.inputs = {clone_of.at(c)};
        send.channel = ch.id;
        send.name = S.ops[c].name;
        send.dim = ch.dim;
        send.round = ch.round;
        P.ops.push_back(std::move(send));

        IrOp recv;
        recv.kind = key.first;
        recv.channel = ch.id;
        recv.name = S.ops[c].name;
        recv.dim = ch.dim;
        recv.round = S.ops[c].round;
        S.ops[c] = std::move(recv);
      }

      // Group recvs read only by moved ops die together with their sends.
      std::set<int> dead_channels;
      for (auto r : members) {
        const bool used = std::any_of(users[r].begin(), users[r].end(),
                                      [&](std::size_t u) { return keep[u] && !in_closure[u]; });
        if (!used) {
          keep[r] = 0;
          dead_channels.insert(S.ops[r].channel);
        }
      }
      compact_segment(S, keep);
      std::vector<char> keep_p(P.ops.size(), 1);
      for (std::size_t i = 0; i < P.ops.size(); ++i) {
        if (is_send(P.ops[i].kind) && dead_channels.count(P.ops[i].channel)) keep_p[i] = 0;
      }
      compact_segment(P, keep_p);
      std::erase_if(p.channels, [&](const Channel& c) { return dead_channels.count(c.id) > 0; });
      rep.channels_removed += dead_channels.size();
      return true;
    }
  }
  return false;
}

}  // namespace

IrProgram e2v(const IrProgram& p, PassReport* report) {
  IrProgram q = p;
  PassReport rep;
  // Each motion strictly shrinks the edge segments, so this terminates.
  while (move_one_group(q, rep)) {
  }
  if (report) *report += rep;
  return q;
}

IrProgram prune_dead(const IrProgram& p, PassReport* report) {
  IrProgram q = p;
  PassReport rep;
  std::map<int, Site> sends = locate_sends(q);
  std::vector<std::vector<char>> live(q.segments.size());
  for (std::size_t s = 0; s < q.segments.size(); ++s) {
    live[s].assign(q.segments[s].ops.size(), 0);
    for (std::size_t i = 0; i < q.segments[s].ops.size(); ++i) {
      if (q.segments[s].ops[i].kind == IrKind::output) live[s][i] = 1;
    }
  }
  // Liveness flows backwards through operands and from a recv to its send.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < q.segments.size(); ++s) {
      const auto& ops = q.segments[s].ops;
      for (std::size_t i = ops.size(); i-- > 0;) {
        if (!live[s][i]) continue;
        for (int in : ops[i].inputs) {
          if (!live[s][static_cast<std::size_t>(in)]) {
            live[s][static_cast<std::size_t>(in)] = 1;
            changed = true;
          }
        }
        if (is_recv(ops[i].kind)) {
          auto it = sends.find(ops[i].channel);
          if (it != sends.end() && !live[it->second.seg][it->second.op]) {
            live[it->second.seg][it->second.op] = 1;
            changed = true;
          }
        }
      }
    }
  }
  std::set<int> live_channels;
  for (std::size_t s = 0; s < q.segments.size(); ++s) {
    auto& seg = q.segments[s];
    for (std::size_t i = 0; i < seg.ops.size(); ++i) {
      if (live[s][i]) {
        if (is_comm(seg.ops[i].kind)) live_channels.insert(seg.ops[i].channel);
      } else {
        ++rep.pruned;
      }
    }
    compact_segment(seg, live[s]);
  }
  const std::size_t before = q.channels.size();
  std::erase_if(q.channels, [&](const Channel& c) { return !live_channels.count(c.id); });
  rep.channels_removed += before - q.channels.size();
  const std::size_t segs = q.segments.size();
  std::erase_if(q.segments, [](const Segment& s) { return s.ops.empty(); });
  rep.segments_removed += segs - q.segments.size();
  if (report) *report += rep;
  return q;
}

}  // namespace zipper
