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

#include "support.hpp"
#include "zipper/error.hpp"
#include "zipper/protocol.hpp"
#include "zipper/tiling.hpp"

using namespace zipper;

namespace {

// one partition of four tiles
TilingPlan four_tiles() { return make_plan(test::g4(), 4, 1, TilingMode::regular); }

Program compiled(const std::string& model, const TilingPlan& plan, const StreamConfig& cfg) {
  return compile_model(build_model(model, 4, 4), true, Capacities::from_plan(plan, cfg)).program;
}

/// Round-robin until finished or stalled; returns the step count.
std::size_t drive(Protocol& p, std::size_t limit = 100000) {
  std::size_t steps = 0, next = 0;
  while (!p.finished() && steps < limit) {
    bool moved = false;
    for (std::size_t k = 0; k < p.num_streams(); ++k) {
      const std::size_t i = (next + k) % p.num_streams();
      if (p.runnable(i)) {
        p.step(i);
        next = i + 1;
        moved = true;
        ++steps;
        break;
      }
    }
    if (!moved) break;
  }
  return steps;
}

}  // namespace

TEST_CASE("stream layout") {
  const auto plan = four_tiles();
  const Program prog = compiled("gcn", plan, {2, 3});
  Protocol p(prog, plan, {2, 3});
  REQUIRE(p.num_streams() == 6);
  CHECK(p.stream(0).cls == StreamClass::d);
  CHECK(p.stream(1).cls == StreamClass::s);
  CHECK(p.stream(2).cls == StreamClass::s);
  CHECK(p.stream(3).cls == StreamClass::e);
  CHECK(p.stream(5).name() == "e2");
  CHECK(p.runnable(0));
  CHECK_FALSE(p.runnable(1));
  CHECK_THROWS_AS(p.step(1), ProtocolError);
}

TEST_CASE("every tile runs once per round") {
  for (const char* model : {"gcn", "gat", "sage"}) {
    const auto plan = make_plan(test::g4(), 2, 1, TilingMode::regular);
    for (StreamConfig cfg : {StreamConfig{1, 1}, StreamConfig{2, 2}, StreamConfig{3, 1}}) {
      const Program prog = compiled(model, plan, cfg);
      Protocol p(prog, plan, cfg);
      drive(p);
      REQUIRE(p.finished());
      CHECK_FALSE(p.deadlocked());
      const auto rounds = prog.rounds();
      CHECK(p.completions().size() == plan.num_tiles() * rounds.size());
      for (const auto& [key, n] : p.completions()) CHECK(n == 1);
      CHECK(p.deadlock_report().to_string() == "none");
    }
  }
}

TEST_CASE("exhaustive interleavings are safe") {
  const auto plan = four_tiles();
  for (const char* model : {"gcn", "gat"}) {
    for (StreamConfig cfg : {StreamConfig{1, 1}, StreamConfig{1, 2}, StreamConfig{2, 1}, StreamConfig{2, 2}}) {
      const ExploreReport r = explore(compiled(model, plan, cfg), plan, cfg);
      CHECK_MESSAGE(r.safe(), model << " " << cfg.n_s << "," << cfg.n_e << ": " << r.first_failure);
      CHECK(r.terminal >= 1);
      CHECK(r.states > 10);
    }
  }
}

TEST_CASE("two partitions are explored safely") {
  const auto plan = make_plan(test::g4(), 2, 1, TilingMode::regular);
  const ExploreReport r = explore(compiled("gat", plan, {2, 2}), plan, {2, 2});
  CHECK(r.safe());
}

TEST_CASE("missing edge wake-up deadlocks") {
  const auto plan = four_tiles();
  const Program bad = drop_edge_signal(compiled("gcn", plan, {1, 1}));
  Protocol p(bad, plan, {1, 1});
  drive(p);
  CHECK_FALSE(p.finished());
  CHECK(p.deadlocked());
  const DeadlockReport r = p.deadlock_report();
  CHECK(r.deadlocked);
  CHECK(r.cycle == std::vector<std::string>{"d", "e", "s", "d"});
  CHECK(r.starved == std::vector<std::string>{"e"});
  CHECK(r.to_string().find("d -> e -> s -> d") != std::string::npos);
  CHECK(r.streams.size() == 3);

  const ExploreReport x = explore(bad, plan, {2, 2});
  CHECK_FALSE(x.safe());
  CHECK(x.deadlocks > 0);
  CHECK(x.terminal == 0);
}

TEST_CASE("a graph without edges never wakes the workers") {
  const Graph g = Graph::from_edges(4, {});
  const auto plan = make_plan(g, 2, 2, TilingMode::sparse);
  const Program prog = compiled("gcn", plan, {1, 1});
  Protocol p(prog, plan, {1, 1});
  drive(p);
  CHECK(p.finished());
  CHECK(p.completions().empty());
}

TEST_CASE("states are canonical under stream permutation") {
  const auto plan = four_tiles();
  const Program prog = compiled("gcn", plan, {2, 2});
  Protocol a(prog, plan, {2, 2}), b(prog, plan, {2, 2});
  // d: FCH.PTT, UPD.PTT, SIGNAL s queues two tokens
  for (int k = 0; k < 3; ++k) {
    a.step(0);
    b.step(0);
  }
  REQUIRE(a.runnable(1));
  REQUIRE(b.runnable(2));
  a.step(1);
  b.step(2);
  CHECK(a.encode_state() == b.encode_state());
}
