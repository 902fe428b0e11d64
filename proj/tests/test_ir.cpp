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
#include "zipper/ir.hpp"

using namespace zipper;

namespace {

std::vector<IrKind> kinds(const Segment& s) {
  std::vector<IrKind> out;
  for (const auto& op : s.ops) out.push_back(op.kind);
  return out;
}

std::size_t gop_count(const ModelGraph& m) {
  std::size_t n = 0;
  for (const auto& op : m.nodes()) n += is_gop(op.kind) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("gcn lowers to three segments") {
  const IrProgram p = lower_to_ir(build_model("gcn", 2, 2));
  REQUIRE(p.segments.size() == 3);
  CHECK(p.segments[0].label == SegLabel::vertex);
  CHECK(kinds(p.segments[0]) == std::vector{IrKind::input, IrKind::send_out_edge});
  CHECK(p.segments[1].label == SegLabel::edge);
  CHECK(kinds(p.segments[1]) == std::vector{IrKind::recv_src, IrKind::send_dst_sum});
  CHECK(p.segments[2].label == SegLabel::vertex);
  CHECK(kinds(p.segments[2]) == std::vector{IrKind::recv_in_edge, IrKind::mv, IrKind::relu, IrKind::output});
  CHECK(p.segments[0].ops[0].marker == "vertex");
  CHECK(p.segments[2].ops[3].marker == "vertex");
  REQUIRE(p.channels.size() == 2);
  CHECK(p.channels[0].kind == ChannelKind::src_scatter);
  CHECK(p.channels[1].kind == ChannelKind::gather_sum);
  CHECK_FALSE(verify_ir(p).has_value());
}

TEST_CASE("model without graph operations") {
  const ModelGraph m = parse_model(
      "x = input() [domain=vertex, dim=3]\nW = input() [domain=weight, shape=3x2]\n"
      "h = matmul(x, W)\ny = relu(h)\nout = output(y)\n");
  const IrProgram p = lower_to_ir(m);
  REQUIRE(p.segments.size() == 1);
  CHECK(p.segments[0].label == SegLabel::vertex);
  CHECK(p.channels.empty());
  CHECK_FALSE(verify_ir(p).has_value());
}

TEST_CASE("gat has an edge segment with exp and div") {
  const IrProgram p = lower_to_ir(build_model("gat", 4, 4));
  CHECK(p.segments.size() >= 5);
  bool found = false;
  for (const auto& s : p.segments) {
    const auto k = kinds(s);
    if (s.label == SegLabel::edge && std::count(k.begin(), k.end(), IrKind::exp) &&
        std::count(k.begin(), k.end(), IrKind::div)) {
      found = true;
    }
  }
  CHECK(found);
  CHECK(p.num_rounds() == 2);
  CHECK_FALSE(verify_ir(p).has_value());
}

TEST_CASE("one channel per graph operation after round splitting") {
  for (auto b : all_benchmarks()) {
    const ModelGraph m = build_model(b, 4, 4);
    const IrProgram p = lower_to_ir(m);
    CHECK(p.channels.size() == gop_count(split_rounds(m).model));
    for (const auto& s : p.segments) {
      for (const auto& op : s.ops) {
        if (is_comm(op.kind)) {
          CHECK(op.channel >= 0);
        } else {
          CHECK(op.channel == -1);
        }
        if (op.kind == IrKind::input || op.kind == IrKind::output) {
          CHECK((op.marker == "vertex" || op.marker == "edge"));
        }
      }
    }
  }
}

TEST_CASE("verify reports unmatched channels") {
  const IrProgram p = parse_ir(
      "channel 3 src_scatter dim=2 round=0\n"
      "segment v.0\n"
      "  %0 = input vertex ref=x name=x dim=2 round=0\n"
      "  %1 = sendOutEdge %0 ch=3 name=m dim=2 round=0\n");
  const auto d = verify_ir(p);
  REQUIRE(d.has_value());
  CHECK(d->find("unmatched channel 3") != std::string::npos);
}

TEST_CASE("verify reports cycles") {
  IrProgram p = lower_to_ir(build_model("gcn", 2, 2));
  auto& ops = p.segments[2].ops;
  ops[1].inputs = {2};
  ops[2].inputs = {1};
  const auto d = verify_ir(p);
  REQUIRE(d.has_value());
  CHECK(d->find("cycle in segment") != std::string::npos);
}

TEST_CASE("dump and parse round trip") {
  for (auto b : all_benchmarks()) {
    const IrProgram p = lower_to_ir(build_model(b, 5, 3));
    CHECK(parse_ir(dump_ir(p)) == p);
  }
  CHECK_THROWS_AS(parse_ir("segment v.0\n  %0 = bogus\n"), ParseError);
}

TEST_CASE("interpret gcn on the four-vertex graph") {
  const ModelGraph m = build_model("gcn", 2, 2);
  const Graph g = test::g4();
  const auto out = interpret_ir<double>(lower_to_ir(m), g, test::ones(g, 2), test::identity_weights(m));
  CHECK(out.vertex == test::rows({{1, 1}, {2, 2}, {1, 1}, {0, 0}}));
}

TEST_CASE("interpret on a graph without edges") {
  const ModelGraph m = build_model("gcn", 3, 3);
  const Graph g = Graph::from_edges(5, {});
  const auto out = interpret_ir<double>(lower_to_ir(m), g, random_features<double>(g, 3, 1),
                                        random_weights<double>(m, 2));
  CHECK(out.vertex == MatrixD::Zero(5, 3));
}

TEST_CASE("missing weight binding") {
  const ModelGraph m = build_model("gcn", 2, 2);
  const Graph g = test::g4();
  CHECK_THROWS_AS(interpret_ir<double>(lower_to_ir(m), g, test::ones(g, 2), {}), ShapeError);
}

TEST_CASE("interpretation matches the dense oracle") {
  for (auto b : all_benchmarks()) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const ModelGraph m = build_model(b, 8, 6);
      const Graph g = test::typed_for(m, gen_synthetic(SyntheticKind::rmat, 64, 256, seed), seed);
      const auto fs = test::features_for<double>(m, g, seed);
      const auto w = random_weights<double>(m, seed + 7);
      const auto want = run_dense<double>(m, g, fs, w);
      const auto got = interpret_ir<double>(lower_to_ir(m), g, fs, w);
      const auto r = compare(got, want, 1e-6);
      CHECK_MESSAGE(r.pass, to_string(b) << " seed " << seed << ": " << r.message);
    }
  }
}

TEST_CASE("labels ignore node order") {
  // same dataflow with the two inputs declared in the other order
  const ModelGraph a = parse_model(
      "x = input() [domain=vertex, dim=2]\nW = input() [domain=weight, shape=2x2]\n"
      "m = scatter_src(x)\na = gather_sum(m)\nh = matmul(a, W)\nout = output(h)\n");
  const ModelGraph b = parse_model(
      "W = input() [domain=weight, shape=2x2]\nx = input() [domain=vertex, dim=2]\n"
      "m = scatter_src(x)\na = gather_sum(m)\nh = matmul(a, W)\nout = output(h)\n");
  auto labels = [](const IrProgram& p) {
    std::vector<std::pair<SegLabel, std::size_t>> out;
    for (const auto& s : p.segments) out.emplace_back(s.label, s.ops.size());
    std::sort(out.begin(), out.end());
    return out;
  };
  CHECK(labels(lower_to_ir(a)) == labels(lower_to_ir(b)));
}

TEST_CASE("post-gather scatter of a source value is rejected") {
  const ModelGraph m = parse_model(
      "x = input() [domain=vertex, dim=2]\n"
      "e = scatter_src(x)\na = gather_sum(e)\n"
      "f = scatter_src(a)\nb = gather_sum(f)\nout = output(b)\n");
  CHECK_THROWS_AS(lower_to_ir(m), LoweringError);
}
