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

#include <set>

#include "support.hpp"
#include "zipper/ir.hpp"
#include "zipper/optimizer.hpp"

using namespace zipper;

namespace {

const char* kEdgeRelu =
    "channel 0 src_scatter dim=2 round=0\n"
    "channel 1 gather_sum dim=2 round=0\n"
    "segment v.0\n"
    "  %0 = input vertex ref=x name=x dim=2 round=0\n"
    "  %1 = sendOutEdge %0 ch=0 name=m dim=2 round=0\n"
    "segment e.1\n"
    "  %0 = recvSrc ch=0 name=m dim=2 round=0\n"
    "  %1 = relu %0 name=r dim=2 round=0\n"
    "  %2 = sendDstSum %1 ch=1 name=agg dim=2 round=0\n"
    "segment v.2\n"
    "  %0 = recvInEdge ch=1 name=agg dim=2 round=1\n"
    "  %1 = output vertex %0 ref=out name=out dim=2 round=1\n";

const char* kMixed =
    "channel 0 src_scatter dim=2 round=0\n"
    "channel 1 dst_scatter dim=2 round=0\n"
    "channel 2 gather_sum dim=2 round=0\n"
    "segment v.0\n"
    "  %0 = input vertex ref=x name=x dim=2 round=0\n"
    "  %1 = sendOutEdge %0 ch=0 name=s dim=2 round=0\n"
    "  %2 = sendInEdge %0 ch=1 name=d dim=2 round=0\n"
    "segment e.1\n"
    "  %0 = recvSrc ch=0 name=s dim=2 round=0\n"
    "  %1 = recvDst ch=1 name=d dim=2 round=0\n"
    "  %2 = add %0 %1 name=sum dim=2 round=0\n"
    "  %3 = sendDstSum %2 ch=2 name=agg dim=2 round=0\n"
    "segment v.2\n"
    "  %0 = recvInEdge ch=2 name=agg dim=2 round=1\n"
    "  %1 = output vertex %0 ref=out name=out dim=2 round=1\n";

// gcn plus a dead exp on the destination side and a dead edge round trip
const char* kDead =
    "weight W 2x2\n"
    "channel 0 src_scatter dim=2 round=0\n"
    "channel 1 gather_sum dim=2 round=0\n"
    "channel 2 src_scatter dim=2 round=0\n"
    "channel 3 gather_max dim=2 round=0\n"
    "segment v.0\n"
    "  %0 = input vertex ref=x name=x dim=2 round=0\n"
    "  %1 = sendOutEdge %0 ch=0 name=msg dim=2 round=0\n"
    "  %2 = sendOutEdge %0 ch=2 name=msg2 dim=2 round=0\n"
    "segment e.1\n"
    "  %0 = recvSrc ch=0 name=msg dim=2 round=0\n"
    "  %1 = sendDstSum %0 ch=1 name=agg dim=2 round=0\n"
    "segment e.2\n"
    "  %0 = recvSrc ch=2 name=msg2 dim=2 round=0\n"
    "  %1 = sendDstMax %0 ch=3 name=unused dim=2 round=0\n"
    "segment v.3\n"
    "  %0 = recvInEdge ch=1 name=agg dim=2 round=1\n"
    "  %1 = mv %0 ref=W name=h dim=2 round=1\n"
    "  %2 = relu %1 name=y dim=2 round=1\n"
    "  %3 = output vertex %2 ref=out name=out dim=2 round=1\n"
    "  %4 = exp %1 name=dead dim=2 round=1\n"
    "  %5 = recvInEdge ch=3 name=unused dim=2 round=1\n";

MatrixD run(const IrProgram& p, const Graph& g, const FeatureSet<double>& fs, const WeightSet<double>& w) {
  return interpret_ir<double>(p, g, fs, w).vertex;
}

}  // namespace

TEST_CASE("gat attention projections move to vertex segments") {
  const IrProgram p = lower_to_ir(build_model("gat", 8, 8));
  PassReport r;
  const IrProgram q = e2v(p, &r);
  CHECK_FALSE(verify_ir(q).has_value());
  CHECK(count_ops(p, SegLabel::edge, IrKind::mv) == 4);
  CHECK(count_ops(q, SegLabel::edge, IrKind::mv) == 0);
  // both projections, once for each edge round that reads them
  CHECK(p.num_rounds() == 2);
  CHECK(count_ops(q, SegLabel::vertex, IrKind::mv) == count_ops(p, SegLabel::vertex, IrKind::mv) + 2 * 2);
  std::set<std::string> refs;
  for (const auto& s : q.segments) {
    for (const auto& op : s.ops) {
      if (s.label == SegLabel::vertex && op.kind == IrKind::mv && op.ref != "W") refs.insert(op.ref);
    }
  }
  CHECK(refs == std::set<std::string>{"a_dst", "a_src"});
  CHECK(r.moved >= 4);
  CHECK(r.channels_added >= 1);
}

TEST_CASE("mixed endpoints stay on the edge") {
  const IrProgram p = parse_ir(kMixed);
  PassReport r;
  CHECK(e2v(p, &r) == p);
  CHECK(r.moved == 0);
}

TEST_CASE("edge relu runs once per vertex after motion") {
  const IrProgram p = parse_ir(kEdgeRelu);
  REQUIRE_FALSE(verify_ir(p).has_value());
  const IrProgram q = e2v(p);
  const Graph g = gen_synthetic(SyntheticKind::rmat, 64, 512, 1);
  CHECK(item_op_count(p, 64, 512) == 512);
  CHECK(item_op_count(q, 64, 512) <= 64);
  CHECK(count_ops(q, SegLabel::edge, IrKind::relu) == 0);
  const auto fs = random_features<double>(g, 2, 3);
  CHECK(compare<double>(run(q, g, fs, {}), run(p, g, fs, {}), 1e-6).pass);
}

TEST_CASE("motion preserves semantics and never adds work") {
  for (auto b : all_benchmarks()) {
    const ModelGraph m = build_model(b, 8, 4);
    const IrProgram p = lower_to_ir(m);
    PassReport r;
    const IrProgram q = e2v(p, &r);
    CHECK(e2v(q) == q);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Graph g = test::typed_for(m, gen_synthetic(SyntheticKind::rmat, 64, 400, seed), seed);
      const auto fs = test::features_for<double>(m, g, seed);
      const auto w = random_weights<double>(m, seed);
      const auto c = compare<double>(run(q, g, fs, w), run(p, g, fs, w), 1e-6);
      CHECK_MESSAGE(c.pass, to_string(b) << ": " << c.message);
      if (r.moved > 0) CHECK(item_op_count(q, 64, 400) <= item_op_count(p, 64, 400));
    }
  }
}

TEST_CASE("dead code is pruned") {
  const IrProgram p = parse_ir(kDead);
  REQUIRE_FALSE(verify_ir(p).has_value());
  PassReport r;
  const IrProgram q = prune_dead(p, &r);
  CHECK_FALSE(verify_ir(q).has_value());
  CHECK(q.segments.size() == 3);
  CHECK(q.channels.size() == 2);
  CHECK(r.segments_removed == 1);
  CHECK(r.channels_removed == 2);
  CHECK(count_ops(q, SegLabel::vertex, IrKind::exp) == 0);
  const Graph g = gen_synthetic(SyntheticKind::erdos_renyi, 32, 100, 2);
  const auto fs = random_features<double>(g, 2, 1);
  WeightSet<double> w{{"W", MatrixD::Identity(2, 2)}};
  CHECK(run(q, g, fs, w) == run(p, g, fs, w));
}

TEST_CASE("live programs are unchanged by pruning") {
  for (auto b : all_benchmarks()) {
    const IrProgram p = lower_to_ir(build_model(b, 4, 4));
    PassReport r;
    CHECK(prune_dead(p, &r) == p);
    CHECK(r.pruned == 0);
  }
}

TEST_CASE("pass report json") {
  PassReport r;
  r.moved = 2;
  r.pruned = 1;
  const std::string j = r.to_json();
  CHECK(j.find("\"moved\": 2") != std::string::npos);
  CHECK(j.find("\"pruned\": 1") != std::string::npos);
}
