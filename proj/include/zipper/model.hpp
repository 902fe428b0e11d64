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

#ifndef ZIPPER_MODEL_HPP
#define ZIPPER_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "zipper/features.hpp"
#include "zipper/kernels.hpp"

namespace zipper {

enum class OpKind {
  input,
  output,
  matmul,
  bmm,
  add,
  sub,
  mul,
  div,
  max,
  exp,
  relu,
  sigmoid,
  scatter_src,
  scatter_dst,
  gather,
  fused,
};

enum class Domain { vertex, edge, weight, scalar };

/// The three primitive operation classes, plus entry/exit markers.
enum class PrimitiveClass { gop, gemm, elw, io };

struct TensorInfo {
  Domain domain = Domain::vertex;
  int dim = 0;      // embedding width (weight: columns)
  int rows = 0;     // weight rows
  int batches = 1;  // weight slices, one per edge type for bmm

  friend bool operator==(const TensorInfo&, const TensorInfo&) = default;
};

struct ModelOp {
  OpKind kind = OpKind::input;
  std::string name;
  std::vector<int> inputs;
  ReduceKind reduce = ReduceKind::sum;  // gather only
  std::string tag;                      // fused only
  TensorInfo out;
};

/// Whole-graph dataflow of one GNN layer. Nodes are kept in topological
/// order: every input index is smaller than the consuming node's index.
class ModelGraph {
 public:
  int add_input(const std::string& name, Domain domain, int dim);
  int add_weight(const std::string& name, int rows, int cols, int batches = 1);
  int add_op(OpKind kind, const std::string& name, std::vector<int> inputs);
  int add_gather(const std::string& name, int input, ReduceKind reduce);
  int add_fused(const std::string& name, const std::string& tag, int input);
  int add_output(const std::string& name, int input);

  const std::vector<ModelOp>& nodes() const { return nodes_; }
  const ModelOp& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return nodes_.size(); }
  int find(const std::string& name) const;

  /// Appends a node verbatim after inferring its output tensor.
  int append(ModelOp op);

 private:
  std::vector<ModelOp> nodes_;
};

const char* to_string(OpKind kind);
const char* to_string(Domain domain);
PrimitiveClass primitive_class(OpKind kind);
bool is_gop(OpKind kind);
ElwKind elw_kind(OpKind kind);
bool is_elementwise(OpKind kind);

/// Checks acyclicity, producer references, domain typing and the presence of
/// exactly one vertex output. Throws ModelError.
void validate(const ModelGraph& m);

enum class BenchmarkModel { gcn, gat, sage, ggnn, rgcn };

BenchmarkModel parse_benchmark(const std::string& name);
const char* to_string(BenchmarkModel model);
std::vector<BenchmarkModel> all_benchmarks();

/// Edge types used by the relational model.
inline constexpr int kRelationalTypes = 3;

ModelGraph build_model(BenchmarkModel model, int f_in, int f_out);
ModelGraph build_model(const std::string& name, int f_in, int f_out);

/// Parses the line-oriented model description:
///   name = kind(arg, ...) [key=value, ...]
ModelGraph parse_model(const std::string& text);
std::string to_text(const ModelGraph& m);
std::string to_json(const ModelGraph& m);

/// Replaces library-level fused operations by atomic scatter/gather/ELW nodes.
ModelGraph defuse(const ModelGraph& m);

/// Structural isomorphism: same multiset of node signatures where a signature
/// covers kind, attributes, tensor info and the signatures of the inputs.
bool structurally_equal(const ModelGraph& a, const ModelGraph& b);

/// Multiset of kinds, e.g. for structural assertions in tests.
std::vector<std::string> kind_multiset(const ModelGraph& m);

/// Seeded weights, uniform in [-1/sqrt(rows), 1/sqrt(rows)], in node order.
template <typename Scalar>
WeightSet<Scalar> random_weights(const ModelGraph& m, std::uint64_t seed) {
  Rng rng(seed);
  WeightSet<Scalar> out;
  for (const auto& n : m.nodes()) {
    if (n.kind != OpKind::input || n.out.domain != Domain::weight) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(n.out.rows));
    out[n.name] = uniform_matrix<Scalar>(static_cast<Eigen::Index>(n.out.rows) * n.out.batches,
                                         n.out.dim, -bound, bound, rng);
  }
  return out;
}

}  // namespace zipper

#endif  // ZIPPER_MODEL_HPP
