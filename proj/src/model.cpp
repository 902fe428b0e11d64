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

#include "zipper/model.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "zipper/error.hpp"

namespace zipper {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::input: return "input";
    case OpKind::output: return "output";
    case OpKind::matmul: return "matmul";
    case OpKind::bmm: return "bmm";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::max: return "max";
    case OpKind::exp: return "exp";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::scatter_src: return "scatter_src";
    case OpKind::scatter_dst: return "scatter_dst";
    case OpKind::gather: return "gather";
    case OpKind::fused: return "fused";
  }
  return "?";
}

const char* to_string(Domain domain) {
  switch (domain) {
    case Domain::vertex: return "vertex";
    case Domain::edge: return "edge";
    case Domain::weight: return "weight";
    case Domain::scalar: return "scalar";
  }
  return "?";
}

PrimitiveClass primitive_class(OpKind kind) {
  switch (kind) {
    case OpKind::input:
    case OpKind::output:
      return PrimitiveClass::io;
    case OpKind::matmul:
    case OpKind::bmm:
      return PrimitiveClass::gemm;
    case OpKind::scatter_src:
    case OpKind::scatter_dst:
    case OpKind::gather:
    case OpKind::fused:
      return PrimitiveClass::gop;
    default:
      return PrimitiveClass::elw;
  }
}

bool is_gop(OpKind kind) { return primitive_class(kind) == PrimitiveClass::gop; }

bool is_elementwise(OpKind kind) { return primitive_class(kind) == PrimitiveClass::elw; }

ElwKind elw_kind(OpKind kind) {
  switch (kind) {
    case OpKind::add: return ElwKind::add;
    case OpKind::sub: return ElwKind::sub;
    case OpKind::mul: return ElwKind::mul;
    case OpKind::div: return ElwKind::div;
    case OpKind::max: return ElwKind::max;
    case OpKind::exp: return ElwKind::exp;
    case OpKind::relu: return ElwKind::relu;
    case OpKind::sigmoid: return ElwKind::sigmoid;
    default: throw ModelError(std::string("'") + to_string(kind) + "' is not elementwise");
  }
}

namespace {

int expected_arity(OpKind kind) {
  switch (kind) {
    case OpKind::input: return 0;
    case OpKind::matmul:
    case OpKind::bmm:
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul:
    case OpKind::div:
    case OpKind::max:
      return 2;
    default:
      return 1;
  }
}

std::string describe(const ModelOp& op) {
  return "'" + op.name + "' (" + to_string(op.kind) + ")";
}

/// Output tensor of `op` given its producers; throws ModelError on a typing
/// violation.
TensorInfo infer(const ModelOp& op, const std::vector<ModelOp>& nodes) {
  if (op.kind == OpKind::input) {
    if (op.out.dim < 1) throw ModelError("input " + describe(op) + " needs dim >= 1");
    if (op.out.domain == Domain::weight && (op.out.rows < 1 || op.out.batches < 1)) {
      throw ModelError("weight " + describe(op) + " needs a positive shape");
    }
    return op.out;
  }
  if (static_cast<int>(op.inputs.size()) != expected_arity(op.kind)) {
    throw ModelError(describe(op) + " takes " + std::to_string(expected_arity(op.kind)) +
                     " operand(s)");
  }
  std::vector<TensorInfo> in;
  for (int i : op.inputs) {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes.size()) {
      throw ModelError(describe(op) + " references an undefined producer");
    }
    in.push_back(nodes[static_cast<std::size_t>(i)].out);
  }
  auto require = [&](const TensorInfo& t, Domain d, const char* what) {
    if (t.domain != d) {
      throw ModelError("domain mismatch: " + describe(op) + " expects " + what + " of domain " +
                       to_string(d) + ", got " + to_string(t.domain));
    }
  };
  auto require_data = [&](const TensorInfo& t) {
    if (t.domain != Domain::vertex && t.domain != Domain::edge) {
      throw ModelError("domain mismatch: " + describe(op) + " needs a vertex or edge operand");
    }
  };

  switch (op.kind) {
    case OpKind::output:
      require(in[0], Domain::vertex, "its operand");
      return in[0];
    case OpKind::matmul: {
      require_data(in[0]);
      require(in[1], Domain::weight, "the second operand");
      if (in[1].batches != 1) throw ModelError(describe(op) + " needs an unbatched weight");
      if (in[0].dim != in[1].rows) {
        throw ModelError("shape mismatch: " + describe(op) + " multiplies width " +
                         std::to_string(in[0].dim) + " by " + std::to_string(in[1].rows) + " rows");
      }
      return {in[0].domain, in[1].dim};
    }
    case OpKind::bmm:
      require(in[0], Domain::edge, "the first operand");
      require(in[1], Domain::weight, "the second operand");
      if (in[0].dim != in[1].rows) {
        throw ModelError("shape mismatch: " + describe(op) + " multiplies width " +
                         std::to_string(in[0].dim) + " by " + std::to_string(in[1].rows) + " rows");
      }
      return {Domain::edge, in[1].dim};
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul:
    case OpKind::div:
    case OpKind::max: {
      require_data(in[0]);
      require_data(in[1]);
      if (in[0].domain != in[1].domain) {
        throw ModelError("domain mismatch: " + describe(op) + " mixes " +
                         to_string(in[0].domain) + " and " + to_string(in[1].domain));
      }
      if (in[0].dim != in[1].dim && in[0].dim != 1 && in[1].dim != 1) {
        throw ModelError("shape mismatch: " + describe(op) + " widths " +
                         std::to_string(in[0].dim) + " and " + std::to_string(in[1].dim));
      }
      return {in[0].domain, std::max(in[0].dim, in[1].dim)};
    }
    case OpKind::exp:
    case OpKind::relu:
    case OpKind::sigmoid:
      require_data(in[0]);
      return in[0];
    case OpKind::scatter_src:
    case OpKind::scatter_dst:
      require(in[0], Domain::vertex, "its operand");
      return {Domain::edge, in[0].dim};
    case OpKind::gather:
      require(in[0], Domain::edge, "its operand");
      return {Domain::vertex, in[0].dim};
    case OpKind::fused:
      if (op.tag == "spmm") {
        require(in[0], Domain::vertex, "its operand");
        return in[0];
      }
      if (op.tag == "edge_softmax") {
        require(in[0], Domain::edge, "its operand");
        return in[0];
      }
      throw ModelError("unknown fused tag '" + op.tag + "' on " + describe(op));
    case OpKind::input:
      break;
  }
  return op.out;
}

}  // namespace

int ModelGraph::append(ModelOp op) {
  op.out = infer(op, nodes_);
  nodes_.push_back(std::move(op));
  return static_cast<int>(nodes_.size()) - 1;
}

int ModelGraph::add_input(const std::string& name, Domain domain, int dim) {
  if (domain == Domain::weight) throw ModelError("use add_weight for weight inputs");
  ModelOp op;
  op.kind = OpKind::input;
  op.name = name;
  op.out = {domain, dim};
  return append(std::move(op));
}

int ModelGraph::add_weight(const std::string& name, int rows, int cols, int batches) {
  ModelOp op;
  op.kind = OpKind::input;
  op.name = name;
  op.out = {Domain::weight, cols, rows, batches};
  return append(std::move(op));
}

int ModelGraph::add_op(OpKind kind, const std::string& name, std::vector<int> inputs) {
  ModelOp op;
  op.kind = kind;
  op.name = name;
  op.inputs = std::move(inputs);
  return append(std::move(op));
}

int ModelGraph::add_gather(const std::string& name, int input, ReduceKind reduce) {
  ModelOp op;
  op.kind = OpKind::gather;
  op.name = name;
  op.inputs = {input};
  op.reduce = reduce;
  return append(std::move(op));
}

int ModelGraph::add_fused(const std::string& name, const std::string& tag, int input) {
  ModelOp op;
  op.kind = OpKind::fused;
  op.name = name;
  op.tag = tag;
  op.inputs = {input};
  return append(std::move(op));
}

int ModelGraph::add_output(const std::string& name, int input) {
  return add_op(OpKind::output, name, {input});
}

int ModelGraph::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void validate(const ModelGraph& m) {
  std::vector<ModelOp> seen;
  int outputs = 0;
  std::map<std::string, int> names;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& op = m.node(static_cast<int>(i));
    for (int in : op.inputs) {
      if (in < 0 || static_cast<std::size_t>(in) >= i) {
        throw ModelError("node " + describe(op) + " is not in topological order or forms a cycle");
      }
    }
    if (!names.emplace(op.name, static_cast<int>(i)).second) {
      throw ModelError("duplicate node name '" + op.name + "'");
    }
    if (infer(op, seen) != op.out) throw ModelError("stale tensor info on " + describe(op));
    seen.push_back(op);
    if (op.kind == OpKind::output) ++outputs;
  }
  if (outputs == 0) throw ModelError("no output node");
  if (outputs > 1) throw ModelError("more than one output node");
}

BenchmarkModel parse_benchmark(const std::string& name) {
  if (name == "gcn") return BenchmarkModel::gcn;
  if (name == "gat") return BenchmarkModel::gat;
  if (name == "sage") return BenchmarkModel::sage;
  if (name == "ggnn") return BenchmarkModel::ggnn;
  if (name == "rgcn") return BenchmarkModel::rgcn;
  throw ModelError("unknown model '" + name + "'");
}

const char* to_string(BenchmarkModel model) {
  switch (model) {
    case BenchmarkModel::gcn: return "gcn";
    case BenchmarkModel::gat: return "gat";
    case BenchmarkModel::sage: return "sage";
    case BenchmarkModel::ggnn: return "ggnn";
    case BenchmarkModel::rgcn: return "rgcn";
  }
  return "?";
}

std::vector<BenchmarkModel> all_benchmarks() {
  return {BenchmarkModel::gcn, BenchmarkModel::gat, BenchmarkModel::sage, BenchmarkModel::ggnn,
          BenchmarkModel::rgcn};
}

ModelGraph build_model(BenchmarkModel model, int f_in, int f_out) {
  if (f_in < 1 || f_out < 1) throw ModelError("embedding sizes must be at least 1");
  ModelGraph m;
  const int x = m.add_input("x", Domain::vertex, f_in);
  switch (model) {
    case BenchmarkModel::gcn: {
      const int w = m.add_weight("W", f_in, f_out);
      const int msg = m.add_op(OpKind::scatter_src, "msg", {x});
      const int agg = m.add_gather("agg", msg, ReduceKind::sum);
      const int h = m.add_op(OpKind::matmul, "h", {agg, w});
      const int y = m.add_op(OpKind::relu, "y", {h});
      m.add_output("out", y);
      break;
    }
    case BenchmarkModel::gat: {
      const int w = m.add_weight("W", f_in, f_out);
      const int a_src = m.add_weight("a_src", f_out, 1);
      const int a_dst = m.add_weight("a_dst", f_out, 1);
      const int h = m.add_op(OpKind::matmul, "h", {x, w});
      const int hs = m.add_op(OpKind::scatter_src, "h_src", {h});
      const int hd = m.add_op(OpKind::scatter_dst, "h_dst", {h});
      const int sl = m.add_op(OpKind::matmul, "score_src", {hs, a_src});
      const int sr = m.add_op(OpKind::matmul, "score_dst", {hd, a_dst});
      const int s = m.add_op(OpKind::add, "score", {sl, sr});
      const int es = m.add_op(OpKind::exp, "score_exp", {s});
      const int den = m.add_gather("denom", es, ReduceKind::sum);
      const int dn = m.add_op(OpKind::scatter_dst, "denom_edge", {den});
      const int alpha = m.add_op(OpKind::div, "alpha", {es, dn});
      const int msg = m.add_op(OpKind::mul, "msg", {hs, alpha});
      const int agg = m.add_gather("agg", msg, ReduceKind::sum);
      m.add_output("out", agg);
      break;
    }
    case BenchmarkModel::sage: {
      const int wp = m.add_weight("W_pool", f_in, f_in);
      const int ws = m.add_weight("W_self", f_in, f_out);
      const int wn = m.add_weight("W_neigh", f_in, f_out);
      const int p = m.add_op(OpKind::matmul, "pool", {x, wp});
      const int pr = m.add_op(OpKind::relu, "pool_act", {p});
      const int ps = m.add_op(OpKind::scatter_src, "pool_edge", {pr});
      const int nb = m.add_gather("neigh", ps, ReduceKind::max);
      const int hs = m.add_op(OpKind::matmul, "h_self", {x, ws});
      const int hn = m.add_op(OpKind::matmul, "h_neigh", {nb, wn});
      const int s = m.add_op(OpKind::add, "h", {hs, hn});
      const int y = m.add_op(OpKind::relu, "y", {s});
      m.add_output("out", y);
      break;
    }
    case BenchmarkModel::ggnn: {
      int h = x;
      if (f_in != f_out) h = m.add_op(OpKind::matmul, "h0", {x, m.add_weight("W_in", f_in, f_out)});
      const int wz = m.add_weight("W_z", f_out, f_out);
      const int uz = m.add_weight("U_z", f_out, f_out);
      const int wr = m.add_weight("W_r", f_out, f_out);
      const int ur = m.add_weight("U_r", f_out, f_out);
      const int wn = m.add_weight("W_n", f_out, f_out);
      const int un = m.add_weight("U_n", f_out, f_out);
      const int msg = m.add_op(OpKind::scatter_src, "msg", {h});
      const int a = m.add_gather("agg", msg, ReduceKind::sum);
      const int z = m.add_op(
          OpKind::sigmoid, "z",
          {m.add_op(OpKind::add, "z_pre",
                    {m.add_op(OpKind::matmul, "z_a", {a, wz}), m.add_op(OpKind::matmul, "z_h", {h, uz})})});
      const int r = m.add_op(
          OpKind::sigmoid, "r",
          {m.add_op(OpKind::add, "r_pre",
                    {m.add_op(OpKind::matmul, "r_a", {a, wr}), m.add_op(OpKind::matmul, "r_h", {h, ur})})});
      const int rh = m.add_op(OpKind::mul, "r_h_gate", {r, h});
      const int n = m.add_op(
          OpKind::relu, "n",
          {m.add_op(OpKind::add, "n_pre",
                    {m.add_op(OpKind::matmul, "n_a", {a, wn}), m.add_op(OpKind::matmul, "n_h", {rh, un})})});
      const int delta = m.add_op(OpKind::mul, "z_delta", {z, m.add_op(OpKind::sub, "n_minus_h", {n, h})});
      const int y = m.add_op(OpKind::add, "h_new", {h, delta});
      m.add_output("out", y);
      break;
    }
    case BenchmarkModel::rgcn: {
      const int wrel = m.add_weight("W_rel", f_in, f_out, kRelationalTypes);
      const int wself = m.add_weight("W_self", f_in, f_out);
      const int msg = m.add_op(OpKind::scatter_src, "msg", {x});
      const int typed = m.add_op(OpKind::bmm, "msg_typed", {msg, wrel});
      const int agg = m.add_gather("agg", typed, ReduceKind::sum);
      const int self = m.add_op(OpKind::matmul, "h_self", {x, wself});
      const int s = m.add_op(OpKind::add, "h", {agg, self});
      const int y = m.add_op(OpKind::relu, "y", {s});
      m.add_output("out", y);
      break;
    }
  }
  validate(m);
  return m;
}

ModelGraph build_model(const std::string& name, int f_in, int f_out) {
  return build_model(parse_benchmark(name), f_in, f_out);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  }
  return !std::isdigit(static_cast<unsigned char>(s[0]));
}

int parse_positive(const std::string& s, std::size_t line, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size() || v < 1) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, what + " must be a positive integer, got '" + s + "'");
  }
}

}  // namespace

ModelGraph parse_model(const std::string& text) {
  static const std::map<std::string, OpKind> kKinds = {
      {"input", OpKind::input},       {"output", OpKind::output},
      {"matmul", OpKind::matmul},     {"bmm", OpKind::bmm},
      {"add", OpKind::add},           {"sub", OpKind::sub},
      {"mul", OpKind::mul},           {"div", OpKind::div},
      {"max", OpKind::max},           {"exp", OpKind::exp},
      {"relu", OpKind::relu},         {"sigmoid", OpKind::sigmoid},
      {"scatter_src", OpKind::scatter_src}, {"scatter_dst", OpKind::scatter_dst},
      {"gather_sum", OpKind::gather}, {"gather_max", OpKind::gather},
      {"fused", OpKind::fused},
  };

  ModelGraph m;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const auto lp = line.find('(');
    const auto rp = line.find(')', lp == std::string::npos ? 0 : lp);
    if (eq == std::string::npos || lp == std::string::npos || rp == std::string::npos || lp < eq) {
      throw ParseError(lineno, "expected 'name = kind(arg, ...) [attrs]'");
    }
    const std::string name = trim(line.substr(0, eq));
    const std::string kind_name = trim(line.substr(eq + 1, lp - eq - 1));
    const std::string args = line.substr(lp + 1, rp - lp - 1);
    std::string rest = trim(line.substr(rp + 1));
    if (!valid_identifier(name)) throw ParseError(lineno, "invalid node name '" + name + "'");
    if (m.find(name) >= 0) throw ParseError(lineno, "duplicate node name '" + name + "'");
    auto kit = kKinds.find(kind_name);
    if (kit == kKinds.end()) throw ParseError(lineno, "unknown operation '" + kind_name + "'");

    std::map<std::string, std::string> attrs;
    if (!rest.empty()) {
      if (rest.front() != '[' || rest.back() != ']') {
        throw ParseError(lineno, "attributes must be enclosed in [ ]");
      }
      for (const auto& kv : split_list(rest.substr(1, rest.size() - 2), ',')) {
        const auto e = kv.find('=');
        if (e == std::string::npos) throw ParseError(lineno, "attribute '" + kv + "' lacks '='");
        attrs[trim(kv.substr(0, e))] = trim(kv.substr(e + 1));
      }
    }
    auto attr = [&](const std::string& key) -> std::string {
      auto it = attrs.find(key);
      if (it == attrs.end()) throw ParseError(lineno, "missing attribute '" + key + "'");
      return it->second;
    };

    ModelOp op;
    op.kind = kit->second;
    op.name = name;
    if (kind_name == "gather_max") op.reduce = ReduceKind::max;
    for (const auto& a : split_list(args, ',')) {
      if (a.empty()) throw ParseError(lineno, "empty operand");
      const int ref = m.find(a);
      if (ref < 0) throw ParseError(lineno, "operand '" + a + "' is not defined above");
      op.inputs.push_back(ref);
    }
    if (op.kind == OpKind::input) {
      const std::string domain = attr("domain");
      if (domain == "weight") {
        auto dims = split_list(attr("shape"), 'x');
        if (dims.size() != 2 && dims.size() != 3) {
          throw ParseError(lineno, "weight shape must be RxC or BxRxC");
        }
        std::vector<int> v;
        for (const auto& d : dims) v.push_back(parse_positive(d, lineno, "weight dimension"));
        op.out = dims.size() == 2 ? TensorInfo{Domain::weight, v[1], v[0], 1}
                                  : TensorInfo{Domain::weight, v[2], v[1], v[0]};
      } else if (domain == "vertex" || domain == "edge") {
        op.out = {domain == "vertex" ? Domain::vertex : Domain::edge,
                  parse_positive(attr("dim"), lineno, "dim")};
      } else {
        throw ParseError(lineno, "unknown domain '" + domain + "'");
      }
    }
    if (op.kind == OpKind::fused) op.tag = attr("tag");
    try {
      m.append(std::move(op));
    } catch (const ModelError& e) {
      throw ModelError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(m);
  return m;
}

std::string to_text(const ModelGraph& m) {
  std::ostringstream out;
  for (const auto& n : m.nodes()) {
    out << n.name << " = ";
    if (n.kind == OpKind::gather) {
      out << (n.reduce == ReduceKind::sum ? "gather_sum" : "gather_max");
    } else {
      out << to_string(n.kind);
    }
    out << '(';
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      out << (i ? ", " : "") << m.node(n.inputs[i]).name;
    }
    out << ')';
    if (n.kind == OpKind::input) {
      if (n.out.domain == Domain::weight) {
        out << " [domain=weight, shape=";
        if (n.out.batches != 1) out << n.out.batches << 'x';
        out << n.out.rows << 'x' << n.out.dim << ']';
      } else {
        out << " [domain=" << to_string(n.out.domain) << ", dim=" << n.out.dim << ']';
      }
    } else if (n.kind == OpKind::fused) {
      out << " [tag=" << n.tag << ']';
    }
    out << '\n';
  }
  return out.str();
}

std::string to_json(const ModelGraph& m) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : m.nodes()) {
    nlohmann::ordered_json j;
    j["name"] = n.name;
    j["kind"] = to_string(n.kind);
    std::vector<std::string> ins;
    for (int i : n.inputs) ins.push_back(m.node(i).name);
    j["inputs"] = ins;
    j["domain"] = to_string(n.out.domain);
    j["dim"] = n.out.dim;
    if (n.out.domain == Domain::weight) {
      j["rows"] = n.out.rows;
      j["batches"] = n.out.batches;
    }
    if (n.kind == OpKind::gather) j["reduce"] = n.reduce == ReduceKind::sum ? "sum" : "max";
    if (n.kind == OpKind::fused) j["tag"] = n.tag;
    nodes.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["nodes"] = std::move(nodes);
  return doc.dump(2);
}

ModelGraph defuse(const ModelGraph& m) {
  ModelGraph out;
  std::vector<int> remap(m.size(), -1);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& n = m.node(static_cast<int>(i));
    if (n.kind != OpKind::fused) {
      ModelOp copy = n;
      for (int& in : copy.inputs) in = remap[static_cast<std::size_t>(in)];
      remap[i] = out.append(std::move(copy));
      continue;
    }
    const int src = remap[static_cast<std::size_t>(n.inputs.at(0))];
    if (n.tag == "spmm") {
      const int s = out.add_op(OpKind::scatter_src, n.name + ".scatter", {src});
      remap[i] = out.add_gather(n.name, s, ReduceKind::sum);
    } else if (n.tag == "edge_softmax") {
      const int e = out.add_op(OpKind::exp, n.name + ".exp", {src});
      const int d = out.add_gather(n.name + ".sum", e, ReduceKind::sum);
      const int b = out.add_op(OpKind::scatter_dst, n.name + ".bcast", {d});
      remap[i] = out.add_op(OpKind::div, n.name, {e, b});
    } else {
      throw ModelError("unknown fused tag '" + n.tag + "'");
    }
  }
  return out;
}

namespace {

std::vector<std::string> signatures(const ModelGraph& m) {
  std::vector<std::string> sig(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& n = m.node(static_cast<int>(i));
    std::ostringstream s;
    s << to_string(n.kind) << '/' << to_string(n.out.domain) << '/' << n.out.dim << '/'
      << n.out.rows << '/' << n.out.batches;
    if (n.kind == OpKind::gather) s << '/' << (n.reduce == ReduceKind::sum ? "sum" : "max");
    if (n.kind == OpKind::fused) s << '/' << n.tag;
    // Input markers are told apart by name so that x and W cannot swap.
    if (n.kind == OpKind::input) s << '/' << n.name;
    s << '(';
    for (int in : n.inputs) s << sig[static_cast<std::size_t>(in)] << ';';
    s << ')';
    sig[i] = std::to_string(std::hash<std::string>{}(s.str()));
  }
  return sig;
}

}  // namespace

bool structurally_equal(const ModelGraph& a, const ModelGraph& b) {
  if (a.size() != b.size()) return false;
  auto sa = signatures(a), sb = signatures(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sa == sb;
}

std::vector<std::string> kind_multiset(const ModelGraph& m) {
  std::vector<std::string> out;
  for (const auto& n : m.nodes()) {
    if (n.kind == OpKind::gather) {
      out.push_back(n.reduce == ReduceKind::sum ? "gather_sum" : "gather_max");
    } else {
      out.push_back(to_string(n.kind));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace zipper
