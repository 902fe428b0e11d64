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

#include "zipper/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "zipper/codegen.hpp"
#include "zipper/error.hpp"
#include "zipper/oracle.hpp"
#include "zipper/runtime.hpp"

namespace zipper {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write '" + path + "'");
  out << data;
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::pair<int, int> parse_pair(const std::string& s) {
  int a = 0, b = 0;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> a >> comma >> b) || comma != ',' || !in.eof()) {
    throw ParameterError("expected two comma-separated counts, got '" + s + "'");
  }
  return {a, b};
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> v;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      v.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ParameterError("bad list entry '" + item + "'");
    }
  }
  if (v.empty()) throw ParameterError("empty list");
  return v;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, RunConfig base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw ParameterError("run config must be a JSON object");
  static const char* kKeys[] = {"graph",  "format",   "synthetic", "model",   "f_in",   "f_out",
                                "tiling", "dst_size", "src_size",  "reorder", "e2v",    "streams",
                                "hw",     "energy",   "seed",      "double",  "tolerance"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ParameterError("run config: unknown key '" + key + "'");
    }
  }
  try {
    take(j, "graph", base.graph);
    take(j, "format", base.format);
    take(j, "synthetic", base.synthetic);
    take(j, "model", base.model);
    take(j, "f_in", base.f_in);
    take(j, "f_out", base.f_out);
    take(j, "tiling", base.tiling);
    take(j, "dst_size", base.dst_size);
    take(j, "src_size", base.src_size);
    take(j, "reorder", base.reorder);
    take(j, "e2v", base.e2v);
    take(j, "seed", base.seed);
    take(j, "double", base.use_double);
    take(j, "tolerance", base.tolerance);
    if (j.contains("streams")) {
      const auto s = j.at("streams").get<std::vector<int>>();
      if (s.size() != 2) throw ParameterError("run config: streams must be [n_s, n_e]");
      base.streams = {s[0], s[1]};
    }
    if (j.contains("energy")) {
      const auto& e = j.at("energy");
      for (const auto& [key, value] : e.items()) {
        if (key != "e_mac" && key != "e_onchip" && key != "e_offchip") {
          throw ParameterError("run config: unknown energy key '" + key + "'");
        }
      }
      take(e, "e_mac", base.energy.e_mac);
      take(e, "e_onchip", base.energy.e_onchip);
      take(e, "e_offchip", base.energy.e_offchip);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("run config: ") + e.what());
  }
  if (j.contains("hw")) base.hw = hardware_from_json(j.at("hw").dump(), base.hw);
  return base;
}

std::string to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["graph"] = c.graph;
  j["format"] = c.format;
  j["synthetic"] = c.synthetic;
  j["model"] = c.model;
  j["f_in"] = c.f_in;
  j["f_out"] = c.f_out;
  j["tiling"] = c.tiling;
  j["dst_size"] = c.dst_size;
  j["src_size"] = c.src_size;
  j["reorder"] = c.reorder;
  j["e2v"] = c.e2v;
  j["streams"] = {c.streams.n_s, c.streams.n_e};
  j["hw"] = nlohmann::ordered_json::parse(to_json(c.hw));
  j["energy"] = {{"e_mac", c.energy.e_mac}, {"e_onchip", c.energy.e_onchip}, {"e_offchip", c.energy.e_offchip}};
  j["seed"] = c.seed;
  j["double"] = c.use_double;
  j["tolerance"] = c.tolerance;
  return j.dump(2);
}

Workload prepare(const RunConfig& cfg) {
  Workload w;
  if (std::filesystem::exists(cfg.model) && !std::filesystem::is_directory(cfg.model)) {
    w.model = parse_model(read_file(cfg.model));
  } else {
    w.model = build_model(cfg.model, cfg.f_in, cfg.f_out);
  }
  validate(w.model);

  if (!cfg.synthetic.empty()) {
    std::istringstream in(cfg.synthetic);
    std::string kind, v, e;
    std::getline(in, kind, ':');
    std::getline(in, v, ':');
    std::getline(in, e, ':');
    try {
      w.graph = gen_synthetic(parse_synthetic_kind(kind), std::stoull(v), e.empty() ? 0 : std::stoull(e), cfg.seed);
    } catch (const std::invalid_argument&) {
      throw ParameterError("synthetic graph must be kind:vertices:edges, got '" + cfg.synthetic + "'");
    }
  } else if (!cfg.graph.empty()) {
    w.graph = load_graph(cfg.graph, parse_graph_format(cfg.format));
  } else {
    throw ParameterError("no graph given: use --graph or --synthetic");
  }
  const bool typed = std::any_of(w.model.nodes().begin(), w.model.nodes().end(),
                                 [](const ModelOp& n) { return n.kind == OpKind::bmm; });
  if (typed && !w.graph.has_edge_types()) w.graph = assign_random_edge_types(w.graph, kRelationalTypes, cfg.seed);
  if (cfg.reorder) w.graph = degree_reorder(w.graph).first;

  const std::size_t dst = cfg.dst_size ? cfg.dst_size : auto_partition_size(w.graph, cfg.hw, w.model);
  const std::size_t src = cfg.src_size ? cfg.src_size : dst;
  w.plan = make_plan(w.graph, dst, src, parse_tiling_mode(cfg.tiling));
  check_capacity(w.plan, cfg.hw, w.model);
  return w;
}

namespace {

struct Inputs {
  FeatureSet<double> feats;
  WeightSet<double> weights;
};

Inputs make_inputs(const Workload& w, std::uint64_t seed) {
  Inputs in;
  int vdim = 0, edim = 0;
  for (const auto& n : w.model.nodes()) {
    if (n.kind != OpKind::input) continue;
    if (n.out.domain == Domain::vertex) vdim = n.out.dim;
    if (n.out.domain == Domain::edge) edim = n.out.dim;
  }
  in.feats = random_features<double>(w.graph, std::max(vdim, 1), seed, edim);
  in.weights = random_weights<double>(w.model, seed + 1);
  return in;
}

template <typename Scalar>
int verify_with(const RunConfig& cfg, const Workload& w, const Program& prog, std::ostream& out) {
  const Inputs in = make_inputs(w, cfg.seed);
  const FeatureSet<Scalar> feats = in.feats.cast<Scalar>();
  WeightSet<Scalar> weights;
  for (const auto& [k, m] : in.weights) weights[k] = m.template cast<Scalar>();
  const auto expected = run_dense(defuse(w.model), w.graph, feats, weights);
  const auto got = execute(prog, w.plan, w.graph, feats, weights, cfg.streams, {false});
  const CompareReport r = compare(got.output, expected, cfg.tolerance);
  nlohmann::ordered_json j;
  j["pass"] = r.pass;
  j["max_rel_err"] = r.max_rel_err;
  j["message"] = r.message;
  j["partitions"] = w.plan.partitions.size();
  j["tiles"] = w.plan.num_tiles();
  j["peak_live_bytes"] = got.stats.peak_live_bytes;
  out << j.dump(2) << '\n';
  return r.pass ? kExitOk : kExitVerifyFailed;
}

Program compile_for(const RunConfig& cfg, const Workload& w, PassReport* report = nullptr) {
  auto r = compile_model(w.model, cfg.e2v, Capacities::from_plan(w.plan, cfg.streams));
  if (report) *report = r.report;
  return std::move(r.program);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // Config file first, so that flags parsed below override it.
  RunConfig cfg;
  std::string config_path;
  if (const char* env = std::getenv("ZIPPER_CONFIG")) config_path = env;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  std::string streams, hw_path;

  CLI::App app{"zipper: GNN tile compiler and accelerator simulator"};
  app.require_subcommand(1);
  app.add_option("--config", config_path, "JSON run config (also ZIPPER_CONFIG)");

  auto add_workload = [&](CLI::App* c) {
    c->add_option("--graph", cfg.graph, "graph file");
    c->add_option("--format", cfg.format, "edge_list or mtx");
    c->add_option("--synthetic", cfg.synthetic, "generated graph kind:vertices:edges");
    c->add_option("--model", cfg.model, "benchmark name or model file");
    c->add_option("--f-in", cfg.f_in, "input embedding width");
    c->add_option("--f-out", cfg.f_out, "output embedding width");
    c->add_option("--tiling", cfg.tiling, "regular or sparse");
    c->add_option("--dst-size", cfg.dst_size, "destination partition size (0: auto)");
    c->add_option("--src-size", cfg.src_size, "source interval size (0: dst size)");
    c->add_flag("--reorder", cfg.reorder, "relabel vertices by in-degree");
    c->add_option("--streams", streams, "sStreams,eStreams");
    c->add_option("--hw", hw_path, "hardware JSON");
    c->add_option("--seed", cfg.seed, "generator and feature seed");
  };

  bool no_e2v = false;
  std::string program_path, listing_path;
  auto* compile = app.add_subcommand("compile", "compile a model to a program");
  add_workload(compile);
  compile->add_flag("--no-e2v", no_e2v, "skip edge-to-vertex motion");
  compile->add_option("-o,--output", program_path, "binary program file");
  compile->add_option("--listing", listing_path, "disassembly file");

  bool inject = false;
  auto* verify = app.add_subcommand("verify", "check tiled execution against the dense oracle");
  add_workload(verify);
  verify->add_flag("--no-e2v", no_e2v, "skip edge-to-vertex motion");
  verify->add_flag("--inject-drop-signal", inject, "remove the SIGNAL that wakes eStreams");
  verify->add_flag("--double", cfg.use_double, "64-bit arithmetic");
  verify->add_option("--tolerance", cfg.tolerance, "relative tolerance");

  std::string stats_path, csv_path;
  std::uint64_t window = 1000;
  auto* run = app.add_subcommand("run", "simulate and report cycles, traffic and energy");
  add_workload(run);
  run->add_flag("--no-e2v", no_e2v, "skip edge-to-vertex motion");
  run->add_option("-o,--output", stats_path, "stats JSON file");
  run->add_option("--csv", csv_path, "utilization CSV file");
  run->add_option("--window", window, "utilization window in cycles");

  std::string stream_grid = "1,2,4,8", mu_grid, vu_grid, table_path;
  bool same_streams = false;
  auto* sweep = app.add_subcommand("sweep", "simulate over a grid of stream and unit counts");
  add_workload(sweep);
  sweep->add_flag("--no-e2v", no_e2v, "skip edge-to-vertex motion");
  sweep->add_option("--stream-grid", stream_grid, "stream counts to try");
  sweep->add_flag("--same-streams", same_streams, "only n_s == n_e cells");
  sweep->add_option("--mu-grid", mu_grid, "MU counts to try");
  sweep->add_option("--vu-grid", vu_grid, "VU counts to try");
  sweep->add_option("-o,--output", table_path, "CSV table file");

  try {
    if (!config_path.empty()) cfg = run_config_from_json(read_file(config_path), cfg);
    app.parse(argc, argv);
    if (!hw_path.empty()) cfg.hw = hardware_from_json(read_file(hw_path), cfg.hw);
    if (!streams.empty()) {
      auto [s, e] = parse_pair(streams);
      cfg.streams = {s, e};
    }
    if (no_e2v) cfg.e2v = false;
    validate(cfg.hw, cfg.streams);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (compile->parsed()) {
      PassReport report;
      Program prog;
      if (cfg.graph.empty() && cfg.synthetic.empty()) {
        ModelGraph m = std::filesystem::exists(cfg.model) ? parse_model(read_file(cfg.model))
                                                          : build_model(cfg.model, cfg.f_in, cfg.f_out);
        auto r = compile_model(m, cfg.e2v);
        report = r.report;
        prog = std::move(r.program);
      } else {
        prog = compile_for(cfg, prepare(cfg), &report);
      }
      if (!program_path.empty()) {
        const auto bytes = encode(prog);
        write_file(program_path, std::string(bytes.begin(), bytes.end()));
      }
      nlohmann::ordered_json j = nlohmann::ordered_json::parse(report.to_json());
      j["instructions"] = {{"s", prog.s_function.size()}, {"e", prog.e_function.size()}, {"d", prog.d_function.size()}};
      out << j.dump(2) << '\n';
      if (!listing_path.empty()) {
        write_file(listing_path, disassemble(prog));
      } else {
        out << disassemble(prog);
      }
      return kExitOk;
    }

    const Workload w = prepare(cfg);

    if (verify->parsed()) {
      Program prog = compile_for(cfg, w);
      if (inject) prog = drop_edge_signal(prog);
      try {
        return cfg.use_double ? verify_with<double>(cfg, w, prog, out) : verify_with<float>(cfg, w, prog, out);
      } catch (const DeadlockError& e) {
        err << e.report().to_string() << '\n';
        return kExitVerifyFailed;
      }
    }

    if (run->parsed()) {
      const Program prog = compile_for(cfg, w);
      const SimResult r = simulate(prog, w.plan, cfg.streams, cfg.hw, {!csv_path.empty()});
      const EnergyReport en = energy(r.stats, cfg.energy);
      nlohmann::ordered_json j;
      j["config"] = nlohmann::ordered_json::parse(to_json(cfg));
      j["stats"] = nlohmann::ordered_json::parse(r.stats.to_json());
      j["energy"] = nlohmann::ordered_json::parse(en.to_json());
      j["traffic"] = nlohmann::ordered_json::parse(to_json(traffic_stats(w.plan, static_cast<std::uint64_t>(cfg.f_in), 4)));
      j["plan"] = {{"partitions", w.plan.partitions.size()}, {"tiles", w.plan.num_tiles()}};
      if (stats_path.empty()) {
        out << j.dump(2) << '\n';
      } else {
        write_file(stats_path, j.dump(2) + "\n");
      }
      if (!csv_path.empty()) write_file(csv_path, utilization_csv(r, cfg.hw, window));
      return kExitOk;
    }

    // sweep
    const Program prog = compile_for(cfg, w);
    const auto s_values = parse_list(stream_grid);
    const auto mu_values = mu_grid.empty() ? std::vector<int>{cfg.hw.mu_count} : parse_list(mu_grid);
    const auto vu_values = vu_grid.empty() ? std::vector<int>{cfg.hw.vu_count} : parse_list(vu_grid);
    std::ostringstream table;
    table << "n_s,n_e,mu,vu,cycles,normalized,error\n";
    std::optional<double> baseline;
    for (int mu : mu_values) {
      for (int vu : vu_values) {
        for (int s : s_values) {
          for (int e : s_values) {
            if (same_streams && s != e) continue;
            table << s << ',' << e << ',' << mu << ',' << vu << ',';
            try {
              HardwareConfig hw = cfg.hw;
              hw.mu_count = mu;
              hw.vu_count = vu;
              const auto r = simulate(prog, w.plan, {s, e}, hw);
              const double c = static_cast<double>(r.stats.total_cycles);
              if (!baseline) baseline = c;
              table << r.stats.total_cycles << ',' << c / *baseline << ",\n";
            } catch (const Error& ex) {
              table << ",," << '"' << ex.what() << '"' << '\n';
            }
          }
        }
      }
    }
    if (table_path.empty()) {
      out << table.str();
    } else {
      write_file(table_path, table.str());
    }
    return kExitOk;
  } catch (const CapacityError& e) {
    err << "capacity: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitVerifyFailed;
  }
}

}  // namespace zipper
