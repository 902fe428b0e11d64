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

#ifndef ZIPPER_CLI_HPP
#define ZIPPER_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zipper/graph.hpp"
#include "zipper/hardware.hpp"
#include "zipper/model.hpp"
#include "zipper/tiling.hpp"
#include "zipper/timing.hpp"

namespace zipper {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitCapacity = 3 };

/// Everything a command needs to rebuild a workload.
struct RunConfig {
  std::string graph;                  // file path
  std::string format = "edge_list";   // edge_list | mtx
  std::string synthetic;              // kind:vertices:edges, e.g. rmat:256:2048
  std::string model = "gcn";          // benchmark name or model file
  int f_in = 16;
  int f_out = 16;
  std::string tiling = "sparse";
  std::size_t dst_size = 0;  // 0: fit the embedding memory
  std::size_t src_size = 0;  // 0: same as dst_size
  bool reorder = false;
  bool e2v = true;
  StreamConfig streams;
  HardwareConfig hw;
  EnergyParams energy;
  std::uint64_t seed = 1;
  bool use_double = false;
  double tolerance = 1e-5;
};

/// Overlays the keys of a JSON object onto `base`. The hardware and energy
/// sections are nested objects; unknown keys are rejected.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});
std::string to_json(const RunConfig& cfg);

struct Workload {
  Graph graph;
  ModelGraph model;
  TilingPlan plan;
};

/// Loads or generates the graph, reorders it if asked, builds the model and
/// tiles the graph. Throws CapacityError when a tile does not fit.
Workload prepare(const RunConfig& cfg);

/// Entry point of the command-line tool. The config file named by
/// ZIPPER_CONFIG or --config is applied before the flags.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zipper

#endif  // ZIPPER_CLI_HPP
