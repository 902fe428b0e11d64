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

#ifndef ZIPPER_HARDWARE_HPP
#define ZIPPER_HARDWARE_HPP

#include <cstdint>
#include <string>

namespace zipper {

struct StreamConfig {
  int n_s = 1;
  int n_e = 1;
};

/// Accelerator parameters. Defaults describe the reference configuration.
struct HardwareConfig {
  double clock_hz = 1e9;
  int mu_count = 1;
  int mu_rows = 32;
  int mu_cols = 128;
  int vu_count = 2;
  int vu_cores = 8;
  int vu_lanes = 32;
  std::uint64_t uem_bytes = 21ull << 20;
  std::uint64_t tilehub_bytes = 256ull << 10;
  std::uint64_t offchip_bw = 256;       // bytes per cycle
  std::uint64_t offchip_latency = 100;  // cycles
  int dispatcher_queue = 0;             // 0: sized to the stream count
  int scheduler_overhead = 1;
  int dispatcher_overhead = 1;

  int queue_entries(const StreamConfig& cfg) const {
    return dispatcher_queue > 0 ? dispatcher_queue : cfg.n_s + cfg.n_e + 1;
  }
};

/// Throws ParameterError when a field is non-positive or the dispatcher
/// queue cannot hold one entry per stream.
void validate(const HardwareConfig& hw, const StreamConfig& cfg);
void validate(const StreamConfig& cfg);

/// Overlays the keys present in a JSON object onto `base`; unknown keys are
/// rejected.
HardwareConfig hardware_from_json(const std::string& text, HardwareConfig base = {});
std::string to_json(const HardwareConfig& hw);

}  // namespace zipper

#endif  // ZIPPER_HARDWARE_HPP
