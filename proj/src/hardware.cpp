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

#include "zipper/hardware.hpp"

#include <json.hpp>

#include "zipper/error.hpp"

namespace zipper {

void validate(const StreamConfig& cfg) {
  if (cfg.n_s < 1 || cfg.n_e < 1) throw ParameterError("stream counts must be at least 1");
}

void validate(const HardwareConfig& hw, const StreamConfig& cfg) {
  validate(cfg);
  if (!(hw.clock_hz > 0) || hw.mu_count < 1 || hw.mu_rows < 1 || hw.mu_cols < 1 ||
      hw.vu_count < 1 || hw.vu_cores < 1 || hw.vu_lanes < 1 || hw.uem_bytes == 0 ||
      hw.tilehub_bytes == 0 || hw.offchip_bw == 0 || hw.scheduler_overhead < 0 ||
      hw.dispatcher_overhead < 0 || hw.dispatcher_queue < 0) {
    throw ParameterError("hardware parameters must be positive");
  }
  if (hw.queue_entries(cfg) < cfg.n_s + cfg.n_e + 1) {
    throw ParameterError("dispatcher queue of " + std::to_string(hw.dispatcher_queue) +
                         " entries is smaller than the stream count " +
                         std::to_string(cfg.n_s + cfg.n_e + 1));
  }
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

HardwareConfig hardware_from_json(const std::string& text, HardwareConfig base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("hardware config: ") + e.what());
  }
  if (!j.is_object()) throw ParameterError("hardware config must be a JSON object");
  static const char* kKeys[] = {"clock_hz", "mu_count", "mu_rows", "mu_cols", "vu_count",
                                "vu_cores", "vu_lanes", "uem_bytes", "tilehub_bytes",
                                "offchip_bw", "offchip_latency", "dispatcher_queue",
                                "scheduler_overhead", "dispatcher_overhead"};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ParameterError("hardware config: unknown key '" + key + "'");
  }
  try {
    take(j, "clock_hz", base.clock_hz);
    take(j, "mu_count", base.mu_count);
    take(j, "mu_rows", base.mu_rows);
    take(j, "mu_cols", base.mu_cols);
    take(j, "vu_count", base.vu_count);
    take(j, "vu_cores", base.vu_cores);
    take(j, "vu_lanes", base.vu_lanes);
    take(j, "uem_bytes", base.uem_bytes);
    take(j, "tilehub_bytes", base.tilehub_bytes);
    take(j, "offchip_bw", base.offchip_bw);
    take(j, "offchip_latency", base.offchip_latency);
    take(j, "dispatcher_queue", base.dispatcher_queue);
    take(j, "scheduler_overhead", base.scheduler_overhead);
    take(j, "dispatcher_overhead", base.dispatcher_overhead);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("hardware config: ") + e.what());
  }
  return base;
}

std::string to_json(const HardwareConfig& hw) {
  nlohmann::ordered_json j;
  j["clock_hz"] = hw.clock_hz;
  j["mu_count"] = hw.mu_count;
  j["mu_rows"] = hw.mu_rows;
  j["mu_cols"] = hw.mu_cols;
  j["vu_count"] = hw.vu_count;
  j["vu_cores"] = hw.vu_cores;
  j["vu_lanes"] = hw.vu_lanes;
  j["uem_bytes"] = hw.uem_bytes;
  j["tilehub_bytes"] = hw.tilehub_bytes;
  j["offchip_bw"] = hw.offchip_bw;
  j["offchip_latency"] = hw.offchip_latency;
  j["dispatcher_queue"] = hw.dispatcher_queue;
  j["scheduler_overhead"] = hw.scheduler_overhead;
  j["dispatcher_overhead"] = hw.dispatcher_overhead;
  return j.dump(2);
}

}  // namespace zipper
