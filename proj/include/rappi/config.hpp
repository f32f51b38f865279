// Copyright 2026 The rappi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rappi/analysis.hpp"
#include "rappi/protocol.hpp"
#include "rappi/ram.hpp"

// Run configuration. Values are kept in the units named by their keys so
// that a resolved configuration written back out parses to the same values.
namespace rappi::config {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_name = "rappi";
inline constexpr const char* tool_version = "0.1.0";

enum class Experiment { protocol_run, depth_sweep, storage_sweep, multimode, ram_schedule, crosstalk, fit, photon_budget };

const char* experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);

struct RunConfig {
  Experiment experiment = Experiment::protocol_run;

  // Protocol physics.
  std::string protocol = "rappi";
  double tau1_us = 10.0;
  double tau2_us = 20.0;
  std::string probe_shape = "square";
  double probe_duration_us = 2.0;
  double probe_tip_rad = 0.01;
  double rap_duration_us = 50.0;
  double rap_rabi_mhz = 0.35;
  double rap_chirp_mhz_per_ms = 30.0;
  std::optional<double> rap2_chirp_mhz_per_ms;  // RAP2 override; absent means identical RAPs
  double pi_duration_us = 0.1;
  bool ideal_pi = false;
  double alpha_l = 2.0;
  std::size_t slices = 32;
  std::optional<std::size_t> atoms = 1001;      // absent: smallest count passing the revival guard
  double window_mhz = 3.3;
  std::string profile = "uniform";
  double linewidth_mhz = 0.0;
  std::optional<double> t2_us;                  // absent: no decay
  std::optional<double> t1_us;
  double sample_dt_us = 0.05;
  double dt_max_us = 0.0;                       // 0: default envelope grid

  // depth-sweep
  double alpha_l_min = 0.0;
  double alpha_l_max = 6.0;
  std::size_t alpha_l_points = 25;

  // storage-sweep
  std::vector<double> storage_times_us{140, 200, 300, 400, 500, 600, 700};
  std::optional<double> target_eta;             // tune alpha_L (without decay) to this first

  // multimode
  std::string scenario = "temporal";

  // ram-schedule, crosstalk
  std::string requests_file;                    // empty: bundled 8-cell requests
  std::size_t cells = 8;
  double cell_spacing_mhz = 3.5;
  double tone_span_mhz = 1.5;
  double guard_us = 1.0;
  double time_step_us = 1.0;
  bool verify = true;
  double crosstalk_threshold = 0.01;

  // fit
  std::string data_file;
  std::string form = "memory";

  // photon-budget
  double photons_at_crystal = 2500.0;
  std::vector<double> chain{0.15, 0.60, 0.65, 0.12};
  std::size_t samples = 0;

  std::uint64_t seed = 0;

  // Not part of the resolved configuration.
  int threads = 1;
  std::filesystem::path base_dir;
};

// Strict parsing: unknown keys, keys that the chosen experiment does not
// use, and wrongly typed values are errors. A run manifest
// ({"tool", "version", "config"}) is accepted in place of a configuration.
RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load(const std::filesystem::path& path);

// Every key used by the experiment, defaults filled in.
json resolved(const RunConfig& config);

json manifest(const RunConfig& config);

// Physics objects built from a configuration.
protocol::ProtocolRun protocol_run(const RunConfig& config);
ram::CellPhysics cell_physics(const RunConfig& config);
ram::ScheduleOptions schedule_options(const RunConfig& config);
std::filesystem::path resolve_path(const RunConfig& config, const std::string& file);

}  // namespace rappi::config
