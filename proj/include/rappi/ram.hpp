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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rappi/ensemble.hpp"
#include "rappi/pulse.hpp"
#include "rappi/units.hpp"

// Spectral memory cells addressed by multitone RAP events.
//
// A cell stores a probe at t_in and re-emits it at t_out. Its RAP1/RAP2 pair
// is rigid: RAP2 starts (t_out - t_in)/2 after RAP1, while the RAP1 start
// itself may slide. One physical event carries one tone per addressed cell,
// and can act as RAP1 for one cell and RAP2 for another.
namespace rappi::ram {

struct MemoryCell {
  int id = 0;
  double center = 0.0;     // carrier detuning, rad/s
  double tone_span = 0.0;  // swept width of the cell's RAP tone, rad/s
  double guard = 0.0;      // spacing to neighbouring cells, rad/s
};

// Cells k = 0..count-1 centred symmetrically around zero, `spacing` apart.
std::vector<MemoryCell> cell_row(std::size_t count, double spacing, double tone_span);
// allow_overlap admits tone spans wider than the guard (cross-talk studies).
void validate_cells(const std::vector<MemoryCell>& cells, bool allow_overlap = false);

struct RamRequest {
  int cell = 0;
  double t_in = 0.0;   // probe centre, s
  double t_out = 0.0;  // requested echo centre, s
};

struct ScheduleOptions {
  double tau_r = 50e-6;
  double probe_duration = 2e-6;
  double guard = 1e-6;      // margin around probe/echo windows and between events
  double time_step = 1e-6;  // RAP start-time grid
};

struct RamEvent {
  double t_start = 0.0;
  double duration = 0.0;
  std::vector<int> cells;  // one tone per addressed cell, ascending ids
};

struct CellAssignment {
  int cell = 0;
  std::size_t first = 0;   // index of the RAP1 event
  std::size_t second = 0;  // index of the RAP2 event
  double t_in = 0.0;
  double t_out = 0.0;
};

struct Violation {
  std::string kind;  // "collision", "event-overlap"
  int cell = -1;
  std::string message;
};

struct RamSchedule {
  std::vector<RamEvent> events;  // sorted by start time
  std::vector<CellAssignment> assignments;
  std::vector<Violation> violations;
  bool feasible = true;
};

// Admissible RAP1 start range [lo, hi] for one request (before collisions).
// Throws "infeasible-request" when the range is empty.
std::pair<double, double> rap1_range(const RamRequest& request, const ScheduleOptions& options);

// Grid-snapped RAP1 candidates that keep both events clear of every probe
// and echo window in `requests`.
std::vector<double> rap1_candidates(const RamRequest& request, const std::vector<RamRequest>& requests,
                                    const ScheduleOptions& options);

// Greedy merge: each cell takes the RAP1 start needing the fewest new
// events (earliest start on ties); the best result over several cell
// orders is kept.
RamSchedule schedule(const std::vector<RamRequest>& requests, const std::vector<MemoryCell>& cells,
                     const ScheduleOptions& options = {});

// Lines `cell,t_in_us,t_out_us`.
std::vector<RamRequest> read_requests(const std::string& path);
std::string schedule_json(const RamSchedule& schedule);

// The bundled 8-cell scenario (staggered requests, 3.5 MHz spacing).
std::vector<RamRequest> example_requests();
std::vector<MemoryCell> example_cells();

// Physics used to simulate one cell's band.
struct CellPhysics {
  pulse::Kind probe_kind = pulse::Kind::probe_square;
  double probe_duration = 2e-6;
  double probe_tip = 0.01;        // pulse area, rad
  double rap_rabi = units::two_pi * 0.35e6;
  double tau_r = 50e-6;
  double t2 = units::infinity;
  std::size_t min_atoms = 401;
  double sample_dt = 0.05e-6;
  double dt_max = 0.0;
  double neighbour_reach = 2.0;   // tones of cells within this many guards are simulated
  int threads = 1;
};

// One cell's band over [t_begin, t_end], in the frame of the cell's centre.
// Only the given probes are applied; each event contributes the tones of the
// listed cells that lie within reach (or only the cell's own tone).
struct CellSimulation {
  int cell = 0;
  ensemble::EnsembleTrace trace;
  std::size_t atoms = 0;
};

CellSimulation simulate_cell(const std::vector<MemoryCell>& cells, int cell, const std::vector<double>& probe_times,
                             const std::vector<RamEvent>& events, double t_begin, double t_end,
                             const CellPhysics& physics, bool own_tones_only);

struct CellReport {
  int cell = 0;
  double t_out = 0.0;
  double t_echo = 0.0;            // echo peak with every scheduled tone present
  double echo_energy = 0.0;       // own tones only, window t_out +- 2 tau_probe
  double full_echo_energy = 0.0;  // every tone, same window
  double crosstalk_energy = 0.0;  // largest off-target windowed energy away from t_out
  double crosstalk_ratio = 0.0;
  bool timing_ok = false;
  bool crosstalk_ok = false;
};

struct VerifyOptions {
  CellPhysics physics;
  double crosstalk_threshold = 0.01;
};

struct VerifyReport {
  std::vector<CellReport> cells;
  bool pass = false;
  std::vector<std::string> failures;
};

VerifyReport verify_schedule(const RamSchedule& schedule, const std::vector<MemoryCell>& cells,
                             const VerifyOptions& options = {});
std::string verify_json(const VerifyReport& report);

// Multimode storage.

enum class MultimodeKind { temporal, spectral, spectro_temporal };
const char* multimode_name(MultimodeKind k);

struct Mode {
  int cell = 0;
  int bin = 0;                 // temporal slot index within the cell
  double t_in = 0.0;
  double t_expected = 0.0;     // nan when the scenario does not recall it in the record
  double t_echo = 0.0;         // peak of the recovered signal near t_expected
  double energy = 0.0;         // signal energy in t_expected +- tau_probe/2
  double efficiency = 0.0;     // energy relative to the same window around the input
  double leakage = 0.0;        // worst energy at other cells' recall times, relative to `energy`
  bool recalled = false;
};

struct MultimodeScenario {
  std::string name;
  std::vector<MemoryCell> cells;
  std::vector<std::pair<int, double>> probes;  // (cell, probe centre)
  std::vector<RamEvent> events;
  std::vector<Mode> modes;
  double t_end = 0.0;
  CellPhysics physics;
};

struct MultimodeResult {
  std::string name;
  std::vector<Mode> modes;
  std::vector<CellSimulation> traces;
  bool fifo = true;           // echo order matches input order within each cell
  double spacing_error = 0.0; // worst deviation of echo spacing from input spacing, s
  double energy_spread = 0.0; // (max - min) / mean over recalled modes
};

// 26 x 1 us probes every 3 us, one 4 MHz RAP tone at 2pi*80 MHz/ms.
MultimodeScenario temporal_scenario();
// Three tones 3.5 MHz apart; variant 1..4 selects the recall pattern:
// simultaneous, FIFO across tones, early central tone then FIFO, fully on demand.
MultimodeScenario spectral_scenario(int variant);
// Three tones with six temporal slots each and a fixed occupancy mask.
MultimodeScenario spectro_temporal_scenario();

MultimodeResult multimode_run(const MultimodeScenario& scenario);

}  // namespace rappi::ram
