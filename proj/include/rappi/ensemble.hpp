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

#include <complex>
#include <cstddef>
#include <ostream>
#include <variant>
#include <vector>

#include "rappi/bloch.hpp"
#include "rappi/pulse.hpp"

namespace rappi::ensemble {

using cplx = std::complex<double>;

enum class Profile { uniform, gaussian, lorentzian };

const char* profile_name(Profile p);

struct EnsembleSpec {
  std::size_t atoms = 1001;
  double window = 0.0;     // full simulated detuning span, rad/s
  double center = 0.0;     // rad/s
  Profile profile = Profile::uniform;
  double linewidth = 0.0;  // FWHM of the gaussian/lorentzian profile, rad/s
  // Keep atoms outside the probe band but inside the RAP sweep. They carry
  // the free-induction decay after each RAP.
  bool includes_spectators = true;
  double t2 = units::infinity;
  double t1 = units::infinity;
};

struct AtomGrid {
  std::vector<bloch::AtomParams> atoms;
  double spacing = 0.0;        // rad/s
  double revival_time = 0.0;   // 2*pi/spacing, s
};

// Uniform grid with weights following the profile and summing to one.
// Refuses grids whose artificial revival time is not more than twice
// `simulation_span`.
AtomGrid build_grid(const EnsembleSpec& spec, double simulation_span);

// The simulated window must hold the RAP sweep plus four probe widths.
// Both arguments in rad/s.
void check_window(const EnsembleSpec& spec, double rap_span, double probe_fwhm);

// Odd atom count whose revival time exceeds twice the span with a 2% margin,
// never below `minimum`.
std::size_t atoms_for_span(double window, double simulation_span, std::size_t minimum = 401);

// Probe pulses are left out of the background (no-probe) copy of the run.
struct PulseEvent {
  pulse::PulseSpec spec;
  bool probe = false;
};

inline PulseEvent probe_event(pulse::PulseSpec spec) { return {std::move(spec), true}; }
inline PulseEvent control_event(pulse::PulseSpec spec) { return {std::move(spec), false}; }

// Explicit free evolution appended at the current end of the timeline.
struct Wait {
  double duration = 0.0;
};

// Instantaneous rotation at `time` (hard-pulse limit).
struct IdealRotation {
  double time = 0.0;
  double angle = units::pi;
  double phase = 0.0;
};

using Event = std::variant<PulseEvent, Wait, IdealRotation>;

struct Sequence {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<Event> events;
};

struct RunOptions {
  double sample_dt = 0.05e-6;
  double dt_max = 0.0;          // envelope spacing; 0 selects the default policy
  double probe_duration = 0.0;  // feeds the default grid policy
  double frame = 0.0;           // rotating-frame offset, rad/s
  bool subtract_background = true;
  int threads = 1;
};

struct EnsembleTrace {
  std::vector<double> t;
  std::vector<double> sigma_y_bar;
  std::vector<double> sigma_z_bar;
  std::vector<cplx> emitted_proxy;
  // emitted_proxy minus the same quantity for a run without probe pulses,
  // i.e. the probe-induced part. Equal to emitted_proxy when background
  // subtraction is off.
  std::vector<cplx> signal;
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

struct SequenceResult {
  EnsembleTrace trace;
  std::vector<bloch::AtomState> final_states;
  std::vector<bloch::AtomState> background_states;
};

SequenceResult run_sequence(const AtomGrid& grid, const Sequence& sequence, const RunOptions& options = {});

// Predicted echo time after the probe centre: 2*(tau2 + tau_r), where tau1
// runs from probe centre to RAP1 start and tau2 from RAP1 end to RAP2 start.
double echo_time_check(double tau1, double tau2, double tau_r);

struct EchoPeak {
  double time = 0.0;
  double magnitude = 0.0;
  std::size_t index = 0;
};

// Peak of |signal| inside [predicted - half_window, predicted + half_window].
EchoPeak find_echo(const EnsembleTrace& trace, double predicted, double half_window, bool use_signal = true);

// Integral of |signal|^2 over a window (trapezoid rule).
double window_energy(const EnsembleTrace& trace, double center, double half_window, bool use_signal = true);

void write_trace_csv(std::ostream& out, const EnsembleTrace& trace);

}  // namespace rappi::ensemble
