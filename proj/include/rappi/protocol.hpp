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

#include <optional>
#include <vector>

#include "rappi/analysis.hpp"
#include "rappi/bloch.hpp"
#include "rappi/ensemble.hpp"
#include "rappi/propagation.hpp"
#include "rappi/pulse.hpp"

namespace rappi::protocol {

enum class Kind { rappi, two_ppe };

const char* kind_name(Kind k);

// Timing (probe centre at t = 0):
//   rappi: RAP1 starts at tau1, RAP2 starts at tau1 + tau_R + tau2, echo at
//          2*(tau2 + tau_R); the unsilenced primary echo would sit at
//          2*tau1 + tau_R.
//   2ppe:  pi pulse centred at tau1, echo at 2*tau1.
struct ProtocolRun {
  Kind kind = Kind::rappi;
  double tau1 = 10e-6;
  double tau2 = 20e-6;
  pulse::PulseSpec probe;
  pulse::PulseSpec control;  // RAP for rappi, short pi pulse for 2ppe; centre is set here
  // RAP2 override for sensitivity studies; RAP1 and RAP2 are otherwise identical.
  std::optional<pulse::PulseSpec> second_control;
  bool ideal_pi = false;     // 2ppe: replace the pi pulse by an instantaneous rotation
  propagation::MediumSpec medium;
  double sample_dt = 0.05e-6;
  double dt_max = 0.0;       // envelope spacing; 0 selects the default policy
  int threads = 1;

  double tau_r() const { return control.duration; }
  void validate() const;
};

struct BuiltSequence {
  ensemble::Sequence sequence;
  std::vector<pulse::PulseSpec> controls;
  double t_echo = 0.0;
  double t_primary = 0.0;
  double t_controls_end = 0.0;
};

BuiltSequence build_sequence(const ProtocolRun& run);
double predicted_echo_time(const ProtocolRun& run);

// Reference defaults: 2 us square probe, 50 us sinc RAP with
// Omega0 = 2pi*0.35 MHz and R = 2pi*30 MHz/ms, tau1 = 10 us, tau2 = 20 us.
ProtocolRun reference_run();
// A 0.1 us resonant pi pulse (Omega0*duration = pi).
pulse::PulseSpec pi_pulse(double duration = 0.1e-6);

// Per-atom quantities that do not depend on the optical depth or on the
// storage time, computed once and reused by every evaluation.
struct Prepared {
  ProtocolRun run;
  ensemble::AtomGrid grid;
  pulse::SampledEnvelope probe_env;
  std::vector<bloch::AtomState> probe_signal;  // state change caused by the probe, at probe end
  std::vector<bloch::AffineMap> first_maps;    // control 1 (and 2 unless overridden)
  std::vector<bloch::AffineMap> second_maps;   // only filled for an overridden control 2
  double input_energy = 0.0;
};

// simulation_span is the longest time after the probe that will be
// evaluated; it feeds the grid revival guard.
Prepared prepare(const ProtocolRun& run, double simulation_span);

// Delays of one sequence; storage sweeps vary them around a prepared run.
struct Timing {
  double tau1 = 0.0;
  double tau2 = 0.0;
};

Timing timing_of(const ProtocolRun& run);
// Timing reaching echo time t_echo: tau2 varies for rappi, tau1 for 2ppe.
Timing timing_for_echo(const ProtocolRun& run, double t_echo);
double echo_time(const ProtocolRun& run, const Timing& timing);

// Linear-response states of every atom at time t (outside control pulses).
propagation::StoredCoherence states_at(const Prepared& prep, const Timing& timing, double t);

struct EchoEvaluation {
  propagation::PropagationResult field;
  double t_peak = 0.0;          // peak of the probe-induced field in the echo window
  double mean_inversion = 0.0;  // weighted background w at the window start
};

// Emission over [begin, end], scoring energy in the echo window.
EchoEvaluation evaluate_window(const Prepared& prep, const Timing& timing, double optical_depth,
                               const propagation::EmissionWindow& window, const propagation::EchoWindow& echo);
// Emission over the standard echo window t_E +- 2 tau_probe.
EchoEvaluation evaluate_echo(const Prepared& prep, const Timing& timing, double optical_depth);
double efficiency(const Prepared& prep, double optical_depth);

std::vector<propagation::SweepPoint> depth_sweep(const Prepared& prep, const std::vector<double>& depths);

// Optical depth on the rising side of the efficiency curve giving `target`.
double tune_optical_depth(const Prepared& prep, double target);

struct ExperimentResult {
  BuiltSequence built;
  ensemble::EnsembleTrace trace;
  propagation::PropagationResult propagation;
  double eta = 0.0;
  double t_echo_predicted = 0.0;
  double t_echo_measured = 0.0;    // peak of the emitted echo field
  double t_echo_trace = 0.0;       // peak of the single-layer ensemble signal
  double primary_energy = 0.0;     // emitted energy around the primary-echo time
  double secondary_energy = 0.0;
  double suppression_ratio = 0.0;  // primary / secondary
  double snr = 0.0;
};

struct ExperimentOptions {
  bool with_trace = true;
};

ExperimentResult run_experiment(const ProtocolRun& run, const ExperimentOptions& options = {});

struct StoragePoint {
  double t_echo;
  double efficiency;
};

struct StorageCurve {
  std::vector<StoragePoint> points;
  analysis::DecayModel fit;
};

StorageCurve efficiency_vs_storage(const ProtocolRun& run, const std::vector<double>& echo_times);
// Same, reusing prepared per-atom data.
StorageCurve efficiency_vs_storage(const Prepared& prep, const std::vector<double>& echo_times);

}  // namespace rappi::protocol
