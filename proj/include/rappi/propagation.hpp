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
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "rappi/bloch.hpp"
#include "rappi/ensemble.hpp"
#include "rappi/pulse.hpp"

// Forward propagation through M slices of a medium with peak optical depth
// alpha*L, positions measured in units of L.
//
//   dE/dz = kappa(z) * E + i * (alpha*L) * (spacing / 2pi) * sum_j g_j c_j(t)
//
// where g_j is the profile weight relative to its peak and kappa is the
// probe-spectrum-weighted gain: (alpha*L/2) * sum_j g_j w_j p_j, with p_j the
// normalised probe power at detuning j. A ground-state uniform medium gives
// kappa = -alpha*L/2 (Beer's law) and the weak-signal echo efficiency
// approaches (alpha*L)^2 for small alpha*L.
namespace rappi::propagation {

using cplx = std::complex<double>;

struct MediumSpec {
  double optical_depth = 0.0;  // alpha*L at the line centre
  std::size_t slices = 32;
  double length = 0.012;       // m, informational only
  ensemble::EnsembleSpec ensemble;

  void validate() const;
};

// Largest tip angle (pulse area, rad) accepted as a linear-response probe.
inline constexpr double max_probe_tip = 0.05;
// Largest field gain exponent accepted before refusing (inverted media).
inline constexpr double max_gain_exponent = 25.0;

double tip_angle(const pulse::SampledEnvelope& probe);
double envelope_energy(const pulse::SampledEnvelope& env);

// Normalised probe power at each atom's detuning (sums to one).
std::vector<double> probe_spectral_weights(const ensemble::AtomGrid& grid, const pulse::SampledEnvelope& probe,
                                           double frame = 0.0);

struct AbsorptionResult {
  std::vector<double> z;                 // slice mid-points, units of L
  std::vector<double> slice_amplitude;   // field amplitude at each slice mid-point relative to the input
  std::vector<double> face_amplitude;    // amplitude after each slice (M entries)
  double transmitted_intensity = 1.0;
  double tip_angle = 0.0;
  std::vector<double> spectral_weight;   // p_j
  pulse::SampledEnvelope transmitted;
};

// w_profile holds each atom's inversion when the probe arrives; omitted
// means the ground state everywhere.
AbsorptionResult absorb_probe(const MediumSpec& medium, const ensemble::AtomGrid& grid,
                              const pulse::SampledEnvelope& probe, const std::vector<double>* w_profile = nullptr,
                              double frame = 0.0);

// Per-atom states at time t_ref in linear response: the physical state in
// slice m is background + slice_amplitude[m] * signal.
struct StoredCoherence {
  double t_ref = 0.0;
  std::vector<bloch::AtomState> signal;
  std::vector<bloch::AtomState> background;
};

struct EmissionWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
};

struct PropagationResult {
  std::vector<double> t;
  std::vector<cplx> e_out;   // total output field
  std::vector<cplx> e_echo;  // probe-induced part
  std::vector<cplx> fid;     // part emitted without any probe
  double efficiency = 0.0;   // echo energy in the echo window / input energy
  double echo_energy = 0.0;
  double fid_energy = 0.0;
  double snr = 0.0;          // echo energy / FID energy in the echo window
  double input_energy = 0.0;
  double echo_gain = 0.0;    // kappa summed over the medium when the echo leaves
};

struct EchoWindow {
  double center = 0.0;
  double half_width = 0.0;
};

PropagationResult emit_echo(const MediumSpec& medium, const ensemble::AtomGrid& grid,
                            const AbsorptionResult& absorption, const StoredCoherence& stored,
                            const EmissionWindow& window, const EchoWindow& echo, double input_energy,
                            double frame = 0.0);

struct FidResult {
  std::vector<double> t;
  std::vector<cplx> fid;
  double energy_in_window = 0.0;
  double snr = 0.0;
};

// Emission of the residual spectator coherence with no probe present.
FidResult fid_noise(const MediumSpec& medium, const ensemble::AtomGrid& grid, const AbsorptionResult& absorption,
                    const std::vector<bloch::AtomState>& background, double t_ref, const EmissionWindow& window,
                    const EchoWindow& echo, double echo_energy, double frame = 0.0);

struct PhotonBudget {
  double chain_efficiency = 1.0;
  double expected = 0.0;
  std::vector<std::uint64_t> draws;  // optional Poisson samples
};

PhotonBudget photon_budget(double photons_at_crystal, const std::vector<double>& chain,
                           std::size_t samples = 0, std::uint64_t seed = 0);

void write_field_csv(std::ostream& out, const std::vector<double>& t, const std::vector<cplx>& field);

struct SweepPoint {
  double optical_depth;
  double efficiency;
};
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& sweep);

}  // namespace rappi::propagation
