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

#include "rappi/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rappi/error.hpp"
#include "rappi/io.hpp"

namespace rappi::propagation {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("propagation", code, message); }

std::vector<double> relative_density(const ensemble::AtomGrid& grid) {
  double peak = 0.0;
  for (const auto& a : grid.atoms) peak = std::max(peak, a.weight);
  std::vector<double> g(grid.atoms.size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = grid.atoms[j].weight / peak;
  return g;
}

// Gain exponent per unit length for a medium with inversion w_j.
double slice_gain(const MediumSpec& medium, const std::vector<double>& g, const std::vector<double>& p,
                  const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * w[j] * p[j];
  return 0.5 * medium.optical_depth * s;
}

// (exp(k*dz) - 1) / k, continuous at k = 0.
double growth_integral(double k, double dz) {
  const double x = k * dz;
  if (std::abs(x) < 1e-8) return dz * (1.0 + 0.5 * x);
  return std::expm1(x) / k;
}

std::vector<double> time_grid(const EmissionWindow& window) {
  if (!(window.dt > 0.0) || !(window.t_end > window.t_begin)) fail("invalid-window", "emission window is empty");
  // Shrink the step so the grid lands exactly on both ends.
  const double span = window.t_end - window.t_begin;
  const auto steps = static_cast<std::size_t>(std::ceil(span / window.dt - 1e-9));
  const double dt = span / static_cast<double>(steps);
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = window.t_begin + static_cast<double>(k) * dt;
  t.back() = window.t_end;
  return t;
}

// sum_j g_j * c_j(t) on the window grid, each c_j evolving freely from t_ref.
std::vector<cplx> polarization(const ensemble::AtomGrid& grid, const std::vector<double>& g,
                               const std::vector<bloch::AtomState>& states, double t_ref,
                               const std::vector<double>& t, double frame) {
  std::vector<cplx> p(t.size(), cplx(0.0, 0.0));
  if (t.empty()) return p;
  const double dt = t.size() > 1 ? t[1] - t[0] : 0.0;
  for (std::size_t j = 0; j < grid.atoms.size(); ++j) {
    const auto& a = grid.atoms[j];
    const cplx rate(-a.gamma2(), a.detuning - frame);
    const double t0 = t.front() - t_ref;
    cplx c = states[j].coherence() * std::exp(rate * t0) * g[j];
    const cplx step = std::exp(rate * dt);
    for (std::size_t k = 0; k < t.size(); ++k) {
      p[k] += c;
      c *= step;
    }
  }
  return p;
}

double energy(const std::vector<double>& t, const std::vector<cplx>& f, double lo, double hi) {
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (t[k] < lo - 1e-15 || t[k + 1] > hi + 1e-15) continue;
    e += 0.5 * (std::norm(f[k]) + std::norm(f[k + 1])) * (t[k + 1] - t[k]);
  }
  return e;
}

}  // namespace

void MediumSpec::validate() const {
  if (slices < 8) fail("invalid-medium", "at least 8 slices are required, got " + std::to_string(slices));
  if (!(optical_depth >= 0.0) || !std::isfinite(optical_depth)) fail("invalid-medium", "optical depth must be >= 0");
}

double tip_angle(const pulse::SampledEnvelope& probe) {
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < probe.size(); ++k) {
    area += 0.5 * (std::abs(probe.samples[k]) + std::abs(probe.samples[k + 1])) * probe.dt;
  }
  return area;
}

double envelope_energy(const pulse::SampledEnvelope& env) {
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < env.size(); ++k) {
    e += 0.5 * (std::norm(env.samples[k]) + std::norm(env.samples[k + 1])) * env.dt;
  }
  return e;
}

std::vector<double> probe_spectral_weights(const ensemble::AtomGrid& grid, const pulse::SampledEnvelope& probe,
                                           double frame) {
  std::vector<double> p(grid.atoms.size());
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::norm(pulse::fourier(probe, grid.atoms[j].detuning - frame));
    total += p[j];
  }
  // A zero probe stores nothing; weight every atom equally so the gain stays defined.
  if (!(total > 0.0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

AbsorptionResult absorb_probe(const MediumSpec& medium, const ensemble::AtomGrid& grid,
                              const pulse::SampledEnvelope& probe, const std::vector<double>* w_profile,
                              double frame) {
  medium.validate();
  if (probe.empty()) fail("missing-probe", "probe envelope is empty");
  AbsorptionResult r;
  r.tip_angle = tip_angle(probe);
  if (r.tip_angle > max_probe_tip) {
    fail("strong-probe", "probe tip angle " + io::format_double(r.tip_angle) + " rad exceeds the linear-response limit " +
                             io::format_double(max_probe_tip) + " rad");
  }
  const std::vector<double> g = relative_density(grid);
  r.spectral_weight = probe_spectral_weights(grid, probe, frame);
  std::vector<double> w(grid.atoms.size(), -1.0);
  if (w_profile) {
    if (w_profile->size() != w.size()) fail("shape-mismatch", "inversion profile size does not match the grid");
    w = *w_profile;
  }
  const double kappa = slice_gain(medium, g, r.spectral_weight, w);
  const double dz = 1.0 / static_cast<double>(medium.slices);
  double log_amp = 0.0;
  for (std::size_t m = 0; m < medium.slices; ++m) {
    r.z.push_back((static_cast<double>(m) + 0.5) * dz);
    r.slice_amplitude.push_back(std::exp(log_amp + 0.5 * kappa * dz));
    log_amp += kappa * dz;
    r.face_amplitude.push_back(std::exp(log_amp));
  }
  r.transmitted_intensity = std::exp(2.0 * log_amp);
  r.transmitted = probe;
  const double a = std::exp(log_amp);
  for (auto& s : r.transmitted.samples) s *= a;
  return r;
}

PropagationResult emit_echo(const MediumSpec& medium, const ensemble::AtomGrid& grid,
                            const AbsorptionResult& absorption, const StoredCoherence& stored,
                            const EmissionWindow& window, const EchoWindow& echo, double input_energy,
                            double frame) {
  medium.validate();
  const std::size_t n = grid.atoms.size();
  if (stored.signal.size() != n || stored.background.size() != n) {
    fail("missing-coherence", "stored coherence does not cover every atom");
  }
  if (absorption.slice_amplitude.size() != medium.slices || absorption.spectral_weight.size() != n) {
    fail("missing-coherence", "absorption result does not match the medium");
  }
  const std::vector<double> g = relative_density(grid);
  // The echo sees the medium as left by the control pulses (background
  // inversion); the probe's own change to w is second order.
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = stored.background[j].w;
  const double kappa = slice_gain(medium, g, absorption.spectral_weight, w);
  if (kappa > 0.0 && kappa > max_gain_exponent) {
    fail("gain-overflow", "echo gain exponent " + io::format_double(kappa) + " exceeds " +
                              io::format_double(max_gain_exponent));
  }

  PropagationResult r;
  r.t = time_grid(window);
  r.input_energy = input_energy;
  r.echo_gain = kappa;
  const auto p_sig = polarization(grid, g, stored.signal, stored.t_ref, r.t, frame);
  const auto p_bg = polarization(grid, g, stored.background, stored.t_ref, r.t, frame);
  const cplx coupling(0.0, medium.optical_depth * grid.spacing / units::two_pi);
  const double dz = 1.0 / static_cast<double>(medium.slices);
  const double carry = std::exp(kappa * dz);
  const double grow = growth_integral(kappa, dz);

  r.e_echo.assign(r.t.size(), cplx(0.0, 0.0));
  r.fid.assign(r.t.size(), cplx(0.0, 0.0));
  for (std::size_t m = 0; m < medium.slices; ++m) {
    const double a = absorption.slice_amplitude[m];
    for (std::size_t k = 0; k < r.t.size(); ++k) {
      r.e_echo[k] = carry * r.e_echo[k] + grow * coupling * (a * p_sig[k]);
      r.fid[k] = carry * r.fid[k] + grow * coupling * p_bg[k];
    }
  }
  r.e_out.resize(r.t.size());
  for (std::size_t k = 0; k < r.t.size(); ++k) r.e_out[k] = r.e_echo[k] + r.fid[k];

  const double lo = echo.center - echo.half_width, hi = echo.center + echo.half_width;
  if (lo < r.t.front() - 1e-12 || hi > r.t.back() + 1e-12) fail("invalid-window", "echo window exceeds the emission window");
  r.echo_energy = energy(r.t, r.e_echo, lo, hi);
  r.fid_energy = energy(r.t, r.fid, lo, hi);
  r.efficiency = input_energy > 0.0 ? r.echo_energy / input_energy : 0.0;
  r.snr = r.fid_energy > 0.0 ? r.echo_energy / r.fid_energy : units::infinity;
  return r;
}

FidResult fid_noise(const MediumSpec& medium, const ensemble::AtomGrid& grid, const AbsorptionResult& absorption,
                    const std::vector<bloch::AtomState>& background, double t_ref, const EmissionWindow& window,
                    const EchoWindow& echo, double echo_energy, double frame) {
  if (!medium.ensemble.includes_spectators) {
    fail("no-spectators", "FID needs spectator atoms across the RAP span; enable includes_spectators");
  }
  StoredCoherence stored{t_ref, std::vector<bloch::AtomState>(background.size(), bloch::AtomState{0.0, 0.0, 0.0}),
                         background};
  const auto r = emit_echo(medium, grid, absorption, stored, window, echo, 1.0, frame);
  FidResult f;
  f.t = r.t;
  f.fid = r.fid;
  f.energy_in_window = r.fid_energy;
  f.snr = r.fid_energy > 0.0 ? echo_energy / r.fid_energy : units::infinity;
  return f;
}

PhotonBudget photon_budget(double photons_at_crystal, const std::vector<double>& chain, std::size_t samples,
                           std::uint64_t seed) {
  if (!(photons_at_crystal >= 0.0)) fail("invalid-budget", "photon number must be non-negative");
  PhotonBudget b;
  for (double e : chain) {
    if (!(e > 0.0 && e <= 1.0)) fail("invalid-budget", "chain efficiencies must lie in (0, 1]");
    b.chain_efficiency *= e;
  }
  b.expected = photons_at_crystal * b.chain_efficiency;
  if (samples > 0) {
    std::mt19937_64 rng(seed);
    std::poisson_distribution<std::uint64_t> dist(b.expected);
    b.draws.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) b.draws.push_back(b.expected > 0.0 ? dist(rng) : 0);
  }
  return b;
}

void write_field_csv(std::ostream& out, const std::vector<double>& t, const std::vector<cplx>& field) {
  io::CsvWriter csv(out, {"t_s", "re", "im", "abs2"});
  for (std::size_t k = 0; k < t.size(); ++k) csv.row({t[k], field[k].real(), field[k].imag(), std::norm(field[k])});
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& sweep) {
  io::CsvWriter csv(out, {"alpha_L", "eta"});
  for (const auto& p : sweep) csv.row({p.optical_depth, p.efficiency});
}

}  // namespace rappi::propagation
