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

#include "rappi/pulse.hpp"

#include <algorithm>
#include <cmath>

#include "rappi/error.hpp"
#include "rappi/io.hpp"
#include "rappi/units.hpp"

namespace rappi::pulse {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("pulse", code, message); }

double sinc_n(double x) {
  if (x == 0.0) return 1.0;
  const double px = units::pi * x;
  return std::sin(px) / px;
}

// Amplitude of one tone at offset x = t - t0; zero outside the pulse.
double amplitude(Kind kind, double peak, double duration, double x, double edge_tol) {
  const double half = 0.5 * duration;
  if (std::abs(x) > half + edge_tol) return 0.0;
  switch (kind) {
    case Kind::probe_square:
      return peak;
    case Kind::probe_gaussian: {
      const double sigma = gaussian_sigma_fraction * duration;
      return peak * std::exp(-0.5 * x * x / (sigma * sigma));
    }
    case Kind::rap_sinc_chirp:
    case Kind::multitone_composite:
      return peak * sinc_n(2.0 * std::clamp(x, -half, half) / duration);
  }
  return 0.0;
}

}  // namespace

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::probe_square: return "probe-square";
    case Kind::probe_gaussian: return "probe-gaussian";
    case Kind::rap_sinc_chirp: return "rap-sinc-chirp";
    case Kind::multitone_composite: return "multitone-composite";
  }
  return "unknown";
}

bool is_probe(Kind kind) { return kind == Kind::probe_square || kind == Kind::probe_gaussian; }
bool is_rap(Kind kind) { return kind == Kind::rap_sinc_chirp || kind == Kind::multitone_composite; }

std::vector<Tone> PulseSpec::tone_list() const {
  if (kind == Kind::multitone_composite) return tones;
  return {Tone{carrier_detuning, peak_rabi, chirp_rate}};
}

double PulseSpec::total_rabi() const {
  double sum = 0.0;
  for (const auto& t : tone_list()) sum += t.peak_rabi;
  return sum;
}

PulseSpec PulseSpec::shifted(double dt) const {
  PulseSpec s = *this;
  s.center_time += dt;
  return s;
}

PulseSpec probe_square(double center_time, double duration, double peak_rabi, double carrier) {
  return PulseSpec{Kind::probe_square, center_time, duration, peak_rabi, carrier, 0.0, {}};
}

PulseSpec probe_gaussian(double center_time, double duration, double peak_rabi, double carrier) {
  return PulseSpec{Kind::probe_gaussian, center_time, duration, peak_rabi, carrier, 0.0, {}};
}

PulseSpec rap(double center_time, double duration, double peak_rabi, double chirp_rate, double carrier) {
  return PulseSpec{Kind::rap_sinc_chirp, center_time, duration, peak_rabi, carrier, chirp_rate, {}};
}

PulseSpec probe_with_area(Kind kind, double center_time, double duration, double area, double carrier) {
  if (kind == Kind::probe_gaussian) {
    // Truncated at +-4 sigma.
    const double sigma = duration / 8.0;
    const double unit_area = sigma * std::sqrt(units::two_pi) * std::erf(4.0 / std::sqrt(2.0));
    return probe_gaussian(center_time, duration, area / unit_area, carrier);
  }
  if (kind != Kind::probe_square) throw Error("pulse", "invalid-spec", "probe_with_area needs a probe kind");
  return probe_square(center_time, duration, area / duration, carrier);
}

PulseSpec multitone(double center_time, double duration, std::vector<Tone> tones) {
  PulseSpec s{Kind::multitone_composite, center_time, duration, 0.0, 0.0, 0.0, std::move(tones)};
  return s;
}

double SampledEnvelope::max_abs() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, std::abs(s));
  return m;
}

double max_frequency_hz(const PulseSpec& spec, double frame) {
  double f = 0.0;
  for (const auto& t : spec.tone_list()) {
    f = std::max(f, (std::abs(t.carrier_detuning - frame) + 0.5 * tone_span(t, spec.duration)) / units::two_pi);
  }
  return f;
}

double default_dt(const PulseSpec& spec, double probe_duration, double max_detuning, double frame) {
  // The RK4 step is two sample spacings; these factors keep the rotation per
  // step near 0.04 rad for the drive and 0.07 rad for the free precession.
  double dt = spec.duration / 40.0;
  if (probe_duration > 0.0) dt = std::min(dt, probe_duration / 40.0);
  const double f = max_frequency_hz(spec, frame);
  if (f > 0.0) dt = std::min(dt, 1.0 / (40.0 * f));
  const double rabi = spec.total_rabi();
  if (rabi > 0.0) dt = std::min(dt, 0.02 / rabi);
  if (max_detuning > 0.0) dt = std::min(dt, 0.035 / max_detuning);
  return dt;
}

TimeGrid fit_grid(const PulseSpec& spec, double dt_max) {
  if (!(spec.duration > 0.0)) fail("invalid-spec", "pulse duration must be positive");
  if (!(dt_max > 0.0)) fail("invalid-grid", "grid spacing must be positive");
  const auto half_steps = static_cast<std::size_t>(std::ceil(0.5 * spec.duration / dt_max - 1e-9));
  const std::size_t intervals = 2 * std::max<std::size_t>(half_steps, 1);
  return TimeGrid{spec.start(), spec.duration / static_cast<double>(intervals), intervals + 1};
}

void validate(const PulseSpec& spec, bool allow_overlap) {
  if (!(spec.duration > 0.0) || !std::isfinite(spec.duration)) fail("invalid-spec", "pulse duration must be positive");
  const auto tones = spec.tone_list();
  if (tones.empty()) fail("invalid-spec", "multitone pulse has no tones");
  for (const auto& t : tones) {
    if (!(t.peak_rabi >= 0.0) || !std::isfinite(t.peak_rabi)) fail("invalid-spec", "peak Rabi frequency must be >= 0");
    if (is_probe(spec.kind) && t.chirp_rate != 0.0) fail("invalid-spec", "probe pulses carry no chirp");
  }
  if (spec.kind != Kind::multitone_composite || allow_overlap) return;
  auto sorted = tones;
  std::sort(sorted.begin(), sorted.end(),
            [](const Tone& a, const Tone& b) { return a.carrier_detuning < b.carrier_detuning; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double gap = sorted[k].carrier_detuning - sorted[k - 1].carrier_detuning;
    const double need = 0.5 * (tone_span(sorted[k], spec.duration) + tone_span(sorted[k - 1], spec.duration));
    if (gap < need * (1.0 - 1e-9)) {
      fail("overlapping-tones", "tones at " + io::format_double(units::to_mhz(sorted[k - 1].carrier_detuning)) +
                                    " MHz and " + io::format_double(units::to_mhz(sorted[k].carrier_detuning)) +
                                    " MHz overlap spectrally");
    }
  }
}

SampledEnvelope synthesize(const PulseSpec& spec, const TimeGrid& grid, const SynthesisOptions& options) {
  validate(spec, options.allow_overlap);
  if (grid.n < 2 || !(grid.dt > 0.0)) fail("invalid-grid", "grid needs at least two samples and dt > 0");
  const double tol = 1e-9 * grid.dt;
  if (grid.t_start > spec.start() + tol || grid.t_end() < spec.end() - tol) {
    fail("grid-too-short", "grid does not cover the pulse support");
  }
  const double f_max = max_frequency_hz(spec, options.frame);
  if (f_max > 0.0 && grid.dt > (1.0 + 1e-9) / (20.0 * f_max)) {
    fail("grid-too-coarse", "dt = " + io::format_double(grid.dt) + " s exceeds 1/(20 f_max) = " +
                                io::format_double(1.0 / (20.0 * f_max)) + " s");
  }

  // Offsets from the pulse centre are formed as integer multiples of dt when
  // the centre lies on the grid, so a time shift by whole samples reproduces
  // the samples bit for bit.
  const double offset = grid.t_start - spec.center_time;
  const double steps = std::round(offset / grid.dt);
  const bool on_lattice = std::abs(offset - steps * grid.dt) < 1e-6 * grid.dt;
  const auto x_of = [&](std::size_t k) {
    return on_lattice ? (static_cast<double>(k) + steps) * grid.dt : offset + static_cast<double>(k) * grid.dt;
  };

  SampledEnvelope env{grid.t_start, grid.dt, std::vector<cplx>(grid.n, cplx(0.0, 0.0))};
  const auto tones = spec.tone_list();
  const Kind shape = spec.kind;
  for (const auto& tone : tones) {
    const double carrier = tone.carrier_detuning - options.frame;
    const double frame_phase = -options.frame * spec.center_time;
    for (std::size_t k = 0; k < grid.n; ++k) {
      const double x = x_of(k);
      const double a = amplitude(shape, tone.peak_rabi, spec.duration, x, tol);
      if (a == 0.0) continue;
      const double phase = carrier * x + 0.5 * tone.chirp_rate * x * x + frame_phase;
      env.samples[k] += std::polar(a, phase);
    }
  }
  return env;
}

SampledEnvelope synthesize(const PulseSpec& spec, double dt_max, const SynthesisOptions& options) {
  return synthesize(spec, fit_grid(spec, dt_max), options);
}

cplx fourier(const SampledEnvelope& env, double omega) {
  const std::size_t n = env.size();
  if (n == 0) return {0.0, 0.0};
  const cplx step = std::polar(1.0, -omega * env.dt);
  cplx phasor = std::polar(1.0, -omega * env.t_start);
  cplx sum(0.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    sum += w * env.samples[k] * phasor;
    phasor *= step;
    // Renormalise occasionally so the recurrence does not drift in modulus.
    if ((k & 255u) == 255u) phasor /= std::abs(phasor);
  }
  return sum * env.dt;
}

Spectrum spectrum(const SampledEnvelope& env, const SpectrumOptions& options) {
  if (env.empty()) fail("empty-envelope", "cannot take the spectrum of an empty envelope");
  double f_lo = options.f_min_hz;
  double f_hi = options.f_max_hz;
  if (f_lo == f_hi) {
    const double peak = env.max_abs();
    double f_inst = 0.0;
    for (std::size_t k = 0; k + 1 < env.size(); ++k) {
      if (std::abs(env.samples[k]) > 1e-6 * peak && std::abs(env.samples[k + 1]) > 1e-6 * peak) {
        const double f = std::arg(env.samples[k + 1] * std::conj(env.samples[k])) / (units::two_pi * env.dt);
        f_inst = std::max(f_inst, std::abs(f));
      }
    }
    const double span = std::max(env.t_end() - env.t_start, env.dt);
    const double f_lim = std::min(0.5 / env.dt, f_inst + 20.0 / span);
    f_lo = -f_lim;
    f_hi = f_lim;
  }
  const std::size_t points = std::max<std::size_t>(options.points, 2);
  Spectrum s;
  s.freq_hz.resize(points);
  s.power.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double f = f_lo + (f_hi - f_lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    s.freq_hz[k] = f;
    s.power[k] = std::norm(fourier(env, units::two_pi * f));
  }
  return s;
}

double fwhm_hz(const Spectrum& s) {
  if (s.power.empty()) fail("empty-spectrum", "spectrum has no points");
  const auto peak_it = std::max_element(s.power.begin(), s.power.end());
  const double half = 0.5 * *peak_it;
  if (!(half > 0.0)) fail("fwhm-undefined", "spectrum is identically zero");
  const auto peak = static_cast<std::size_t>(peak_it - s.power.begin());
  std::size_t lo = peak;
  while (lo > 0 && s.power[lo - 1] >= half) --lo;
  std::size_t hi = peak;
  while (hi + 1 < s.power.size() && s.power[hi + 1] >= half) ++hi;
  if (lo == 0 || hi + 1 == s.power.size()) fail("fwhm-undefined", "half-maximum lies outside the frequency range");
  const auto cross = [&](std::size_t inside, std::size_t outside) {
    const double p0 = s.power[inside], p1 = s.power[outside];
    const double frac = (p0 - half) / (p0 - p1);
    return s.freq_hz[inside] + frac * (s.freq_hz[outside] - s.freq_hz[inside]);
  };
  return cross(hi, hi + 1) - cross(lo, lo - 1);
}

Conditions check_conditions(const PulseSpec& rap_spec, const PulseSpec& probe_spec, const Thresholds& thresholds) {
  if (!is_rap(rap_spec.kind)) fail("bad-kind", "adiabaticity check needs a RAP pulse");
  if (!is_probe(probe_spec.kind)) fail("bad-kind", "bandwidth check needs a probe pulse");
  validate(rap_spec, true);
  validate(probe_spec);
  Conditions c;
  c.adiabaticity_ratio = units::infinity;
  c.span_hz = units::infinity;
  for (const auto& t : rap_spec.tone_list()) {
    if (t.chirp_rate != 0.0) {
      c.adiabaticity_ratio = std::min(c.adiabaticity_ratio, t.peak_rabi * t.peak_rabi / std::abs(t.chirp_rate));
    }
    c.span_hz = std::min(c.span_hz, units::to_hz(tone_span(t, rap_spec.duration)));
  }
  const auto probe_env = synthesize(probe_spec, default_dt(probe_spec, probe_spec.duration));
  const double reach = 12.0 / probe_spec.duration;
  c.probe_fwhm_hz = fwhm_hz(spectrum(probe_env, {-reach, reach, 8001}));
  c.bandwidth_ratio = c.span_hz / c.probe_fwhm_hz;
  c.adiabatic = c.adiabaticity_ratio >= thresholds.adiabaticity;
  c.bandwidth = c.bandwidth_ratio >= thresholds.bandwidth;
  return c;
}

void write_waveform_csv(std::ostream& out, const SampledEnvelope& env) {
  io::CsvWriter csv(out, {"t_s", "re_rad_per_s", "im_rad_per_s"});
  for (std::size_t k = 0; k < env.size(); ++k) csv.row({env.time(k), env.samples[k].real(), env.samples[k].imag()});
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  io::CsvWriter csv(out, {"f_hz", "power"});
  for (std::size_t k = 0; k < s.freq_hz.size(); ++k) csv.row({s.freq_hz[k], s.power[k]});
}

}  // namespace rappi::pulse
