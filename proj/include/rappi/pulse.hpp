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
#include <vector>

namespace rappi::pulse {

using cplx = std::complex<double>;

enum class Kind { probe_square, probe_gaussian, rap_sinc_chirp, multitone_composite };

const char* kind_name(Kind kind);
bool is_probe(Kind kind);
bool is_rap(Kind kind);

// One chirped tone. Its swept span is chirp_rate * duration (full width,
// centered on carrier_detuning).
struct Tone {
  double carrier_detuning = 0.0;  // rad/s
  double peak_rabi = 0.0;         // rad/s
  double chirp_rate = 0.0;        // rad/s^2
};

struct PulseSpec {
  Kind kind = Kind::probe_square;
  double center_time = 0.0;       // s
  double duration = 0.0;          // s
  double peak_rabi = 0.0;         // rad/s
  double carrier_detuning = 0.0;  // rad/s
  double chirp_rate = 0.0;        // rad/s^2
  std::vector<Tone> tones;        // multitone only

  double start() const { return center_time - 0.5 * duration; }
  double end() const { return center_time + 0.5 * duration; }
  // Tones making up the pulse; a single tone for every kind but multitone.
  std::vector<Tone> tone_list() const;
  // Sum of constituent peak Rabi frequencies.
  double total_rabi() const;
  PulseSpec shifted(double dt) const;
};

PulseSpec probe_square(double center_time, double duration, double peak_rabi, double carrier = 0.0);
PulseSpec probe_gaussian(double center_time, double duration, double peak_rabi, double carrier = 0.0);
// Probe of the given kind whose pulse area (integral of the Rabi frequency)
// equals `area` rad.
PulseSpec probe_with_area(Kind kind, double center_time, double duration, double area, double carrier = 0.0);
PulseSpec rap(double center_time, double duration, double peak_rabi, double chirp_rate, double carrier = 0.0);
PulseSpec multitone(double center_time, double duration, std::vector<Tone> tones);

// Full swept width in rad/s.
inline double tone_span(const Tone& tone, double duration) { return std::abs(tone.chirp_rate) * duration; }

// Gaussian probes use sigma = duration / 8 and are truncated at +-duration/2.
inline constexpr double gaussian_sigma_fraction = 1.0 / 8.0;

struct TimeGrid {
  double t_start = 0.0;
  double dt = 0.0;
  std::size_t n = 0;
  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }
  double t_end() const { return time(n == 0 ? 0 : n - 1); }
};

struct SampledEnvelope {
  double t_start = 0.0;
  double dt = 0.0;
  std::vector<cplx> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }
  double t_end() const { return time(samples.empty() ? 0 : samples.size() - 1); }
  double max_abs() const;
};

struct SynthesisOptions {
  // Rotating-frame offset: the envelope is multiplied by exp(-i*frame*t),
  // which is how a simulation centred on a spectral cell sees the field.
  double frame = 0.0;
  // Permit spectrally overlapping tones (used to study cross-talk).
  bool allow_overlap = false;
};

// Highest rotating-frame frequency in Hz that the pulse contains.
double max_frequency_hz(const PulseSpec& spec, double frame = 0.0);

// Default envelope sample spacing. probe_duration and max_detuning may be 0
// when not applicable. Also bounds the rotation per integrator step so the
// Bloch norm drift stays below 1e-6 over a pulse.
double default_dt(const PulseSpec& spec, double probe_duration = 0.0, double max_detuning = 0.0,
                  double frame = 0.0);

// Grid with an odd sample count whose ends coincide with the pulse edges and
// whose spacing does not exceed dt_max.
TimeGrid fit_grid(const PulseSpec& spec, double dt_max);

void validate(const PulseSpec& spec, bool allow_overlap = false);

SampledEnvelope synthesize(const PulseSpec& spec, const TimeGrid& grid, const SynthesisOptions& options = {});
SampledEnvelope synthesize(const PulseSpec& spec, double dt_max, const SynthesisOptions& options = {});

// Continuous Fourier transform sum_k s_k exp(-i*omega*t_k) dt with trapezoid
// end weights. A component exp(+i*delta*t) in the envelope drives atoms at
// detuning +delta.
cplx fourier(const SampledEnvelope& env, double omega);

struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> power;
};

struct SpectrumOptions {
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;  // equal bounds select an automatic range
  std::size_t points = 4001;
};

Spectrum spectrum(const SampledEnvelope& env, const SpectrumOptions& options = {});
// Full width at half maximum in Hz, by linear interpolation of the crossings
// around the global maximum.
double fwhm_hz(const Spectrum& s);

struct Thresholds {
  double adiabaticity = 10.0;
  double bandwidth = 3.0;
};

struct Conditions {
  double adiabaticity_ratio = 0.0;
  double bandwidth_ratio = 0.0;
  double span_hz = 0.0;
  double probe_fwhm_hz = 0.0;
  bool adiabatic = false;
  bool bandwidth = false;
  bool pass() const { return adiabatic && bandwidth; }
};

Conditions check_conditions(const PulseSpec& rap, const PulseSpec& probe, const Thresholds& thresholds = {});

void write_waveform_csv(std::ostream& out, const SampledEnvelope& env);
void write_spectrum_csv(std::ostream& out, const Spectrum& s);

}  // namespace rappi::pulse
