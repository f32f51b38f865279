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
#include <string>
#include <vector>

namespace rappi::analysis {

using cplx = std::complex<double>;

enum class DecayForm {
  echo_intensity,  // I0 * exp(-4t/T), two-pulse echo intensity
  memory,          // eta_R * exp(-2t/T), memory efficiency
  recovery,        // 1 - a * exp(-t/T), population recovery
};

const char* form_name(DecayForm form);
DecayForm parse_form(const std::string& name);

struct DecayModel {
  DecayForm form = DecayForm::memory;
  double amplitude = 0.0;  // I0, eta_R or a
  double time_constant = 0.0;
  double amplitude_stderr = 0.0;
  double time_constant_stderr = 0.0;
  double residual = 0.0;  // root of the summed squared residuals
  std::size_t points = 0;

  double evaluate(double t) const;
};

// Least squares with the amplitude in closed form and a golden-section search
// over the time constant.
DecayModel fit_decay(const std::vector<double>& t, const std::vector<double>& y, DecayForm form);

struct EfficiencyWindows {
  double echo_begin = 0.0;
  double echo_end = 0.0;
  double noise_begin = 0.0;
  double noise_end = 0.0;
};

// (echo-window energy - noise floor * echo-window length) / reference energy,
// clamped at zero. The noise floor is the median power in the noise window.
double extract_efficiency(const std::vector<double>& t, const std::vector<cplx>& field, double reference_energy,
                          const EfficiencyWindows& windows);
// Reference given as the off-resonant transmitted probe trace.
double extract_efficiency(const std::vector<double>& t, const std::vector<cplx>& field,
                          const std::vector<double>& t_ref, const std::vector<cplx>& reference,
                          const EfficiencyWindows& windows);

double trace_energy(const std::vector<double>& t, const std::vector<cplx>& field, double begin, double end);

}  // namespace rappi::analysis
