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

#include <cmath>
#include <algorithm>
#include <complex>
#include <cstddef>

#include "rappi/pulse.hpp"

namespace rappi::oracle {

// Linear chirp with phase R t^2 / 2 sweeping out to +-40 Rabi frequencies.
// The amplitude is constant through the crossing and ramps in and out with a
// sin^2 over the outer quarter of each side; a hard switch-on adds a
// finite-sweep ripple of order 1% at weak coupling.
inline pulse::SampledEnvelope constant_chirp(double rabi, double rate) {
  const double half = 40.0 * rabi / rate;
  const double dt = 0.02 / (rate * half);
  const auto n = static_cast<std::size_t>(2.0 * half / dt) | 1u;
  pulse::SampledEnvelope env;
  env.t_start = -half;
  env.dt = 2.0 * half / static_cast<double>(n - 1);
  env.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = env.time(k);
    const double edge = (std::abs(t) - 0.75 * half) / (0.25 * half);
    const double ramp = edge <= 0.0 ? 1.0 : std::pow(std::cos(0.5 * std::acos(-1.0) * std::min(edge, 1.0)), 2);
    env.samples[k] = std::polar(rabi * ramp, 0.5 * rate * t * t);
  }
  return env;
}

// Transition probability of a linear sweep through resonance.
inline double landau_zener(double rabi_squared_over_rate) {
  return 1.0 - std::exp(-std::acos(-1.0) * rabi_squared_over_rate / 2.0);
}

}  // namespace rappi::oracle
