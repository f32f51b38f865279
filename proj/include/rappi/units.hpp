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

#include <limits>
#include <numbers>

// Internal units are SI: seconds, and angular frequencies in rad/s. Helpers
// convert from the lab units used in configs and reports.
namespace rappi::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double infinity = std::numeric_limits<double>::infinity();

constexpr double us(double x) { return x * 1e-6; }
constexpr double ns(double x) { return x * 1e-9; }
constexpr double mhz(double x) { return two_pi * x * 1e6; }
constexpr double khz(double x) { return two_pi * x * 1e3; }
// Chirp rate given in MHz per ms.
constexpr double mhz_per_ms(double x) { return two_pi * x * 1e9; }

constexpr double to_us(double seconds) { return seconds * 1e6; }
constexpr double to_mhz(double rad_per_s) { return rad_per_s / (two_pi * 1e6); }
constexpr double to_hz(double rad_per_s) { return rad_per_s / two_pi; }
constexpr double to_mhz_per_ms(double rad_per_s2) { return rad_per_s2 / (two_pi * 1e9); }

}  // namespace rappi::units
