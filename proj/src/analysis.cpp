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

#include "rappi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rappi/error.hpp"
#include "rappi/io.hpp"

namespace rappi::analysis {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("analysis", code, message); }

double rate_factor(DecayForm form) {
  switch (form) {
    case DecayForm::echo_intensity: return 4.0;
    case DecayForm::memory: return 2.0;
    case DecayForm::recovery: return 1.0;
  }
  return 1.0;
}

struct Problem {
  const std::vector<double>& t;
  const std::vector<double>& y;
  DecayForm form;
  double k;

  // Basis function and the data it multiplies: y = A*f for the decays,
  // 1 - y = a*f for the recovery form.
  double target(std::size_t i) const { return form == DecayForm::recovery ? 1.0 - y[i] : y[i]; }
  double basis(std::size_t i, double tc) const { return std::exp(-k * t[i] / tc); }

  double amplitude(double tc) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double f = basis(i, tc);
      num += target(i) * f;
      den += f * f;
    }
    return den > 0.0 ? num / den : 0.0;
  }

  double cost(double tc) const {
    const double a = amplitude(tc);
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = target(i) - a * basis(i, tc);
      s += r * r;
    }
    return s;
  }
};

}  // namespace

const char* form_name(DecayForm form) {
  switch (form) {
    case DecayForm::echo_intensity: return "echo-intensity";
    case DecayForm::memory: return "memory";
    case DecayForm::recovery: return "recovery";
  }
  return "unknown";
}

DecayForm parse_form(const std::string& name) {
  if (name == "echo-intensity") return DecayForm::echo_intensity;
  if (name == "memory") return DecayForm::memory;
  if (name == "recovery") return DecayForm::recovery;
  fail("unknown-form", "unknown decay form '" + name + "' (expected echo-intensity, memory or recovery)");
}

double DecayModel::evaluate(double t) const {
  const double f = std::exp(-rate_factor(form) * t / time_constant);
  return form == DecayForm::recovery ? 1.0 - amplitude * f : amplitude * f;
}

DecayModel fit_decay(const std::vector<double>& t, const std::vector<double>& y, DecayForm form) {
  if (t.size() != y.size()) fail("shape-mismatch", "t and y differ in length");
  if (t.size() < 3) fail("too-few-points", "a decay fit needs at least 3 points, got " + std::to_string(t.size()));
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) fail("unordered-data", "t must be strictly increasing");
  }
  const Problem p{t, y, form, rate_factor(form)};
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (!(*ymax - *ymin > 1e-14 * std::max(std::abs(*ymax), std::abs(*ymin)))) {
    fail("degenerate-data", "data are constant; no time constant can be fitted");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(p.target(i) > 0.0)) {
      fail("non-positive-data", form == DecayForm::recovery ? "recovery form needs y < 1 at every point"
                                                            : "decay forms need y > 0 at every point");
    }
  }

  // Log-linear estimate of the time constant.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ly = std::log(p.target(i));
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double span = t.back() - t.front();
  double guess = slope < 0.0 ? -p.k / slope : 10.0 * span;
  if (!std::isfinite(guess) || guess <= 0.0) guess = span;

  // Coarse logarithmic scan brackets the minimum, golden section refines it.
  const double lo_scan = std::log(guess / 100.0), hi_scan = std::log(guess * 100.0);
  constexpr int scan = 400;
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> grid(scan + 1);
  for (int i = 0; i <= scan; ++i) {
    grid[i] = lo_scan + (hi_scan - lo_scan) * i / scan;
    const double c = p.cost(std::exp(grid[i]));
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  double a = grid[std::max(best - 1, 0)], b = grid[std::min(best + 1, scan)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = p.cost(std::exp(x1)), f2 = p.cost(std::exp(x2));
  for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = p.cost(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = p.cost(std::exp(x2));
    }
  }
  const double tc = std::exp(0.5 * (a + b));

  DecayModel m;
  m.form = form;
  m.time_constant = tc;
  m.amplitude = p.amplitude(tc);
  m.points = t.size();
  const double ss = p.cost(tc);
  m.residual = std::sqrt(ss);

  // Standard errors from the Jacobian of the model at the optimum.
  double jaa = 0.0, jat = 0.0, jtt = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = p.basis(i, tc);
    const double da = f;
    const double dt = m.amplitude * f * p.k * t[i] / (tc * tc);
    jaa += da * da;
    jat += da * dt;
    jtt += dt * dt;
  }
  const double det = jaa * jtt - jat * jat;
  const double sigma2 = t.size() > 2 ? ss / static_cast<double>(t.size() - 2) : 0.0;
  if (det > 0.0) {
    m.amplitude_stderr = std::sqrt(sigma2 * jtt / det);
    m.time_constant_stderr = std::sqrt(sigma2 * jaa / det);
  }
  return m;
}

double trace_energy(const std::vector<double>& t, const std::vector<cplx>& field, double begin, double end) {
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (t[k] < begin - 1e-15 || t[k + 1] > end + 1e-15) continue;
    e += 0.5 * (std::norm(field[k]) + std::norm(field[k + 1])) * (t[k + 1] - t[k]);
  }
  return e;
}

double extract_efficiency(const std::vector<double>& t, const std::vector<cplx>& field, double reference_energy,
                          const EfficiencyWindows& w) {
  if (t.size() != field.size() || t.size() < 2) fail("shape-mismatch", "trace needs matching t and field samples");
  if (!(reference_energy > 0.0)) fail("zero-reference", "reference energy must be positive");
  if (!(w.echo_end > w.echo_begin) || !(w.noise_end > w.noise_begin)) fail("invalid-window", "windows must have positive length");
  if (w.echo_begin < w.noise_end && w.noise_begin < w.echo_end) {
    fail("window-collision", "echo and noise windows overlap");
  }
  for (double x : {w.echo_begin, w.echo_end, w.noise_begin, w.noise_end}) {
    if (x < t.front() - 1e-12 || x > t.back() + 1e-12) fail("window-outside-trace", "window extends beyond the trace");
  }
  std::vector<double> noise;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] >= w.noise_begin && t[k] <= w.noise_end) noise.push_back(std::norm(field[k]));
  }
  if (noise.empty()) fail("invalid-window", "noise window contains no samples");
  std::sort(noise.begin(), noise.end());
  const std::size_t h = noise.size() / 2;
  const double floor = noise.size() % 2 ? noise[h] : 0.5 * (noise[h - 1] + noise[h]);
  const double echo = trace_energy(t, field, w.echo_begin, w.echo_end);
  return std::max(0.0, (echo - floor * (w.echo_end - w.echo_begin)) / reference_energy);
}

double extract_efficiency(const std::vector<double>& t, const std::vector<cplx>& field,
                          const std::vector<double>& t_ref, const std::vector<cplx>& reference,
                          const EfficiencyWindows& windows) {
  if (t_ref.size() != reference.size() || t_ref.size() < 2) fail("shape-mismatch", "reference trace is malformed");
  return extract_efficiency(t, field, trace_energy(t_ref, reference, t_ref.front(), t_ref.back()), windows);
}

}  // namespace rappi::analysis
