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

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <vector>

#include "rappi/pulse.hpp"
#include "rappi/units.hpp"

// Optical Bloch equations in the frame rotating at the global reference
// frequency, for an envelope Omega(t) (complex, rad/s) and detuning delta:
//
//   du/dt = -delta*v + Im(Omega)*w - u/T2
//   dv/dt =  delta*u - Re(Omega)*w - v/T2
//   dw/dt =  Re(Omega)*v - Im(Omega)*u - (w + 1)/T1
//
// Equivalently d(u+iv)/dt = i*delta*(u+iv) - i*Omega*w, so a field component
// exp(+i*delta_c*t) is resonant with atoms at delta = +delta_c. The ground
// state is w = -1 and a resonant real pulse of area pi takes (0,0,-1) through
// (0,+1,0) to (0,0,+1).
namespace rappi::bloch {

using cplx = std::complex<double>;

struct AtomParams {
  double detuning = 0.0;  // rad/s
  double t2 = units::infinity;
  double t1 = units::infinity;
  double weight = 1.0;

  void validate() const;
  double gamma2() const { return std::isinf(t2) ? 0.0 : 1.0 / t2; }
  double gamma1() const { return std::isinf(t1) ? 0.0 : 1.0 / t1; }
};

struct AtomState {
  double u = 0.0;
  double v = 0.0;
  double w = -1.0;

  static AtomState ground() { return {}; }
  double norm() const { return std::sqrt(u * u + v * v + w * w); }
  cplx coherence() const { return {u, v}; }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<AtomState> states;
  const AtomState& final() const { return states.back(); }
};

// Largest |delta| * step the integrator accepts.
inline constexpr double max_phase_per_step = 0.3;

// Structure-of-arrays view over a block of atoms. source[j] is 1 for
// physical states (relaxing toward w = -1) and 0 for homogeneous solutions,
// which is how affine propagators are built.
struct Lanes {
  double* u = nullptr;
  double* v = nullptr;
  double* w = nullptr;
  const double* detuning = nullptr;
  const double* gamma2 = nullptr;
  const double* gamma1 = nullptr;
  const double* source = nullptr;
  std::size_t n = 0;
};

// Number of RK4 steps for an envelope; each step spans two samples so the
// midpoint field is a tabulated sample. Requires an odd sample count >= 3.
std::size_t step_count(const pulse::SampledEnvelope& env);
void check_envelope(const pulse::SampledEnvelope& env, double max_abs_detuning);

// Advances every lane through env. observer(step, t) is called after each
// step (step counts from 1) with the lanes holding the state at time t.
//
// RK4 in the interaction picture of the free precession: the rotation and T2
// decay of u + iv over half a step are applied exactly as a complex factor,
// and the Runge-Kutta stages only carry the drive and the T1 terms.
template <class Observer>
void integrate(const Lanes& x, const pulse::SampledEnvelope& env, Observer&& observer) {
  const std::size_t steps = step_count(env);
  const double h = 2.0 * env.dt;
  std::vector<double> half_re(x.n), half_im(x.n);
  for (std::size_t j = 0; j < x.n; ++j) {
    const double decay = std::exp(-0.5 * h * x.gamma2[j]);
    half_re[j] = decay * std::cos(0.5 * h * x.detuning[j]);
    half_im[j] = decay * std::sin(0.5 * h * x.detuning[j]);
  }
  double* __restrict u = x.u;
  double* __restrict v = x.v;
  double* __restrict w = x.w;
  const double* __restrict hr = half_re.data();
  const double* __restrict hi = half_im.data();
  const double* __restrict g1 = x.gamma1;
  const double* __restrict src = x.source;
  for (std::size_t s = 0; s < steps; ++s) {
    const cplx o0 = env.samples[2 * s];
    const cplx om = env.samples[2 * s + 1];
    const cplx o1 = env.samples[2 * s + 2];
    const double r0 = o0.real(), i0 = o0.imag();
    const double rm = om.real(), im = om.imag();
    const double r1 = o1.real(), i1 = o1.imag();
    for (std::size_t j = 0; j < x.n; ++j) {
      const double er = hr[j], ei = hi[j], b = g1[j], c = g1[j] * src[j];
      // Stage values live in the frame of the step midpoint.
      const double u0 = u[j], v0 = v[j], w0 = w[j];
      const double au = er * u0 - ei * v0, av = er * v0 + ei * u0;
      const double fu = h * (i0 * w0), fv = h * (-r0 * w0);
      const double ku1 = er * fu - ei * fv, kv1 = er * fv + ei * fu;
      const double kw1 = h * (r0 * v0 - i0 * u0 - b * w0 - c);
      double su = au + 0.5 * ku1, sv = av + 0.5 * kv1, sw = w0 + 0.5 * kw1;
      const double ku2 = h * (im * sw), kv2 = h * (-rm * sw);
      const double kw2 = h * (rm * sv - im * su - b * sw - c);
      su = au + 0.5 * ku2, sv = av + 0.5 * kv2, sw = w0 + 0.5 * kw2;
      const double ku3 = h * (im * sw), kv3 = h * (-rm * sw);
      const double kw3 = h * (rm * sv - im * su - b * sw - c);
      su = au + ku3, sv = av + kv3, sw = w0 + kw3;
      const double eu = er * su - ei * sv, ev = er * sv + ei * su;
      const double ku4 = h * (i1 * sw), kv4 = h * (-r1 * sw);
      const double kw4 = h * (r1 * ev - i1 * eu - b * sw - c);
      const double mu = au + (ku1 + 2.0 * ku2 + 2.0 * ku3) / 6.0;
      const double mv = av + (kv1 + 2.0 * kv2 + 2.0 * kv3) / 6.0;
      u[j] = er * mu - ei * mv + ku4 / 6.0;
      v[j] = er * mv + ei * mu + kv4 / 6.0;
      w[j] = w0 + (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4) / 6.0;
    }
    observer(s + 1, env.time(2 * s + 2));
  }
}

inline void integrate(const Lanes& x, const pulse::SampledEnvelope& env) {
  integrate(x, env, [](std::size_t, double) {});
}

Trajectory evolve(const AtomState& state, const AtomParams& params, const pulse::SampledEnvelope& env);
AtomState evolve_final(const AtomState& state, const AtomParams& params, const pulse::SampledEnvelope& env);

// Closed-form free evolution for a duration (Omega = 0).
AtomState free_evolve(const AtomState& state, const AtomParams& params, double duration);

// x -> m*x + b; Bloch dynamics are linear in (u, v, w) with an inhomogeneous
// term only from T1 relaxation, so every pulse or wait is such a map.
struct AffineMap {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> b{0, 0, 0};

  AtomState apply(const AtomState& x) const;
  // Linear part only (the response of a deviation from a reference state).
  AtomState apply_linear(const AtomState& x) const;
  static AffineMap identity() { return {}; }
};

// after(before(x)).
AffineMap compose(const AffineMap& after, const AffineMap& before);
AffineMap free_map(const AtomParams& params, double duration);
AffineMap propagator(const AtomParams& params, const pulse::SampledEnvelope& env);
std::vector<AffineMap> propagators(const std::vector<AtomParams>& atoms, const pulse::SampledEnvelope& env,
                                   int threads = 1);
// Instantaneous rotation by angle about the equatorial axis at azimuth
// phase, the limit of a short resonant pulse with envelope phase `phase`.
AffineMap ideal_rotation(double angle, double phase = 0.0);

// Phase imprinted on a transverse coherence (1,0,0) by a chirped pulse,
// relative to free evolution over the same interval; wrapped to (-pi, pi].
double rap_phase_imprint(const AtomParams& params, const pulse::SampledEnvelope& rap);

// Range of instantaneous drive frequency (rad/s) where |Omega| exceeds
// `fraction` of its peak, from the sample-to-sample phase advance.
std::pair<double, double> swept_range(const pulse::SampledEnvelope& env, double fraction = 1e-3);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace rappi::bloch
