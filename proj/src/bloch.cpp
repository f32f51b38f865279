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

#include "rappi/bloch.hpp"

#include <algorithm>
#include <cmath>

#include "rappi/error.hpp"
#include "rappi/io.hpp"
#include "rappi/parallel.hpp"

namespace rappi::bloch {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("bloch", code, message); }

double wrap_phase(double x) {
  x = std::remainder(x, units::two_pi);
  return x <= -units::pi ? x + units::two_pi : x;
}

}  // namespace

void AtomParams::validate() const {
  if (!(t2 > 0.0)) fail("invalid-atom", "T2 must be positive");
  if (!(t1 >= 0.5 * t2)) fail("invalid-atom", "T1 must be at least T2/2");
  if (!(weight >= 0.0)) fail("invalid-atom", "weight must be non-negative");
  if (!std::isfinite(detuning)) fail("invalid-atom", "detuning must be finite");
}

std::size_t step_count(const pulse::SampledEnvelope& env) {
  if (env.size() < 3 || env.size() % 2 == 0) {
    fail("grid-parity", "envelope needs an odd number (>= 3) of samples, got " + std::to_string(env.size()));
  }
  return (env.size() - 1) / 2;
}

void check_envelope(const pulse::SampledEnvelope& env, double max_abs_detuning) {
  step_count(env);
  const double h = 2.0 * env.dt;
  if (max_abs_detuning * h > max_phase_per_step) {
    fail("step-size", "|delta|*dt = " + io::format_double(max_abs_detuning * h) + " rad exceeds " +
                          io::format_double(max_phase_per_step) + " rad; refine the envelope grid");
  }
}

namespace {

struct Single {
  double u, v, w, d, g2, g1, src;
  Lanes lanes() { return Lanes{&u, &v, &w, &d, &g2, &g1, &src, 1}; }
};

}  // namespace

Trajectory evolve(const AtomState& state, const AtomParams& params, const pulse::SampledEnvelope& env) {
  params.validate();
  check_envelope(env, std::abs(params.detuning));
  Single s{state.u, state.v, state.w, params.detuning, params.gamma2(), params.gamma1(), 1.0};
  Trajectory traj;
  const std::size_t steps = step_count(env);
  traj.t.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.t.push_back(env.t_start);
  traj.states.push_back(state);
  integrate(s.lanes(), env, [&](std::size_t, double t) {
    traj.t.push_back(t);
    traj.states.push_back({s.u, s.v, s.w});
  });
  return traj;
}

AtomState evolve_final(const AtomState& state, const AtomParams& params, const pulse::SampledEnvelope& env) {
  params.validate();
  check_envelope(env, std::abs(params.detuning));
  Single s{state.u, state.v, state.w, params.detuning, params.gamma2(), params.gamma1(), 1.0};
  integrate(s.lanes(), env);
  return {s.u, s.v, s.w};
}

AtomState free_evolve(const AtomState& state, const AtomParams& params, double duration) {
  const cplx c = state.coherence() * std::exp(cplx(-params.gamma2() * duration, params.detuning * duration));
  const double w = -1.0 + (state.w + 1.0) * std::exp(-params.gamma1() * duration);
  return {c.real(), c.imag(), w};
}

AtomState AffineMap::apply(const AtomState& x) const {
  return {m[0] * x.u + m[1] * x.v + m[2] * x.w + b[0], m[3] * x.u + m[4] * x.v + m[5] * x.w + b[1],
          m[6] * x.u + m[7] * x.v + m[8] * x.w + b[2]};
}

AtomState AffineMap::apply_linear(const AtomState& x) const {
  return {m[0] * x.u + m[1] * x.v + m[2] * x.w, m[3] * x.u + m[4] * x.v + m[5] * x.w,
          m[6] * x.u + m[7] * x.v + m[8] * x.w};
}

AffineMap compose(const AffineMap& after, const AffineMap& before) {
  AffineMap r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += after.m[3 * i + k] * before.m[3 * k + j];
      r.m[3 * i + j] = s;
    }
    double s = after.b[i];
    for (int k = 0; k < 3; ++k) s += after.m[3 * i + k] * before.b[k];
    r.b[i] = s;
  }
  return r;
}

AffineMap free_map(const AtomParams& params, double duration) {
  const double decay = std::exp(-params.gamma2() * duration);
  const double c = decay * std::cos(params.detuning * duration);
  const double s = decay * std::sin(params.detuning * duration);
  const double relax = std::exp(-params.gamma1() * duration);
  AffineMap r;
  r.m = {c, -s, 0.0, s, c, 0.0, 0.0, 0.0, relax};
  r.b = {0.0, 0.0, relax - 1.0};
  return r;
}

std::vector<AffineMap> propagators(const std::vector<AtomParams>& atoms, const pulse::SampledEnvelope& env,
                                   int threads) {
  double max_d = 0.0;
  for (const auto& a : atoms) {
    a.validate();
    max_d = std::max(max_d, std::abs(a.detuning));
  }
  check_envelope(env, max_d);
  std::vector<AffineMap> maps(atoms.size());
  constexpr std::size_t chunk = 16;  // atoms per block; four lanes each
  for_each_chunk(atoms.size(), chunk, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    const std::size_t n = 4 * (end - begin);
    std::vector<double> u(n, 0.0), v(n, 0.0), w(n, 0.0), d(n), g2(n), g1(n), src(n, 0.0);
    for (std::size_t a = begin; a < end; ++a) {
      const std::size_t o = 4 * (a - begin);
      for (std::size_t k = 0; k < 4; ++k) {
        d[o + k] = atoms[a].detuning;
        g2[o + k] = atoms[a].gamma2();
        g1[o + k] = atoms[a].gamma1();
      }
      u[o] = 1.0;
      v[o + 1] = 1.0;
      w[o + 2] = 1.0;
      src[o + 3] = 1.0;
    }
    integrate(Lanes{u.data(), v.data(), w.data(), d.data(), g2.data(), g1.data(), src.data(), n}, env);
    for (std::size_t a = begin; a < end; ++a) {
      const std::size_t o = 4 * (a - begin);
      AffineMap& r = maps[a];
      for (std::size_t col = 0; col < 3; ++col) {
        r.m[0 * 3 + col] = u[o + col];
        r.m[1 * 3 + col] = v[o + col];
        r.m[2 * 3 + col] = w[o + col];
      }
      r.b = {u[o + 3], v[o + 3], w[o + 3]};
    }
  });
  return maps;
}

AffineMap propagator(const AtomParams& params, const pulse::SampledEnvelope& env) {
  return propagators({params}, env, 1).front();
}

AffineMap ideal_rotation(double angle, double phase) {
  // Rodrigues form of a rotation about n = (cos phase, sin phase, 0).
  const double nx = std::cos(phase), ny = std::sin(phase);
  const double s = std::sin(angle), c1 = 1.0 - std::cos(angle);
  // K is the cross-product matrix of n.
  const std::array<double, 9> k{0.0, 0.0, ny, 0.0, 0.0, -nx, -ny, nx, 0.0};
  std::array<double, 9> k2{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) k2[3 * i + j] += k[3 * i + l] * k[3 * l + j];
  AffineMap r;
  for (int i = 0; i < 9; ++i) r.m[i] = (i % 4 == 0 ? 1.0 : 0.0) + s * k[i] + c1 * k2[i];
  return r;
}

std::pair<double, double> swept_range(const pulse::SampledEnvelope& env, double fraction) {
  const double peak = env.max_abs();
  double lo = units::infinity, hi = -units::infinity;
  for (std::size_t k = 0; k + 1 < env.size(); ++k) {
    if (std::abs(env.samples[k]) > fraction * peak && std::abs(env.samples[k + 1]) > fraction * peak) {
      const double f = std::arg(env.samples[k + 1] * std::conj(env.samples[k])) / env.dt;
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  }
  return {lo, hi};
}

double rap_phase_imprint(const AtomParams& params, const pulse::SampledEnvelope& rap) {
  if (rap.max_abs() == 0.0) return 0.0;
  const auto [lo, hi] = swept_range(rap);
  if (params.detuning < lo || params.detuning > hi) {
    fail("outside-span", "detuning " + io::format_double(units::to_mhz(params.detuning)) +
                             " MHz lies outside the swept range; the imprint is undefined there");
  }
  const AtomState end = evolve_final({1.0, 0.0, 0.0}, params, rap);
  const double free_phase = params.detuning * (rap.t_end() - rap.t_start);
  return wrap_phase(std::arg(end.coherence()) - free_phase);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  io::CsvWriter csv(out, {"t_s", "u", "v", "w"});
  for (std::size_t k = 0; k < trajectory.t.size(); ++k) {
    const auto& s = trajectory.states[k];
    csv.row({trajectory.t[k], s.u, s.v, s.w});
  }
}

}  // namespace rappi::bloch
