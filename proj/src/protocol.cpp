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

#include "rappi/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rappi/error.hpp"
#include "rappi/io.hpp"

namespace rappi::protocol {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("protocol", code, message); }

std::string us(double t) { return io::format_double(units::to_us(t)); }

double max_abs_detuning(const ensemble::AtomGrid& grid) {
  double m = 0.0;
  for (const auto& a : grid.atoms) m = std::max(m, std::abs(a.detuning));
  return m;
}

double envelope_dt(const ProtocolRun& run, const pulse::PulseSpec& spec, double max_detuning) {
  return run.dt_max > 0.0 ? run.dt_max : pulse::default_dt(spec, run.probe.duration, max_detuning);
}

// Control-pulse windows [start, end] for a timing.
struct Windows {
  double c1_start, c1_end, c2_start, c2_end;
};

Windows control_windows(const ProtocolRun& run, const Timing& tm) {
  if (run.kind == Kind::two_ppe) {
    const double half = 0.5 * run.control.duration;
    return {tm.tau1 - half, tm.tau1 + half, 0.0, 0.0};
  }
  const double tr = run.tau_r();
  const double c2_start = tm.tau1 + tr + tm.tau2;
  const double c2_len = run.second_control ? run.second_control->duration : tr;
  return {tm.tau1, tm.tau1 + tr, c2_start, c2_start + c2_len};
}

void check_timing(const ProtocolRun& run, const Timing& tm) {
  const double half_probe = 0.5 * run.probe.duration;
  const Windows w = control_windows(run, tm);
  if (w.c1_start < half_probe * (1.0 - 1e-9)) {
    fail("overlapping-events", "control pulse starting at " + us(w.c1_start) + " us overlaps the probe");
  }
  if (run.kind == Kind::rappi) {
    ensemble::echo_time_check(tm.tau1, tm.tau2, run.tau_r());
    const double t_echo = 2.0 * (tm.tau2 + run.tau_r());
    if (t_echo - half_probe < w.c2_end * (1.0 - 1e-9)) {
      fail("echo-inside-control", "echo at " + us(t_echo) + " us would overlap RAP2 ending at " + us(w.c2_end) + " us");
    }
  }
}

}  // namespace

const char* kind_name(Kind k) { return k == Kind::rappi ? "rappi" : "2ppe"; }

void ProtocolRun::validate() const {
  if (!pulse::is_probe(probe.kind)) fail("invalid-run", "the probe must be a probe-square or probe-gaussian pulse");
  pulse::validate(probe);
  pulse::validate(control);
  if (kind == Kind::rappi && !pulse::is_rap(control.kind)) fail("invalid-run", "rappi needs a RAP control pulse");
  if (second_control) {
    if (kind != Kind::rappi) fail("invalid-run", "a second control pulse only exists for rappi");
    pulse::validate(*second_control);
  }
  if (ideal_pi && kind != Kind::two_ppe) fail("invalid-run", "ideal rotations are a 2ppe option");
  medium.validate();
  check_timing(*this, timing_of(*this));
}

Timing timing_of(const ProtocolRun& run) { return {run.tau1, run.tau2}; }

Timing timing_for_echo(const ProtocolRun& run, double t_echo) {
  if (run.kind == Kind::two_ppe) return {0.5 * t_echo, 0.0};
  return {run.tau1, 0.5 * t_echo - run.tau_r()};
}

double echo_time(const ProtocolRun& run, const Timing& tm) {
  return run.kind == Kind::two_ppe ? 2.0 * tm.tau1 : ensemble::echo_time_check(tm.tau1, tm.tau2, run.tau_r());
}

double predicted_echo_time(const ProtocolRun& run) { return echo_time(run, timing_of(run)); }

BuiltSequence build_sequence(const ProtocolRun& run) {
  run.validate();
  const Timing tm = timing_of(run);
  const Windows w = control_windows(run, tm);
  BuiltSequence b;
  const double tp = run.probe.duration;
  auto probe = run.probe;
  probe.center_time = 0.0;
  b.sequence.t_begin = probe.start();
  b.sequence.events.emplace_back(ensemble::probe_event(probe));
  if (run.kind == Kind::rappi) {
    auto rap1 = run.control;
    rap1.center_time = 0.5 * (w.c1_start + w.c1_end);
    auto rap2 = run.second_control ? *run.second_control : run.control;
    rap2.center_time = 0.5 * (w.c2_start + w.c2_end);
    b.sequence.events.emplace_back(ensemble::control_event(rap1));
    b.sequence.events.emplace_back(ensemble::control_event(rap2));
    b.controls = {rap1, rap2};
    b.t_echo = echo_time(run, tm);
    b.t_primary = 2.0 * tm.tau1 + run.tau_r();
    b.t_controls_end = w.c2_end;
  } else {
    auto pi = run.control;
    pi.center_time = tm.tau1;
    if (run.ideal_pi) {
      b.sequence.events.emplace_back(ensemble::IdealRotation{tm.tau1, units::pi, 0.0});
    } else {
      b.sequence.events.emplace_back(ensemble::control_event(pi));
    }
    b.controls = {pi};
    b.t_echo = echo_time(run, tm);
    b.t_primary = b.t_echo;
    b.t_controls_end = w.c1_end;
  }
  b.sequence.t_end = b.t_echo + 2.0 * tp;
  return b;
}

pulse::PulseSpec pi_pulse(double duration) {
  auto p = pulse::probe_square(0.0, duration, units::pi / duration);
  return p;
}

ProtocolRun reference_run() {
  ProtocolRun r;
  r.kind = Kind::rappi;
  r.tau1 = units::us(10);
  r.tau2 = units::us(20);
  const double tp = units::us(2);
  r.probe = pulse::probe_square(0.0, tp, 0.01 / tp);
  r.control = pulse::rap(0.0, units::us(50), units::mhz(0.35), units::mhz_per_ms(30));
  r.medium.optical_depth = 2.0;
  r.medium.slices = 32;
  r.medium.ensemble.atoms = 1001;
  r.medium.ensemble.window = units::mhz(3.3);
  return r;
}

Prepared prepare(const ProtocolRun& run, double simulation_span) {
  run.validate();
  Prepared p;
  p.run = run;
  p.grid = ensemble::build_grid(run.medium.ensemble, simulation_span);
  const double max_d = max_abs_detuning(p.grid);
  const std::size_t n = p.grid.atoms.size();

  auto probe = run.probe;
  probe.center_time = 0.0;
  p.probe_env = pulse::synthesize(probe, envelope_dt(run, probe, max_d));
  bloch::check_envelope(p.probe_env, max_d);
  p.input_energy = propagation::envelope_energy(p.probe_env);
  p.probe_signal.resize(n);
  {
    std::vector<double> u(n, 0.0), v(n, 0.0), w(n, -1.0), d(n), g2(n), g1(n), src(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = p.grid.atoms[j].detuning;
      g2[j] = p.grid.atoms[j].gamma2();
      g1[j] = p.grid.atoms[j].gamma1();
    }
    bloch::integrate({u.data(), v.data(), w.data(), d.data(), g2.data(), g1.data(), src.data(), n}, p.probe_env);
    for (std::size_t j = 0; j < n; ++j) p.probe_signal[j] = {u[j], v[j], w[j] + 1.0};
  }

  const auto maps_for = [&](const pulse::PulseSpec& spec) {
    if (run.ideal_pi) {
      std::vector<bloch::AffineMap> maps(n);
      const auto rot = bloch::ideal_rotation(units::pi, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const auto half = bloch::free_map(p.grid.atoms[j], 0.5 * spec.duration);
        maps[j] = bloch::compose(half, bloch::compose(rot, half));
      }
      return maps;
    }
    const auto env = pulse::synthesize(spec, envelope_dt(run, spec, max_d));
    return bloch::propagators(p.grid.atoms, env, run.threads);
  };
  p.first_maps = maps_for(run.control);
  if (run.second_control) p.second_maps = maps_for(*run.second_control);
  return p;
}

propagation::StoredCoherence states_at(const Prepared& prep, const Timing& tm, double t) {
  const auto& run = prep.run;
  check_timing(run, tm);
  const Windows w = control_windows(run, tm);
  const double t_probe_end = 0.5 * run.probe.duration;
  const double tol = 1e-12;
  enum class Stage { before, between, after } stage;
  if (t <= w.c1_start + tol) {
    stage = Stage::before;
  } else if (t >= w.c1_end - tol && (run.kind == Kind::two_ppe || t <= w.c2_start + tol)) {
    stage = Stage::between;
  } else if (run.kind == Kind::rappi && t >= w.c2_end - tol) {
    stage = Stage::after;
  } else {
    fail("inside-control", "requested time " + us(t) + " us falls inside a control pulse");
  }
  if (t < t_probe_end - tol) fail("inside-probe", "requested time precedes the end of the probe");

  const std::size_t n = prep.grid.atoms.size();
  propagation::StoredCoherence s;
  s.t_ref = t;
  s.signal.resize(n);
  s.background.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& atom = prep.grid.atoms[j];
    bloch::AffineMap m;
    if (stage == Stage::before) {
      m = bloch::free_map(atom, t - t_probe_end);
    } else {
      m = bloch::compose(prep.first_maps[j], bloch::free_map(atom, w.c1_start - t_probe_end));
      if (stage == Stage::between) {
        m = bloch::compose(bloch::free_map(atom, t - w.c1_end), m);
      } else {
        const auto& second = prep.second_maps.empty() ? prep.first_maps[j] : prep.second_maps[j];
        m = bloch::compose(bloch::free_map(atom, w.c2_start - w.c1_end), m);
        m = bloch::compose(second, m);
        m = bloch::compose(bloch::free_map(atom, t - w.c2_end), m);
      }
    }
    s.signal[j] = m.apply_linear(prep.probe_signal[j]);
    s.background[j] = m.apply(bloch::AtomState::ground());
  }
  return s;
}

EchoEvaluation evaluate_window(const Prepared& prep, const Timing& tm, double optical_depth,
                               const propagation::EmissionWindow& window, const propagation::EchoWindow& echo) {
  auto medium = prep.run.medium;
  medium.optical_depth = optical_depth;
  const auto absorption = propagation::absorb_probe(medium, prep.grid, prep.probe_env);
  const auto stored = states_at(prep, tm, window.t_begin);
  EchoEvaluation e;
  e.field = propagation::emit_echo(medium, prep.grid, absorption, stored, window, echo, prep.input_energy);
  double best = -1.0;
  for (std::size_t k = 0; k < e.field.t.size(); ++k) {
    const double t = e.field.t[k];
    if (t < echo.center - echo.half_width || t > echo.center + echo.half_width) continue;
    const double m = std::norm(e.field.e_echo[k]);
    if (m > best) {
      best = m;
      e.t_peak = t;
    }
  }
  for (std::size_t j = 0; j < prep.grid.atoms.size(); ++j) {
    e.mean_inversion += prep.grid.atoms[j].weight * stored.background[j].w;
  }
  return e;
}

EchoEvaluation evaluate_echo(const Prepared& prep, const Timing& tm, double optical_depth) {
  const double tp = prep.run.probe.duration;
  const double t_echo = echo_time(prep.run, tm);
  const Windows w = control_windows(prep.run, tm);
  const double controls_end = prep.run.kind == Kind::rappi ? w.c2_end : w.c1_end;
  // Long probes can reach back into the last control pulse; clip symmetrically.
  const double half = std::min(2.0 * tp, t_echo - controls_end);
  const propagation::EchoWindow echo{t_echo, half};
  const propagation::EmissionWindow window{t_echo - half, t_echo + half, tp / 100.0};
  return evaluate_window(prep, tm, optical_depth, window, echo);
}

double efficiency(const Prepared& prep, double optical_depth) {
  return evaluate_echo(prep, timing_of(prep.run), optical_depth).field.efficiency;
}

std::vector<propagation::SweepPoint> depth_sweep(const Prepared& prep, const std::vector<double>& depths) {
  std::vector<propagation::SweepPoint> out;
  out.reserve(depths.size());
  for (double d : depths) out.push_back({d, efficiency(prep, d)});
  return out;
}

double tune_optical_depth(const Prepared& prep, double target) {
  if (!(target > 0.0)) fail("invalid-target", "target efficiency must be positive");
  // Locate the efficiency maximum, then bisect on the rising side.
  double a = 0.05, b = 8.0;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = efficiency(prep, x1), f2 = efficiency(prep, x2);
  while (b - a > 1e-3) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = efficiency(prep, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = efficiency(prep, x2);
    }
  }
  const double peak_depth = 0.5 * (a + b);
  const double peak = efficiency(prep, peak_depth);
  if (peak < target) {
    fail("target-unreachable", "requested efficiency " + io::format_double(target) + " exceeds the maximum " +
                                   io::format_double(peak) + " reached at alpha*L = " + io::format_double(peak_depth));
  }
  double lo = 0.0, hi = peak_depth;
  for (int it = 0; it < 60 && hi - lo > 1e-7; ++it) {
    const double mid = 0.5 * (lo + hi);
    (efficiency(prep, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ExperimentResult run_experiment(const ProtocolRun& run, const ExperimentOptions& options) {
  ExperimentResult r;
  r.built = build_sequence(run);
  const double tp = run.probe.duration;
  const Timing tm = timing_of(run);
  r.t_echo_predicted = r.built.t_echo;
  const Prepared prep = prepare(run, r.built.sequence.t_end - r.built.sequence.t_begin);

  if (options.with_trace) {
    ensemble::RunOptions ro;
    ro.sample_dt = run.sample_dt;
    ro.dt_max = run.dt_max;
    ro.probe_duration = tp;
    ro.threads = run.threads;
    r.trace = ensemble::run_sequence(prep.grid, r.built.sequence, ro).trace;
    r.t_echo_trace = ensemble::find_echo(r.trace, r.built.t_echo, 2.0 * tp).time;
  }

  const propagation::EchoWindow echo{r.built.t_echo, 2.0 * tp};
  const propagation::EmissionWindow window{r.built.t_controls_end, r.built.t_echo + 2.0 * tp, tp / 100.0};
  const auto ev = evaluate_window(prep, tm, run.medium.optical_depth, window, echo);
  r.propagation = ev.field;
  r.t_echo_measured = ev.t_peak;
  r.secondary_energy = ev.field.echo_energy;
  r.snr = ev.field.snr;
  r.eta = prep.input_energy > 0.0 ? ev.field.efficiency : std::numeric_limits<double>::quiet_NaN();

  if (run.kind == Kind::rappi) {
    // Primary-echo window, clipped to the free interval between the RAPs.
    const Windows w = control_windows(run, tm);
    const double lo = std::max(r.built.t_primary - 2.0 * tp, w.c1_end);
    const double hi = std::min(r.built.t_primary + 2.0 * tp, w.c2_start);
    if (hi > lo) {
      const propagation::EchoWindow pe{0.5 * (lo + hi), 0.5 * (hi - lo)};
      const auto primary = evaluate_window(prep, tm, run.medium.optical_depth, {lo, hi, tp / 100.0}, pe);
      r.primary_energy = primary.field.echo_energy;
    }
  } else {
    r.primary_energy = r.secondary_energy;
  }
  r.suppression_ratio = r.secondary_energy > 0.0 ? r.primary_energy / r.secondary_energy
                                                 : std::numeric_limits<double>::quiet_NaN();
  return r;
}

StorageCurve efficiency_vs_storage(const Prepared& prep, const std::vector<double>& echo_times) {
  if (echo_times.size() < 3) {
    fail("too-few-points", "a storage curve needs at least 3 storage times, got " + std::to_string(echo_times.size()));
  }
  StorageCurve c;
  std::vector<double> t, y;
  for (double te : echo_times) {
    const Timing tm = timing_for_echo(prep.run, te);
    const double eta = evaluate_echo(prep, tm, prep.run.medium.optical_depth).field.efficiency;
    c.points.push_back({te, eta});
    t.push_back(te);
    y.push_back(eta);
  }
  c.fit = analysis::fit_decay(t, y, analysis::DecayForm::memory);
  return c;
}

StorageCurve efficiency_vs_storage(const ProtocolRun& run, const std::vector<double>& echo_times) {
  if (echo_times.size() < 3) {
    fail("too-few-points", "a storage curve needs at least 3 storage times, got " + std::to_string(echo_times.size()));
  }
  const double longest = *std::max_element(echo_times.begin(), echo_times.end());
  const Prepared prep = prepare(run, longest + 2.5 * run.probe.duration);
  return efficiency_vs_storage(prep, echo_times);
}

}  // namespace rappi::protocol
