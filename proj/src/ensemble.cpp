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

#include "rappi/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "rappi/error.hpp"
#include "rappi/io.hpp"
#include "rappi/parallel.hpp"

namespace rappi::ensemble {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("ensemble", code, message); }

}  // namespace

const char* profile_name(Profile p) {
  switch (p) {
    case Profile::uniform: return "uniform";
    case Profile::gaussian: return "gaussian";
    case Profile::lorentzian: return "lorentzian";
  }
  return "unknown";
}

AtomGrid build_grid(const EnsembleSpec& spec, double simulation_span) {
  if (spec.atoms < 3 || spec.atoms % 2 == 0) {
    fail("invalid-grid", "atom count must be odd and >= 3, got " + std::to_string(spec.atoms));
  }
  if (!(spec.window > 0.0)) fail("invalid-grid", "detuning window must be positive");
  if (spec.profile != Profile::uniform && !(spec.linewidth > 0.0)) {
    fail("invalid-grid", std::string(profile_name(spec.profile)) + " profile needs a positive linewidth");
  }
  AtomGrid grid;
  grid.spacing = spec.window / static_cast<double>(spec.atoms - 1);
  grid.revival_time = units::two_pi / grid.spacing;
  if (grid.revival_time <= 2.0 * simulation_span) {
    fail("revival-guard", "grid revival time " + io::format_double(units::to_us(grid.revival_time)) +
                              " us is not longer than twice the " + io::format_double(units::to_us(simulation_span)) +
                              " us simulation span; use more atoms or a narrower window");
  }
  const double half = 0.5 * static_cast<double>(spec.atoms - 1);
  std::vector<double> weights(spec.atoms);
  for (std::size_t j = 0; j < spec.atoms; ++j) {
    const double x = (static_cast<double>(j) - half) * grid.spacing;
    switch (spec.profile) {
      case Profile::uniform: weights[j] = 1.0; break;
      case Profile::gaussian: {
        const double r = x / spec.linewidth;
        weights[j] = std::exp(-4.0 * std::log(2.0) * r * r);
        break;
      }
      case Profile::lorentzian: {
        const double r = 2.0 * x / spec.linewidth;
        weights[j] = 1.0 / (1.0 + r * r);
        break;
      }
    }
  }
  double total = 0.0;
  for (double w : weights) total += w;
  grid.atoms.resize(spec.atoms);
  for (std::size_t j = 0; j < spec.atoms; ++j) {
    const double x = (static_cast<double>(j) - half) * grid.spacing;
    grid.atoms[j] = bloch::AtomParams{spec.center + x, spec.t2, spec.t1, weights[j] / total};
    grid.atoms[j].validate();
  }
  return grid;
}

void check_window(const EnsembleSpec& spec, double rap_span, double probe_fwhm) {
  const double need = rap_span + 4.0 * probe_fwhm;
  if (spec.window < need * (1.0 - 1e-9)) {
    fail("window-too-narrow", "window " + io::format_double(units::to_mhz(spec.window)) + " MHz is below RAP span + 4 probe FWHM = " +
                                  io::format_double(units::to_mhz(need)) + " MHz");
  }
}

std::size_t atoms_for_span(double window, double simulation_span, std::size_t minimum) {
  // 2% margin above the revival guard.
  const double intervals = 1.02 * simulation_span * window / units::pi;
  auto n = static_cast<std::size_t>(std::ceil(intervals)) + 1;
  n = std::max(n, minimum);
  if (n % 2 == 0) ++n;
  return n;
}

double echo_time_check(double tau1, double tau2, double tau_r) {
  if (!(tau1 > 0.0) || !(tau_r > 0.0)) fail("timing", "tau1 and tau_R must be positive");
  if (!(tau2 > tau1)) {
    fail("timing", "tau2 = " + io::format_double(units::to_us(tau2)) + " us must exceed tau1 = " +
                       io::format_double(units::to_us(tau1)) + " us, otherwise the echo precedes the end of RAP2");
  }
  return 2.0 * (tau2 + tau_r);
}

namespace {

enum class ItemKind { pulse, rotation };

struct Item {
  ItemKind kind;
  double start;
  double end;
  bool probe = false;
  pulse::SampledEnvelope env;
  pulse::SampledEnvelope silent;  // zero envelope on the same grid, probes only
  bloch::AffineMap rotation;
};

// Six running sums per trace sample: sigma_y, sigma_z, proxy, background proxy.
constexpr std::size_t kFields = 6;

struct ChunkRunner {
  const AtomGrid& grid;
  const RunOptions& opt;
  const std::vector<Item>& items;
  double t_begin, t_end, sample_dt;
  std::size_t samples;
  bool with_bg;

  double sample_time(std::size_t k) const { return t_begin + static_cast<double>(k) * sample_dt; }

  void run(std::size_t begin, std::size_t end, double* partial, bloch::AtomState* final_states,
           bloch::AtomState* bg_states) const {
    const std::size_t n = end - begin;
    const std::size_t lanes = with_bg ? 2 * n : n;
    std::vector<double> u(lanes, 0.0), v(lanes, 0.0), w(lanes, -1.0);
    std::vector<double> d(lanes), g2(lanes), g1(lanes), src(lanes, 1.0), wt(n);
    for (std::size_t j = 0; j < lanes; ++j) {
      const auto& a = grid.atoms[begin + (j % n)];
      d[j] = a.detuning - opt.frame;
      g2[j] = a.gamma2();
      g1[j] = a.gamma1();
    }
    for (std::size_t j = 0; j < n; ++j) wt[j] = grid.atoms[begin + j].weight;
    std::vector<double> cr(lanes), ci(lanes), wz(lanes);
    std::vector<cplx> step_factor(lanes);
    for (std::size_t j = 0; j < lanes; ++j) step_factor[j] = std::exp(cplx(-g2[j] * sample_dt, d[j] * sample_dt));

    const double tol = 1e-6 * sample_dt;
    double cursor = t_begin;
    std::size_t next = 0;

    const auto record = [&](std::size_t k, const double* uu, const double* vv, const double* ww, std::size_t half,
                            bool full, bool bg) {
      double* p = partial + k * kFields;
      if (full) {
        double sy = 0.0, sz = 0.0, pr = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          sy += wt[j] * vv[j];
          sz += wt[j] * ww[j];
          pr += wt[j] * uu[j];
        }
        p[0] = sy;
        p[1] = sz;
        p[2] = pr;
        p[3] = sy;
      }
      if (bg) {
        double br = 0.0, bi = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          br += wt[j] * uu[half + j];
          bi += wt[j] * vv[half + j];
        }
        p[4] = br;
        p[5] = bi;
      }
    };

    // Closed-form evolution from cursor to target, sampling on the way.
    const auto free_to = [&](double target) {
      if (target < cursor - tol) fail("overlapping-pulses", "sequence events overlap in time");
      bool started = false;
      while (next < samples && sample_time(next) <= target + tol) {
        const double ts = sample_time(next);
        if (!started) {
          const double dt0 = ts - cursor;
          for (std::size_t j = 0; j < lanes; ++j) {
            const cplx c = cplx(u[j], v[j]) * std::exp(cplx(-g2[j] * dt0, d[j] * dt0));
            cr[j] = c.real();
            ci[j] = c.imag();
            wz[j] = -1.0 + (w[j] + 1.0) * std::exp(-g1[j] * dt0);
          }
          started = true;
        } else {
          for (std::size_t j = 0; j < lanes; ++j) {
            const cplx c = cplx(cr[j], ci[j]) * step_factor[j];
            cr[j] = c.real();
            ci[j] = c.imag();
            if (g1[j] != 0.0) wz[j] = -1.0 + (wz[j] + 1.0) * std::exp(-g1[j] * sample_dt);
          }
        }
        record(next, cr.data(), ci.data(), wz.data(), n, true, with_bg);
        ++next;
      }
      const double span = target - cursor;
      if (span > 0.0) {
        for (std::size_t j = 0; j < lanes; ++j) {
          const cplx c = cplx(u[j], v[j]) * std::exp(cplx(-g2[j] * span, d[j] * span));
          u[j] = c.real();
          v[j] = c.imag();
          w[j] = -1.0 + (w[j] + 1.0) * std::exp(-g1[j] * span);
        }
      }
      cursor = std::max(cursor, target);
    };

    for (const auto& item : items) {
      free_to(item.start);
      if (item.kind == ItemKind::rotation) {
        for (std::size_t j = 0; j < lanes; ++j) {
          const auto r = item.rotation.apply({u[j], v[j], w[j]});
          u[j] = r.u;
          v[j] = r.v;
          w[j] = r.w;
        }
        continue;
      }
      const std::size_t first = next;
      const auto observe = [&](bool full, bool bg, std::size_t offset, std::size_t count) {
        std::size_t k = first;
        return [&, full, bg, offset, count, k](std::size_t, double t) mutable {
          while (k < samples && sample_time(k) <= t + tol) {
            record(k, u.data() + offset, v.data() + offset, w.data() + offset, count, full, bg);
            ++k;
          }
          next = std::max(next, k);
        };
      };
      if (item.probe && with_bg) {
        // Probe acts on the physical atoms only; the background copy sees no field.
        bloch::Lanes a{u.data(), v.data(), w.data(), d.data(), g2.data(), g1.data(), src.data(), n};
        bloch::integrate(a, item.env, observe(true, false, 0, 0));
        bloch::Lanes b{u.data() + n, v.data() + n, w.data() + n, d.data() + n,
                       g2.data() + n, g1.data() + n, src.data() + n, n};
        // record() reads the background copy at index n + j from the base pointers.
        bloch::integrate(b, item.silent, observe(false, true, 0, n));
      } else {
        bloch::Lanes a{u.data(), v.data(), w.data(), d.data(), g2.data(), g1.data(), src.data(), lanes};
        bloch::integrate(a, item.env, observe(true, with_bg, 0, n));
      }
      cursor = item.end;
    }
    free_to(t_end);

    for (std::size_t j = 0; j < n; ++j) {
      final_states[begin + j] = {u[j], v[j], w[j]};
      if (with_bg) bg_states[begin + j] = {u[n + j], v[n + j], w[n + j]};
    }
  }
};

}  // namespace

SequenceResult run_sequence(const AtomGrid& grid, const Sequence& sequence, const RunOptions& options) {
  if (grid.atoms.empty()) fail("empty-ensemble", "no atoms to evolve");
  if (!(options.sample_dt > 0.0)) fail("invalid-options", "trace sample spacing must be positive");
  double max_d = 0.0;
  for (const auto& a : grid.atoms) max_d = std::max(max_d, std::abs(a.detuning - options.frame));

  std::vector<Item> items;
  double cursor = sequence.t_begin;
  const double tol = 1e-12 + 1e-9 * std::abs(sequence.t_end - sequence.t_begin);
  for (const auto& ev : sequence.events) {
    if (const auto* w = std::get_if<Wait>(&ev)) {
      if (!(w->duration >= 0.0)) fail("invalid-sequence", "wait duration must be non-negative");
      cursor += w->duration;
      continue;
    }
    Item item{};
    if (const auto* r = std::get_if<IdealRotation>(&ev)) {
      item.kind = ItemKind::rotation;
      item.start = item.end = r->time;
      item.rotation = bloch::ideal_rotation(r->angle, r->phase);
    } else {
      const auto& pe = std::get<PulseEvent>(ev);
      const auto& p = pe.spec;
      item.kind = ItemKind::pulse;
      item.start = p.start();
      item.end = p.end();
      item.probe = pe.probe;
      const double dt = options.dt_max > 0.0
                            ? options.dt_max
                            : pulse::default_dt(p, options.probe_duration, max_d, options.frame);
      pulse::SynthesisOptions so;
      so.frame = options.frame;
      so.allow_overlap = true;
      item.env = pulse::synthesize(p, dt, so);
      bloch::check_envelope(item.env, max_d);
      if (item.probe) {
        item.silent = item.env;
        std::fill(item.silent.samples.begin(), item.silent.samples.end(), cplx(0.0, 0.0));
      }
    }
    if (item.start < cursor - tol) {
      fail("overlapping-pulses", "event starting at " + io::format_double(units::to_us(item.start)) +
                                     " us overlaps the previous event ending at " + io::format_double(units::to_us(cursor)) + " us");
    }
    cursor = item.end;
    items.push_back(std::move(item));
  }
  const double t_end = std::max(sequence.t_end, cursor);

  const auto samples = static_cast<std::size_t>(std::floor((t_end - sequence.t_begin) / options.sample_dt + 1e-9)) + 1;
  const std::size_t n = grid.atoms.size();
  constexpr std::size_t chunk = 128;
  const std::size_t chunks = chunk_count(n, chunk);
  std::vector<double> partial(chunks * samples * kFields, 0.0);
  SequenceResult result;
  result.final_states.resize(n);
  if (options.subtract_background) result.background_states.resize(n);

  const ChunkRunner runner{grid, options, items, sequence.t_begin, t_end, options.sample_dt, samples,
                           options.subtract_background};
  for_each_chunk(n, chunk, options.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    runner.run(begin, end, partial.data() + c * samples * kFields, result.final_states.data(),
               options.subtract_background ? result.background_states.data() : nullptr);
  });

  auto& tr = result.trace;
  tr.t.resize(samples);
  tr.sigma_y_bar.resize(samples);
  tr.sigma_z_bar.resize(samples);
  tr.emitted_proxy.resize(samples);
  tr.signal.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    double acc[kFields] = {0, 0, 0, 0, 0, 0};
    for (std::size_t c = 0; c < chunks; ++c) {
      const double* p = partial.data() + (c * samples + k) * kFields;
      for (std::size_t f = 0; f < kFields; ++f) acc[f] += p[f];
    }
    tr.t[k] = runner.sample_time(k);
    tr.sigma_y_bar[k] = acc[0];
    tr.sigma_z_bar[k] = acc[1];
    tr.emitted_proxy[k] = cplx(acc[2], acc[3]);
    tr.signal[k] = tr.emitted_proxy[k] - cplx(acc[4], acc[5]);
  }
  return result;
}

EchoPeak find_echo(const EnsembleTrace& trace, double predicted, double half_window, bool use_signal) {
  if (trace.t.empty()) fail("window-outside-trace", "empty trace");
  const double lo = predicted - half_window, hi = predicted + half_window;
  if (lo < trace.t.front() - 1e-12 || hi > trace.t.back() + 1e-12) {
    fail("window-outside-trace", "echo window [" + io::format_double(units::to_us(lo)) + ", " +
                                     io::format_double(units::to_us(hi)) + "] us is not inside the trace");
  }
  const auto& s = use_signal ? trace.signal : trace.emitted_proxy;
  EchoPeak best;
  bool found = false;
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    if (trace.t[k] < lo || trace.t[k] > hi) continue;
    const double m = std::abs(s[k]);
    if (!found || m > best.magnitude) {
      best = {trace.t[k], m, k};
      found = true;
    }
  }
  if (!found) fail("window-outside-trace", "no trace samples inside the echo window");
  return best;
}

double window_energy(const EnsembleTrace& trace, double center, double half_window, bool use_signal) {
  const auto& s = use_signal ? trace.signal : trace.emitted_proxy;
  const double lo = center - half_window, hi = center + half_window;
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < trace.t.size(); ++k) {
    if (trace.t[k] < lo || trace.t[k + 1] > hi) continue;
    e += 0.5 * (std::norm(s[k]) + std::norm(s[k + 1])) * (trace.t[k + 1] - trace.t[k]);
  }
  return e;
}

void write_trace_csv(std::ostream& out, const EnsembleTrace& trace) {
  io::CsvWriter csv(out, {"t_s", "sigma_y_bar", "sigma_z_bar", "re_proxy", "im_proxy"});
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    csv.row({trace.t[k], trace.sigma_y_bar[k], trace.sigma_z_bar[k], trace.emitted_proxy[k].real(),
             trace.emitted_proxy[k].imag()});
  }
}

}  // namespace rappi::ensemble
