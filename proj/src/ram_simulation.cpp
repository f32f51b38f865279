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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"
#include "rappi/error.hpp"
#include "rappi/io.hpp"
#include "rappi/ram.hpp"

namespace rappi::ram {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("ram", code, message); }

const MemoryCell& find_cell(const std::vector<MemoryCell>& cells, int id) {
  for (const auto& c : cells) {
    if (c.id == id) return c;
  }
  fail("unknown-cell", "cell " + std::to_string(id) + " is not defined");
}

// Probe power FWHM in rad/s.
double probe_fwhm(const CellPhysics& ph) {
  if (ph.probe_kind == pulse::Kind::probe_gaussian) {
    const double sigma = ph.probe_duration / 8.0;
    return 2.0 * std::sqrt(std::log(2.0)) / sigma;
  }
  return units::two_pi * 0.8858929413789047 / ph.probe_duration;
}

// Energy of a complex trace in [c - h, c + h] via trapezoids on the samples.
double energy_between(const std::vector<double>& t, const std::vector<ensemble::cplx>& f, double lo, double hi) {
  double e = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (t[k] < lo - 1e-15 || t[k + 1] > hi + 1e-15) continue;
    e += 0.5 * (std::norm(f[k]) + std::norm(f[k + 1])) * (t[k + 1] - t[k]);
  }
  return e;
}

bool inside_event(double lo, double hi, const std::vector<RamEvent>& events) {
  for (const auto& e : events) {
    if (lo < e.t_start + e.duration && e.t_start < hi) return true;
  }
  return false;
}

double json_us(double t) { return std::round(units::to_us(t) * 1e6) / 1e6; }

}  // namespace

CellSimulation simulate_cell(const std::vector<MemoryCell>& cells, int id, const std::vector<double>& probe_times,
                             const std::vector<RamEvent>& events, double t_begin, double t_end,
                             const CellPhysics& ph, bool own_tones_only) {
  const MemoryCell& cell = find_cell(cells, id);
  if (!(t_end > t_begin)) fail("invalid-window", "simulation window is empty");

  struct Timed {
    double start;
    ensemble::Event event;
  };
  std::vector<Timed> timed;
  for (double t : probe_times) {
    auto p = pulse::probe_with_area(ph.probe_kind, t, ph.probe_duration, ph.probe_tip, cell.center);
    timed.push_back({p.start(), ensemble::probe_event(p)});
  }
  const double reach = ph.neighbour_reach * cell.guard * (1.0 + 1e-9);
  for (const auto& e : events) {
    if (e.t_start >= t_end) continue;
    std::vector<pulse::Tone> tones;
    for (int other : e.cells) {
      if (own_tones_only && other != id) continue;
      const auto& oc = find_cell(cells, other);
      if (std::abs(oc.center - cell.center) > reach) continue;
      tones.push_back({oc.center, ph.rap_rabi, oc.tone_span / e.duration});
    }
    if (tones.empty()) continue;
    auto spec = pulse::multitone(e.t_start + 0.5 * e.duration, e.duration, std::move(tones));
    timed.push_back({e.t_start, ensemble::control_event(spec)});
  }
  std::stable_sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) { return a.start < b.start; });
  // Events reaching this band before the window opens still act on it.
  if (!timed.empty()) t_begin = std::min(t_begin, timed.front().start);

  ensemble::EnsembleSpec es;
  es.window = std::max(cell.guard, cell.tone_span + 4.0 * probe_fwhm(ph));
  es.center = cell.center;
  es.t2 = ph.t2;
  es.atoms = ensemble::atoms_for_span(es.window, t_end - t_begin, ph.min_atoms);
  const auto grid = ensemble::build_grid(es, t_end - t_begin);

  ensemble::Sequence seq;
  seq.t_begin = t_begin;
  seq.t_end = t_end;
  for (auto& t : timed) seq.events.push_back(std::move(t.event));
  ensemble::RunOptions ro;
  ro.sample_dt = ph.sample_dt;
  ro.dt_max = ph.dt_max;
  ro.probe_duration = ph.probe_duration;
  ro.frame = cell.center;
  ro.threads = ph.threads;
  CellSimulation sim;
  sim.cell = id;
  sim.atoms = grid.atoms.size();
  sim.trace = ensemble::run_sequence(grid, seq, ro).trace;
  return sim;
}

VerifyReport verify_schedule(const RamSchedule& schedule, const std::vector<MemoryCell>& cells,
                             const VerifyOptions& options) {
  if (!schedule.feasible) fail("infeasible-schedule", "cannot verify a schedule with violations");
  const auto& ph = options.physics;
  const double tp = ph.probe_duration;
  VerifyReport report;
  for (const auto& a : schedule.assignments) {
    const auto& cell = find_cell(cells, a.cell);
    const double t_end = a.t_out + 2.0 * tp + ph.sample_dt;  // one sample of slack for the echo window
    // Both runs share one time grid, opened early enough for every event.
    double t_begin = a.t_in - 0.5 * tp;
    for (const auto& e : schedule.events) t_begin = std::min(t_begin, e.t_start);
    const auto on = simulate_cell(cells, a.cell, {a.t_in}, schedule.events, t_begin, t_end, ph, true);
    const auto full = simulate_cell(cells, a.cell, {a.t_in}, schedule.events, t_begin, t_end, ph, false);
    const auto& t = on.trace.t;

    CellReport r;
    r.cell = a.cell;
    r.t_out = a.t_out;
    r.t_echo = ensemble::find_echo(full.trace, a.t_out, 2.0 * tp).time;
    r.timing_ok = std::abs(r.t_echo - a.t_out) <= tp;
    r.echo_energy = ensemble::window_energy(on.trace, a.t_out, 2.0 * tp);
    r.full_echo_energy = ensemble::window_energy(full.trace, a.t_out, 2.0 * tp);

    // Off-target recall: the largest energy that other cells' tones add in
    // any gated window after the probe and away from this cell's own echo.
    // The detector is gated off while RAP events play. Magnitudes are
    // compared so that a common light-shift phase does not count.
    std::vector<ensemble::cplx> diff(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      diff[k] = std::abs(full.trace.signal[k]) - std::abs(on.trace.signal[k]);
    }
    const double half = 2.0 * tp;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double lo = t[k] - half, hi = t[k] + half;
      if (lo < a.t_in + 0.5 * tp || hi > t.back()) continue;
      if (hi > a.t_out - half && lo < a.t_out + half) continue;
      if (inside_event(lo, hi, schedule.events)) continue;
      r.crosstalk_energy = std::max(r.crosstalk_energy, energy_between(t, diff, lo, hi));
    }
    r.crosstalk_ratio = r.echo_energy > 0.0 ? r.crosstalk_energy / r.echo_energy : units::infinity;
    r.crosstalk_ok = r.crosstalk_ratio < options.crosstalk_threshold;
    if (!r.timing_ok) {
      report.failures.push_back("cell " + std::to_string(a.cell) + ": echo at " + io::format_double(json_us(r.t_echo)) +
                                " us, requested " + io::format_double(json_us(a.t_out)) + " us");
    }
    if (!r.crosstalk_ok) {
      report.failures.push_back("cell " + std::to_string(a.cell) + ": cross-talk ratio " +
                                io::format_double(r.crosstalk_ratio) + " exceeds " +
                                io::format_double(options.crosstalk_threshold));
    }
    if (cell.tone_span > cell.guard) {
      report.failures.push_back("cell " + std::to_string(a.cell) + ": tone span exceeds the cell spacing");
    }
    report.cells.push_back(r);
  }
  report.pass = report.failures.empty();
  return report;
}

std::string verify_json(const VerifyReport& report) {
  nlohmann::ordered_json j;
  j["pass"] = report.pass;
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"cell", c.cell},
                     {"t_out_us", json_us(c.t_out)},
                     {"t_echo_us", json_us(c.t_echo)},
                     {"echo_energy", c.echo_energy},
                     {"full_echo_energy", c.full_echo_energy},
                     {"crosstalk_ratio", c.crosstalk_ratio},
                     {"timing_ok", c.timing_ok},
                     {"crosstalk_ok", c.crosstalk_ok}});
  }
  j["failures"] = report.failures;
  return j.dump(2);
}

const char* multimode_name(MultimodeKind k) {
  switch (k) {
    case MultimodeKind::temporal: return "temporal";
    case MultimodeKind::spectral: return "spectral";
    case MultimodeKind::spectro_temporal: return "spectro-temporal";
  }
  return "unknown";
}

namespace {

// Echo time of a probe at t_in: twice the RAP1-to-RAP2 start separation
// after the input, using the first two events that carry the cell's tone.
double expected_echo(int cell, double t_in, const std::vector<RamEvent>& events) {
  std::vector<double> starts;
  for (const auto& e : events) {
    if (e.t_start > t_in && std::find(e.cells.begin(), e.cells.end(), cell) != e.cells.end()) {
      starts.push_back(e.t_start);
    }
  }
  if (starts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return t_in + 2.0 * (starts[1] - starts[0]);
}

void fill_modes(MultimodeScenario& s) {
  std::map<int, int> bins;
  s.modes.clear();
  double last = 0.0;
  for (const auto& [cell, t] : s.probes) {
    Mode m;
    m.cell = cell;
    m.bin = bins[cell]++;
    m.t_in = t;
    m.t_expected = expected_echo(cell, t, s.events);
    if (std::isfinite(m.t_expected)) last = std::max(last, m.t_expected);
    s.modes.push_back(m);
  }
  s.t_end = last + 2.0 * s.physics.probe_duration + s.physics.sample_dt;
}

RamEvent event(double start_us, double tau_r, std::vector<int> cells) {
  return {units::us(start_us), tau_r, std::move(cells)};
}

}  // namespace

MultimodeScenario temporal_scenario() {
  MultimodeScenario s;
  s.name = "temporal";
  s.cells = {{0, 0.0, units::mhz(4.0), units::mhz(7.6)}};
  s.physics.probe_duration = units::us(1);
  s.physics.rap_rabi = units::mhz(0.6);
  s.physics.tau_r = units::us(50);  // 4 MHz swept at 2pi*80 MHz/ms
  for (int k = 0; k < 26; ++k) s.probes.emplace_back(0, units::us(3.0 * k));
  s.events = {event(80, s.physics.tau_r, {0}), event(220, s.physics.tau_r, {0})};
  fill_modes(s);
  return s;
}

MultimodeScenario spectral_scenario(int variant) {
  MultimodeScenario s;
  s.cells = cell_row(3, units::mhz(3.5), units::mhz(1.5));
  const double tr = s.physics.tau_r;
  switch (variant) {
    case 1:
      s.name = "spectral-simultaneous";
      s.probes = {{0, 0.0}, {1, 0.0}, {2, 0.0}};
      s.events = {event(10, tr, {0, 1, 2}), event(80, tr, {0, 1, 2})};
      break;
    case 2:
      s.name = "spectral-fifo";
      s.probes = {{0, 0.0}, {1, units::us(4)}, {2, units::us(8)}};
      s.events = {event(14, tr, {0, 1, 2}), event(84, tr, {0, 1, 2})};
      break;
    case 3:
      s.name = "spectral-early-center";
      s.probes = {{0, 0.0}, {1, units::us(4)}, {2, units::us(8)}};
      s.events = {event(14, tr, {0, 1, 2}), event(84, tr, {1}), event(150, tr, {0, 2})};
      break;
    case 4:
      s.name = "spectral-on-demand";
      s.probes = {{0, 0.0}, {1, units::us(4)}, {2, units::us(8)}};
      s.events = {event(14, tr, {0, 1, 2}), event(84, tr, {2}), event(150, tr, {0}), event(280, tr, {1})};
      break;
    default:
      fail("invalid-scenario", "spectral variant must be 1..4, got " + std::to_string(variant));
  }
  fill_modes(s);
  return s;
}

MultimodeScenario spectro_temporal_scenario() {
  MultimodeScenario s;
  s.name = "spectro-temporal";
  s.cells = cell_row(3, units::mhz(3.5), units::mhz(1.5));
  const bool mask[3][6] = {{1, 0, 1, 1, 0, 1}, {0, 1, 1, 0, 1, 1}, {1, 1, 0, 1, 0, 1}};
  for (int bin = 0; bin < 6; ++bin) {
    for (int c = 0; c < 3; ++c) {
      if (mask[c][bin]) s.probes.emplace_back(c, units::us(4.0 * bin));
    }
  }
  s.events = {event(26, s.physics.tau_r, {0, 1, 2}), event(106, s.physics.tau_r, {0, 1, 2})};
  fill_modes(s);
  return s;
}

MultimodeResult multimode_run(const MultimodeScenario& s) {
  if (s.probes.empty()) fail("invalid-scenario", "no probes");
  const double tp = s.physics.probe_duration;
  for (const auto& [cell, t] : s.probes) {
    for (const auto& e : s.events) {
      if (t + 0.5 * tp > e.t_start && t - 0.5 * tp < e.t_start + e.duration) {
        fail("train-collision", "probe at " + io::format_double(json_us(t)) + " us overlaps the RAP event at " +
                                    io::format_double(json_us(e.t_start)) + " us");
      }
    }
  }
  MultimodeResult r;
  r.name = s.name;
  r.modes = s.modes;
  for (const auto& m : r.modes) {
    if (!std::isfinite(m.t_expected)) continue;
    if (inside_event(m.t_expected - 0.5 * tp, m.t_expected + 0.5 * tp, s.events)) {
      fail("train-collision", "echo of cell " + std::to_string(m.cell) + " at " +
                                  io::format_double(json_us(m.t_expected)) + " us falls inside a RAP event");
    }
  }

  std::map<int, std::vector<double>> by_cell;
  for (const auto& [cell, t] : s.probes) by_cell[cell].push_back(t);
  double t_begin = std::numeric_limits<double>::infinity();
  for (const auto& [cell, t] : s.probes) t_begin = std::min(t_begin, t - 0.5 * tp);
  for (const auto& [cell, times] : by_cell) {
    r.traces.push_back(simulate_cell(s.cells, cell, times, s.events, t_begin, s.t_end, s.physics, false));
  }
  const auto trace_of = [&](int cell) -> const ensemble::EnsembleTrace& {
    for (const auto& c : r.traces) {
      if (c.cell == cell) return c.trace;
    }
    fail("unknown-cell", "no trace for cell " + std::to_string(cell));
  };

  std::vector<double> eff;
  for (auto& m : r.modes) {
    const auto& tr = trace_of(m.cell);
    const double input = ensemble::window_energy(tr, m.t_in, 0.5 * tp);
    if (!std::isfinite(m.t_expected)) continue;
    m.t_echo = ensemble::find_echo(tr, m.t_expected, 0.5 * tp).time;
    m.energy = ensemble::window_energy(tr, m.t_expected, 0.5 * tp);
    m.efficiency = input > 0.0 ? m.energy / input : 0.0;
    m.recalled = m.efficiency > 0.1;
    if (m.recalled) eff.push_back(m.efficiency);
  }
  if (!eff.empty()) {
    const auto [lo, hi] = std::minmax_element(eff.begin(), eff.end());
    double mean = 0.0;
    for (double e : eff) mean += e;
    mean /= static_cast<double>(eff.size());
    r.energy_spread = (*hi - *lo) / mean;
  }

  // Recall order within each cell must follow input order; spacing is
  // compared between consecutive inputs of the same cell.
  for (const auto& [cell, times] : by_cell) {
    std::vector<const Mode*> ms;
    for (const auto& m : r.modes) {
      if (m.cell == cell && m.recalled) ms.push_back(&m);
    }
    std::sort(ms.begin(), ms.end(), [](const Mode* a, const Mode* b) { return a->t_in < b->t_in; });
    for (std::size_t k = 1; k < ms.size(); ++k) {
      if (!(ms[k]->t_echo > ms[k - 1]->t_echo)) r.fifo = false;
      const double err = std::abs((ms[k]->t_echo - ms[k - 1]->t_echo) - (ms[k]->t_in - ms[k - 1]->t_in));
      r.spacing_error = std::max(r.spacing_error, err);
    }
  }
  // Leakage: signal a cell shows at the recall times of other cells' modes.
  for (auto& m : r.modes) {
    if (!m.recalled) continue;
    for (const auto& other : r.modes) {
      if (other.cell == m.cell || !std::isfinite(other.t_expected)) continue;
      bool own_echo_near = false;
      for (const auto& mine : r.modes) {
        if (mine.cell == m.cell && std::abs(mine.t_expected - other.t_expected) < 2.0 * tp) own_echo_near = true;
      }
      if (own_echo_near) continue;
      const double e = ensemble::window_energy(trace_of(m.cell), other.t_expected, 0.5 * tp);
      m.leakage = std::max(m.leakage, e / m.energy);
    }
  }
  return r;
}

}  // namespace rappi::ram
