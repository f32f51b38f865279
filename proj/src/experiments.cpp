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

#include "rappi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "rappi/analysis.hpp"
#include "rappi/error.hpp"
#include "rappi/io.hpp"
#include "rappi/propagation.hpp"
#include "rappi/protocol.hpp"
#include "rappi/ram.hpp"
#include "rappi/units.hpp"

namespace rappi::experiments {

namespace {

using config::Experiment;
using config::RunConfig;
using units::to_us;

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("experiments", code, message); }

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

bool is_protocol(Experiment e) {
  return e == Experiment::protocol_run || e == Experiment::depth_sweep || e == Experiment::storage_sweep;
}

std::vector<double> storage_times(const RunConfig& c) {
  std::vector<double> t;
  for (double x : c.storage_times_us) t.push_back(units::us(x));
  return t;
}

double simulation_span(const RunConfig& c, const protocol::ProtocolRun& run) {
  if (c.experiment == Experiment::storage_sweep) {
    const auto t = storage_times(c);
    if (t.empty()) fail("bad-value", "storage_times_us is empty");
    return *std::max_element(t.begin(), t.end()) + 2.5 * run.probe.duration;
  }
  const auto seq = protocol::build_sequence(run).sequence;
  return seq.t_end - seq.t_begin;
}

std::vector<double> depth_grid(const RunConfig& c) {
  std::vector<double> d(c.alpha_l_points);
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = c.alpha_l_min + (c.alpha_l_max - c.alpha_l_min) * static_cast<double>(k) /
                               static_cast<double>(d.size() - 1);
  }
  return d;
}

double ideal_efficiency(protocol::Kind kind, double depth) {
  return kind == protocol::Kind::rappi ? depth * depth * std::exp(-depth)
                                       : 4.0 * std::sinh(0.5 * depth) * std::sinh(0.5 * depth);
}

// --- protocol experiments --------------------------------------------------

Artifacts run_protocol(const RunConfig& c) {
  const auto run = config::protocol_run(c);
  const auto r = protocol::run_experiment(run);
  Artifacts a;
  auto& s = a.summary;
  s["protocol"] = protocol::kind_name(run.kind);
  s["atoms"] = run.medium.ensemble.atoms;
  s["eta"] = number(r.eta);
  s["t_echo_predicted_us"] = to_us(r.t_echo_predicted);
  s["t_echo_measured_us"] = to_us(r.t_echo_measured);
  s["t_echo_trace_us"] = to_us(r.t_echo_trace);
  s["t_primary_us"] = to_us(r.built.t_primary);
  s["primary_energy"] = r.primary_energy;
  s["secondary_energy"] = r.secondary_energy;
  s["suppression_ratio"] = number(r.suppression_ratio);
  s["snr"] = number(r.snr);
  s["echo_gain"] = r.propagation.echo_gain;

  Table field{"field", {"t_us", "echo_re", "echo_im", "fid_re", "fid_im", "total_power"}, {}};
  const auto& p = r.propagation;
  for (std::size_t k = 0; k < p.t.size(); ++k) {
    field.rows.push_back({to_us(p.t[k]), p.e_echo[k].real(), p.e_echo[k].imag(), p.fid[k].real(), p.fid[k].imag(),
                          std::norm(p.e_out[k])});
  }
  Table trace{"trace", {"t_us", "sigma_y", "sigma_z", "signal_re", "signal_im"}, {}};
  for (std::size_t k = 0; k < r.trace.t.size(); ++k) {
    trace.rows.push_back({to_us(r.trace.t[k]), r.trace.sigma_y_bar[k], r.trace.sigma_z_bar[k],
                          r.trace.signal[k].real(), r.trace.signal[k].imag()});
  }
  a.tables = {std::move(field), std::move(trace)};
  return a;
}

Artifacts depth_sweep(const RunConfig& c) {
  const auto run = config::protocol_run(c);
  const auto prep = protocol::prepare(run, simulation_span(c, run));
  const auto sweep = protocol::depth_sweep(prep, depth_grid(c));
  Artifacts a;
  Table t{"sweep", {"alpha_l", "efficiency", "ideal"}, {}};
  std::size_t best = 0;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    t.rows.push_back({sweep[k].optical_depth, sweep[k].efficiency, ideal_efficiency(run.kind, sweep[k].optical_depth)});
    if (sweep[k].efficiency > sweep[best].efficiency) best = k;
  }
  a.summary["protocol"] = protocol::kind_name(run.kind);
  a.summary["atoms"] = prep.grid.atoms.size();
  a.summary["points"] = sweep.size();
  a.summary["peak_alpha_l"] = sweep[best].optical_depth;
  a.summary["peak_efficiency"] = sweep[best].efficiency;
  a.tables.push_back(std::move(t));
  return a;
}

Artifacts storage_sweep(const RunConfig& c) {
  auto run = config::protocol_run(c);
  const double span = simulation_span(c, run);
  const auto times = storage_times(c);
  Artifacts a;
  auto prep = protocol::prepare(run, span);
  if (c.target_eta) {
    // Depth whose decay curve extrapolates to target_eta at zero storage
    // time. The lossless efficiency is tuned first; the ratio between the
    // extrapolated amplitude and the lossless efficiency barely depends on
    // the depth, so a few corrections converge.
    auto lossless = run;
    lossless.medium.ensemble.t2 = units::infinity;
    lossless.medium.ensemble.t1 = units::infinity;
    const auto reference = protocol::prepare(lossless, span);
    const double target = *c.target_eta;
    double goal = target;
    for (int pass = 0; pass < 4; ++pass) {
      const double depth = protocol::tune_optical_depth(reference, goal);
      prep.run.medium.optical_depth = depth;
      const double amplitude = protocol::efficiency_vs_storage(prep, times).fit.amplitude;
      if (std::abs(amplitude / target - 1.0) < 1e-4) break;
      goal *= target / amplitude;
    }
    a.summary["target_eta"] = target;
    a.summary["lossless_eta"] = protocol::efficiency(reference, prep.run.medium.optical_depth);
  }
  a.summary["alpha_l"] = prep.run.medium.optical_depth;
  a.summary["atoms"] = run.medium.ensemble.atoms;
  const auto curve = protocol::efficiency_vs_storage(prep, times);
  Table t{"storage", {"t_echo_us", "efficiency", "fit"}, {}};
  for (const auto& p : curve.points) t.rows.push_back({to_us(p.t_echo), p.efficiency, curve.fit.evaluate(p.t_echo)});
  auto& f = a.summary["fit"];
  f["form"] = analysis::form_name(curve.fit.form);
  f["amplitude"] = curve.fit.amplitude;
  f["amplitude_stderr"] = curve.fit.amplitude_stderr;
  f["time_constant_us"] = to_us(curve.fit.time_constant);
  f["time_constant_stderr_us"] = to_us(curve.fit.time_constant_stderr);
  f["residual"] = curve.fit.residual;
  a.tables.push_back(std::move(t));
  return a;
}

// --- multimode ---------------------------------------------------------------

ram::MultimodeScenario scenario_by_name(const std::string& name) {
  if (name == "temporal") return ram::temporal_scenario();
  if (name == "spectro-temporal") return ram::spectro_temporal_scenario();
  for (int v = 1; v <= 4; ++v) {
    auto s = ram::spectral_scenario(v);
    if (s.name == name) return s;
  }
  throw Error("config", "bad-value",
              "scenario must be temporal, spectral-simultaneous, spectral-fifo, spectral-early-center, "
              "spectral-on-demand or spectro-temporal, got '" + name + "'");
}

Artifacts multimode(const RunConfig& c) {
  auto s = scenario_by_name(c.scenario);
  s.physics.threads = c.threads;
  const auto r = ram::multimode_run(s);
  Artifacts a;
  a.summary["scenario"] = r.name;
  a.summary["modes"] = r.modes.size();
  std::size_t recalled = 0;
  for (const auto& m : r.modes) recalled += m.recalled ? 1 : 0;
  a.summary["recalled"] = recalled;
  a.summary["fifo"] = r.fifo;
  a.summary["spacing_error_us"] = to_us(r.spacing_error);
  a.summary["energy_spread"] = number(r.energy_spread);
  double leak = 0.0;
  for (const auto& m : r.modes) leak = std::max(leak, m.leakage);
  a.summary["max_leakage"] = number(leak);

  Table modes{"modes",
              {"cell", "bin", "t_in_us", "t_expected_us", "t_echo_us", "energy", "efficiency", "leakage", "recalled"},
              {}};
  for (const auto& m : r.modes) {
    modes.rows.push_back({static_cast<double>(m.cell), static_cast<double>(m.bin), to_us(m.t_in), to_us(m.t_expected),
                          to_us(m.t_echo), m.energy, m.efficiency, m.leakage, m.recalled ? 1.0 : 0.0});
  }
  a.tables.push_back(std::move(modes));
  for (const auto& sim : r.traces) {
    Table t{"trace-cell" + std::to_string(sim.cell), {"t_us", "signal_re", "signal_im"}, {}};
    for (std::size_t k = 0; k < sim.trace.t.size(); ++k) {
      t.rows.push_back({to_us(sim.trace.t[k]), sim.trace.signal[k].real(), sim.trace.signal[k].imag()});
    }
    a.tables.push_back(std::move(t));
  }
  return a;
}

// --- random access memory ----------------------------------------------------

std::vector<ram::MemoryCell> memory_cells(const RunConfig& c) {
  return ram::cell_row(c.cells, units::mhz(c.cell_spacing_mhz), units::mhz(c.tone_span_mhz));
}

std::vector<ram::RamRequest> memory_requests(const RunConfig& c) {
  if (c.requests_file.empty()) return ram::example_requests();
  return ram::read_requests(config::resolve_path(c, c.requests_file).string());
}

void add_verification(Artifacts& a, const ram::RamSchedule& sched, const std::vector<ram::MemoryCell>& cells,
                      const RunConfig& c) {
  ram::VerifyOptions vo;
  vo.physics = config::cell_physics(c);
  vo.crosstalk_threshold = c.crosstalk_threshold;
  const auto report = ram::verify_schedule(sched, cells, vo);
  double worst = 0.0, worst_shift = 0.0;
  Table t{"verify",
          {"cell", "t_out_us", "t_echo_us", "echo_energy", "full_echo_energy", "crosstalk_energy", "crosstalk_ratio",
           "timing_ok", "crosstalk_ok"},
          {}};
  for (const auto& r : report.cells) {
    worst = std::max(worst, r.crosstalk_ratio);
    worst_shift = std::max(worst_shift, std::abs(r.t_echo - r.t_out));
    t.rows.push_back({static_cast<double>(r.cell), to_us(r.t_out), to_us(r.t_echo), r.echo_energy, r.full_echo_energy,
                      r.crosstalk_energy, r.crosstalk_ratio, r.timing_ok ? 1.0 : 0.0, r.crosstalk_ok ? 1.0 : 0.0});
  }
  auto& v = a.summary["verification"];
  v["pass"] = report.pass;
  v["max_crosstalk_ratio"] = number(worst);
  v["max_echo_shift_us"] = to_us(worst_shift);
  v["failures"] = report.failures;
  a.tables.push_back(std::move(t));
  a.files.emplace_back("verify.json", ram::verify_json(report) + "\n");
}

Artifacts memory(const RunConfig& c, bool verify) {
  const auto cells = memory_cells(c);
  ram::validate_cells(cells, c.experiment == Experiment::crosstalk);
  const auto sched = ram::schedule(memory_requests(c), cells, config::schedule_options(c));
  Artifacts a;
  a.summary["cells"] = cells.size();
  a.summary["requests"] = sched.assignments.size();
  a.summary["feasible"] = sched.feasible;
  a.summary["event_count"] = sched.events.size();
  a.summary["violations"] = sched.violations.size();
  Table t{"assignments", {"cell", "rap1_event", "rap2_event", "rap1_start_us", "rap2_start_us", "t_in_us", "t_out_us"}, {}};
  for (const auto& x : sched.assignments) {
    t.rows.push_back({static_cast<double>(x.cell), static_cast<double>(x.first), static_cast<double>(x.second),
                      to_us(sched.events[x.first].t_start), to_us(sched.events[x.second].t_start), to_us(x.t_in),
                      to_us(x.t_out)});
  }
  a.tables.push_back(std::move(t));
  a.files.emplace_back("schedule.json", ram::schedule_json(sched) + "\n");
  if (verify) {
    if (!sched.feasible) fail("infeasible-schedule", "schedule has violations: " + sched.violations.front().message);
    add_verification(a, sched, cells, c);
  }
  return a;
}

// --- fit and photon budget -------------------------------------------------

Artifacts fit(const RunConfig& c) {
  const auto table = io::read_csv(config::resolve_path(c, c.data_file));
  if (table.header.size() < 2 || table.header[0] != "t_us") {
    fail("bad-data", "fit data needs columns t_us and a value column");
  }
  std::vector<double> t, y;
  for (const auto& row : table.rows) {
    t.push_back(units::us(row[0]));
    y.push_back(row[1]);
  }
  const auto model = analysis::fit_decay(t, y, analysis::parse_form(c.form));
  Artifacts a;
  a.summary["form"] = analysis::form_name(model.form);
  a.summary["points"] = model.points;
  a.summary["amplitude"] = model.amplitude;
  a.summary["amplitude_stderr"] = model.amplitude_stderr;
  a.summary["time_constant_us"] = to_us(model.time_constant);
  a.summary["time_constant_stderr_us"] = to_us(model.time_constant_stderr);
  a.summary["residual"] = model.residual;
  Table out{"fit", {"t_us", table.header[1], "model"}, {}};
  for (std::size_t k = 0; k < t.size(); ++k) out.rows.push_back({to_us(t[k]), y[k], model.evaluate(t[k])});
  a.tables.push_back(std::move(out));
  return a;
}

Artifacts photon_budget(const RunConfig& c) {
  const auto b = propagation::photon_budget(c.photons_at_crystal, c.chain, c.samples, c.seed);
  Artifacts a;
  a.summary["photons_at_crystal"] = c.photons_at_crystal;
  a.summary["chain_efficiency"] = b.chain_efficiency;
  a.summary["expected_detections"] = b.expected;
  if (!b.draws.empty()) {
    double mean = 0.0;
    Table t{"draws", {"shot", "detections"}, {}};
    for (std::size_t k = 0; k < b.draws.size(); ++k) {
      mean += static_cast<double>(b.draws[k]);
      t.rows.push_back({static_cast<double>(k), static_cast<double>(b.draws[k])});
    }
    a.summary["samples"] = b.draws.size();
    a.summary["sample_mean"] = mean / static_cast<double>(b.draws.size());
    a.tables.push_back(std::move(t));
  }
  return a;
}

// --- validation --------------------------------------------------------------

class Guards {
 public:
  // Runs `check`; a thrown library error marks the guard as failed.
  bool check(const std::string& name, const std::function<void(json&)>& check) {
    json g;
    g["name"] = name;
    try {
      check(g);
      if (!g.contains("pass")) g["pass"] = true;
    } catch (const Error& e) {
      g["pass"] = false;
      g["module"] = e.module();
      g["code"] = e.code();
      g["message"] = e.what();
    }
    const bool pass = g["pass"].get<bool>();
    ok_ = ok_ && pass;
    list_.push_back(std::move(g));
    return pass;
  }
  bool ok() const { return ok_; }
  const json& list() const { return list_; }

 private:
  json list_ = json::array();
  bool ok_ = true;
};

void validate_protocol(const RunConfig& c, json& derived, Guards& guards) {
  protocol::ProtocolRun run;
  if (!guards.check("configuration", [&](json&) { run = config::protocol_run(c); })) return;
  derived["atoms"] = run.medium.ensemble.atoms;
  const bool timing_ok = guards.check("timing", [&](json&) { run.validate(); });
  if (timing_ok) {
    derived["t_echo_predicted_us"] = to_us(protocol::predicted_echo_time(run));
    if (run.kind == protocol::Kind::rappi) derived["t_primary_us"] = to_us(2.0 * run.tau1 + run.tau_r());
  }
  if (c.experiment == Experiment::storage_sweep) {
    guards.check("storage-timing", [&](json&) {
      for (double te : storage_times(c)) {
        auto r = run;
        const auto tm = protocol::timing_for_echo(run, te);
        r.tau1 = tm.tau1;
        r.tau2 = tm.tau2;
        r.validate();
      }
    });
  }
  guards.check("probe-linear", [&](json& g) {
    g["tip_rad"] = c.probe_tip_rad;
    g["limit_rad"] = propagation::max_probe_tip;
    g["pass"] = c.probe_tip_rad <= propagation::max_probe_tip;
  });
  const auto& spec = run.medium.ensemble;
  const double spacing = spec.window / static_cast<double>(spec.atoms > 1 ? spec.atoms - 1 : 1);
  derived["revival_time_us"] = to_us(units::two_pi / spacing);
  if (timing_ok || c.experiment == Experiment::storage_sweep) {
    double span = 0.0;
    const bool span_ok = guards.check("simulation-span", [&](json&) { span = simulation_span(c, run); });
    if (span_ok) {
      derived["simulation_span_us"] = to_us(span);
      guards.check("revival", [&](json& g) {
        g["revival_time_us"] = to_us(units::two_pi / spacing);
        g["required_us"] = to_us(2.0 * span);
        ensemble::build_grid(spec, span);
      });
    }
  }
  if (run.kind == protocol::Kind::rappi) {
    pulse::Conditions cond;
    const bool cond_ok = guards.check("pulse-conditions", [&](json&) { cond = pulse::check_conditions(run.control, run.probe); });
    if (cond_ok) {
      const pulse::Thresholds th;
      derived["adiabaticity_ratio"] = cond.adiabaticity_ratio;
      derived["bandwidth_ratio"] = cond.bandwidth_ratio;
      derived["rap_span_mhz"] = cond.span_hz * 1e-6;
      derived["probe_fwhm_mhz"] = cond.probe_fwhm_hz * 1e-6;
      guards.check("adiabaticity", [&](json& g) {
        g["value"] = cond.adiabaticity_ratio;
        g["threshold"] = th.adiabaticity;
        g["pass"] = cond.adiabatic;
      });
      guards.check("bandwidth", [&](json& g) {
        g["value"] = cond.bandwidth_ratio;
        g["threshold"] = th.bandwidth;
        g["pass"] = cond.bandwidth;
      });
      guards.check("window", [&](json& g) {
        g["window_mhz"] = c.window_mhz;
        g["required_mhz"] = (cond.span_hz + 4.0 * cond.probe_fwhm_hz) * 1e-6;
        ensemble::check_window(spec, units::two_pi * cond.span_hz, units::two_pi * cond.probe_fwhm_hz);
      });
    }
  }
}

void validate_memory(const RunConfig& c, json& derived, Guards& guards) {
  std::vector<ram::MemoryCell> cells;
  const bool cells_ok = guards.check("cells", [&](json&) {
    cells = memory_cells(c);
    ram::validate_cells(cells, c.experiment == Experiment::crosstalk);
  });
  std::vector<ram::RamRequest> requests;
  const bool requests_ok = guards.check("requests", [&](json& g) {
    requests = memory_requests(c);
    g["count"] = requests.size();
  });
  if (!cells_ok || !requests_ok) return;
  const auto opts = config::schedule_options(c);
  guards.check("request-windows", [&](json&) {
    for (const auto& r : requests) ram::rap1_range(r, opts);
  });
  guards.check("schedule", [&](json& g) {
    const auto s = ram::schedule(requests, cells, opts);
    g["event_count"] = s.events.size();
    g["pass"] = s.feasible;
    derived["event_count"] = s.events.size();
  });
  derived["cells"] = cells.size();
  derived["cell_spacing_mhz"] = c.cell_spacing_mhz;
  derived["tone_span_mhz"] = c.tone_span_mhz;
}

}  // namespace

Artifacts run(const RunConfig& c) {
  switch (c.experiment) {
    case Experiment::protocol_run: return run_protocol(c);
    case Experiment::depth_sweep: return depth_sweep(c);
    case Experiment::storage_sweep: return storage_sweep(c);
    case Experiment::multimode: return multimode(c);
    case Experiment::ram_schedule: return memory(c, c.verify);
    case Experiment::crosstalk: return memory(c, true);
    case Experiment::fit: return fit(c);
    case Experiment::photon_budget: return photon_budget(c);
  }
  fail("unknown-experiment", "unhandled experiment");
}

json validate_report(const RunConfig& c) {
  json report;
  report["experiment"] = config::experiment_name(c.experiment);
  report["config"] = config::resolved(c);
  json derived = json::object();
  Guards guards;
  if (is_protocol(c.experiment)) {
    validate_protocol(c, derived, guards);
  } else if (c.experiment == Experiment::ram_schedule || c.experiment == Experiment::crosstalk) {
    validate_memory(c, derived, guards);
  } else if (c.experiment == Experiment::multimode) {
    guards.check("scenario", [&](json& g) {
      const auto s = scenario_by_name(c.scenario);
      g["modes"] = s.modes.size();
      derived["modes"] = s.modes.size();
      derived["events"] = s.events.size();
    });
  } else if (c.experiment == Experiment::fit) {
    guards.check("data", [&](json& g) {
      const auto t = io::read_csv(config::resolve_path(c, c.data_file));
      g["points"] = t.rows.size();
      g["pass"] = t.rows.size() >= 3;
    });
  } else {
    guards.check("chain", [&](json&) {
      const auto b = propagation::photon_budget(c.photons_at_crystal, c.chain);
      derived["chain_efficiency"] = b.chain_efficiency;
      derived["expected_detections"] = b.expected;
    });
  }
  report["derived"] = derived;
  report["guards"] = guards.list();
  report["ok"] = guards.ok();
  return report;
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw Error("config", "bad-value", "format must be csv or json, got '" + name + "'");
}

std::vector<std::filesystem::path> write(const Artifacts& a, const RunConfig& c, const std::filesystem::path& out,
                                         Format format) {
  std::filesystem::create_directories(out);
  std::vector<std::filesystem::path> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    io::write_file(out / name, text);
    written.push_back(out / name);
  };
  json summary;
  summary["experiment"] = config::experiment_name(c.experiment);
  for (const auto& [k, v] : a.summary.items()) summary[k] = v;
  put("summary.json", summary.dump(2) + "\n");
  put("manifest.json", config::manifest(c).dump(2) + "\n");
  for (const auto& t : a.tables) {
    if (format == Format::csv) {
      std::ostringstream ss;
      io::CsvWriter w(ss, t.columns);
      for (const auto& row : t.rows) w.row(row);
      put(t.name + ".csv", ss.str());
    } else {
      json j;
      j["columns"] = t.columns;
      auto& rows = j["rows"] = json::array();
      for (const auto& row : t.rows) {
        json r = json::array();
        for (double x : row) r.push_back(number(x));
        rows.push_back(std::move(r));
      }
      put(t.name + ".json", j.dump() + "\n");
    }
  }
  for (const auto& [name, text] : a.files) put(name, text);
  return written;
}

// --- bundled fixtures --------------------------------------------------------

namespace {

std::string config_text(json j) { return j.dump(2) + "\n"; }

json base(const char* experiment) {
  json j;
  j["experiment"] = experiment;
  return j;
}

// Decay points y = a*exp(-k*t/T) on the given times, with fixed relative
// perturbations so that the fit has something to do.
std::string decay_csv(const std::string& column, double amplitude, double rate_factor, double time_constant_us,
                      const std::vector<double>& t_us, const std::string& note) {
  static const double jitter[] = {0.02, -0.03, 0.01, 0.03, -0.02, -0.01, 0.02, -0.03, 0.01, 0.0};
  std::ostringstream ss;
  ss << "# " << note << "\n";
  io::CsvWriter w(ss, {"t_us", column});
  for (std::size_t k = 0; k < t_us.size(); ++k) {
    const double y = amplitude * std::exp(-rate_factor * t_us[k] / time_constant_us) * (1.0 + jitter[k % 10]);
    w.row({t_us[k], y});
  }
  return ss.str();
}

std::string requests_csv(const std::vector<ram::RamRequest>& requests) {
  std::ostringstream ss;
  io::CsvWriter w(ss, {"cell", "t_in_us", "t_out_us"});
  // Picosecond rounding hides the seconds-to-microseconds round trip.
  const auto tidy = [](double t) { return std::round(to_us(t) * 1e6) / 1e6; };
  for (const auto& r : requests) w.row({static_cast<double>(r.cell), tidy(r.t_in), tidy(r.t_out)});
  return ss.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> bundled_fixtures() {
  std::vector<std::pair<std::string, std::string>> out;
  const auto add = [&](const std::string& name, const json& j) { out.emplace_back(name, config_text(j)); };

  add("protocol-run.json", base("protocol-run"));
  {
    auto j = base("protocol-run");
    j["protocol"] = "2ppe";
    j["tau1_us"] = 70.0;
    j["ideal_pi"] = true;
    add("protocol-run-2ppe.json", j);
  }
  {
    // A smooth probe whose band sits well inside the RAP sweep.
    auto j = base("depth-sweep");
    j["probe_shape"] = "gaussian";
    j["probe_duration_us"] = 6.0;
    j["atoms"] = nullptr;
    add("depth-sweep.json", j);
    j["probe_shape"] = "square";
    j["probe_duration_us"] = 2.0;
    j["atoms"] = 1001;
    add("depth-sweep-square.json", j);
  }
  {
    auto j = base("depth-sweep");
    j["protocol"] = "2ppe";
    j["tau1_us"] = 50.0;
    j["ideal_pi"] = true;
    add("depth-sweep-2ppe.json", j);
  }
  {
    auto j = base("storage-sweep");
    j["t2_us"] = 586.0;
    j["atoms"] = nullptr;
    j["target_eta"] = 0.48;
    add("storage-sweep.json", j);
  }
  for (const char* s : {"temporal", "spectral-simultaneous", "spectral-fifo", "spectral-early-center",
                        "spectral-on-demand", "spectro-temporal"}) {
    auto j = base("multimode");
    j["scenario"] = s;
    add(std::string("multimode-") + s + ".json", j);
  }
  out.emplace_back("ram-requests.csv", requests_csv(ram::example_requests()));
  {
    auto j = base("ram-schedule");
    j["requests_file"] = "ram-requests.csv";
    add("ram-schedule.json", j);
  }
  {
    // Two neighbouring cells. Cell 4 is written and read while cell 3 holds
    // its probe, and cell 4's echo of cell 3's band would land in an open
    // detection window. The 1 us probe (FWHM 0.89 MHz) fills most of the
    // cell's tone span.
    const std::vector<ram::RamRequest> pair{{3, 0.0, units::us(600)}, {4, units::us(60), units::us(300)}};
    out.emplace_back("crosstalk-requests.csv", requests_csv(pair));
    auto j = base("crosstalk");
    j["requests_file"] = "crosstalk-requests.csv";
    j["probe_duration_us"] = 1.0;
    add("crosstalk.json", j);
    j["tone_span_mhz"] = 1.2 * 3.5;
    add("crosstalk-overlap.json", j);
  }
  out.emplace_back("memory-decay.csv",
                   decay_csv("efficiency", 0.28 * std::exp(280.0 / 365.09), 2.0, 365.09,
                             {140, 180, 240, 300, 360, 420, 480, 560, 700},
                             "synthetic memory decay, 28% at 140 us, T = 365.09 us, fixed +-3% perturbations"));
  out.emplace_back("echo-decay.csv", decay_csv("intensity", 1.0, 4.0, 585.9, {20, 60, 100, 150, 200, 260, 320, 400},
                                               "synthetic two-pulse echo decay, T = 585.9 us, fixed +-3% perturbations"));
  {
    auto j = base("fit");
    j["data_file"] = "memory-decay.csv";
    j["form"] = "memory";
    add("fit-memory.json", j);
    j["data_file"] = "echo-decay.csv";
    j["form"] = "echo-intensity";
    add("fit-echo.json", j);
  }
  {
    auto j = base("photon-budget");
    j["samples"] = 1000;
    j["seed"] = 1;
    add("photon-budget.json", j);
  }
  {
    auto j = base("protocol-run");
    j["tau1_us"] = 20.0;
    j["tau2_us"] = 10.0;
    add("invalid-timing.json", j);
  }
  {
    auto j = base("storage-sweep");
    j["atoms"] = 1001;
    j["window_mhz"] = 10.0;
    j["storage_times_us"] = {140.0, 420.0, 700.0};
    add("revival-failure.json", j);
  }
  return out;
}

}  // namespace rappi::experiments
