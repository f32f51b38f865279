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

#include "rappi/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "rappi/error.hpp"
#include "rappi/units.hpp"

namespace rappi::config {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("config", code, message); }

using Keys = std::set<std::string>;

const Keys& physics_keys() {
  static const Keys k{"protocol",       "tau1_us",         "tau2_us",         "probe_shape",
                      "probe_duration_us", "probe_tip_rad", "rap_duration_us", "rap_rabi_mhz",
                      "rap_chirp_mhz_per_ms", "rap2_chirp_mhz_per_ms", "pi_duration_us", "ideal_pi",
                      "alpha_l",        "slices",          "atoms",           "window_mhz",
                      "profile",        "linewidth_mhz",   "t2_us",           "t1_us",
                      "sample_dt_us",   "dt_max_us"};
  return k;
}

const Keys& cell_keys() {
  static const Keys k{"probe_shape", "probe_duration_us", "probe_tip_rad", "rap_duration_us", "rap_rabi_mhz",
                      "atoms",       "t2_us",             "sample_dt_us",  "dt_max_us",       "requests_file",
                      "cells",       "cell_spacing_mhz",  "tone_span_mhz", "guard_us",        "time_step_us",
                      "crosstalk_threshold"};
  return k;
}

// Keys an experiment reads, in output order.
std::vector<std::string> keys_for(Experiment e) {
  std::vector<std::string> out{"experiment"};
  const auto add = [&](const Keys& k) { out.insert(out.end(), k.begin(), k.end()); };
  switch (e) {
    case Experiment::protocol_run: add(physics_keys()); break;
    case Experiment::depth_sweep:
      add(physics_keys());
      out.insert(out.end(), {"alpha_l_min", "alpha_l_max", "alpha_l_points"});
      break;
    case Experiment::storage_sweep:
      add(physics_keys());
      out.insert(out.end(), {"storage_times_us", "target_eta"});
      break;
    case Experiment::multimode: out.push_back("scenario"); break;
    case Experiment::ram_schedule:
      add(cell_keys());
      out.push_back("verify");
      break;
    case Experiment::crosstalk: add(cell_keys()); break;
    case Experiment::fit: out.insert(out.end(), {"data_file", "form"}); break;
    case Experiment::photon_budget: out.insert(out.end(), {"photons_at_crystal", "chain", "samples", "seed"}); break;
  }
  return out;
}

class Reader {
 public:
  Reader(const json& j, Experiment e) : j_(j) {
    for (const auto& k : keys_for(e)) allowed_.insert(k);
    experiment_ = experiment_name(e);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& out) {
    if (const auto* v = get(key)) out = as_number(key, *v);
  }
  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const auto* v = get(key)) out = v->is_null() ? std::nullopt : std::optional<double>(as_number(key, *v));
  }
  void count(const std::string& key, std::size_t& out) {
    if (const auto* v = get(key)) out = as_count(key, *v);
  }
  void optional_count(const std::string& key, std::optional<std::size_t>& out) {
    if (const auto* v = get(key)) out = v->is_null() ? std::nullopt : std::optional<std::size_t>(as_count(key, *v));
  }
  void text(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) {
      if (!v->is_string()) fail("bad-type", "key '" + key + "' must be a string");
      out = v->get<std::string>();
    }
  }
  void flag(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      if (!v->is_boolean()) fail("bad-type", "key '" + key + "' must be true or false");
      out = v->get<bool>();
    }
  }
  void numbers(const std::string& key, std::vector<double>& out) {
    if (const auto* v = get(key)) {
      if (!v->is_array()) fail("bad-type", "key '" + key + "' must be a list of numbers");
      out.clear();
      for (const auto& x : *v) out.push_back(as_number(key, x));
    }
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number_unsigned()) fail("bad-type", "key '" + key + "' must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!allowed_.count(key)) {
        fail("unknown-key", "key '" + key + "' is not recognised for experiment '" + experiment_ + "'");
      }
    }
  }

 private:
  const json* get(const std::string& key) {
    if (!allowed_.count(key)) return nullptr;
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  static double as_number(const std::string& key, const json& v) {
    if (!v.is_number()) fail("bad-type", "key '" + key + "' must be a number");
    return v.get<double>();
  }
  static std::size_t as_count(const std::string& key, const json& v) {
    if (!v.is_number_unsigned()) fail("bad-type", "key '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }

  const json& j_;
  Keys allowed_;
  std::string experiment_;
};

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::protocol_run: return "protocol-run";
    case Experiment::depth_sweep: return "depth-sweep";
    case Experiment::storage_sweep: return "storage-sweep";
    case Experiment::multimode: return "multimode";
    case Experiment::ram_schedule: return "ram-schedule";
    case Experiment::crosstalk: return "crosstalk";
    case Experiment::fit: return "fit";
    case Experiment::photon_budget: return "photon-budget";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : {Experiment::protocol_run, Experiment::depth_sweep, Experiment::storage_sweep, Experiment::multimode,
                 Experiment::ram_schedule, Experiment::crosstalk, Experiment::fit, Experiment::photon_budget}) {
    if (name == experiment_name(e)) return e;
  }
  fail("unknown-experiment", "unknown experiment '" + name + "'");
}

RunConfig parse(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("parse-error", e.what());
  }
  if (j.is_object() && j.contains("tool") && j.contains("config")) {
    if (j["tool"] != tool_name) fail("parse-error", "manifest was not written by " + std::string(tool_name));
    j = j["config"];
  }
  if (!j.is_object()) fail("parse-error", "configuration must be a JSON object");
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    fail("missing-key", "configuration needs an 'experiment' string");
  }
  RunConfig c;
  c.base_dir = base_dir;
  c.experiment = parse_experiment(j["experiment"].get<std::string>());
  Reader r(j, c.experiment);
  r.text("protocol", c.protocol);
  r.number("tau1_us", c.tau1_us);
  r.number("tau2_us", c.tau2_us);
  r.text("probe_shape", c.probe_shape);
  r.number("probe_duration_us", c.probe_duration_us);
  r.number("probe_tip_rad", c.probe_tip_rad);
  r.number("rap_duration_us", c.rap_duration_us);
  r.number("rap_rabi_mhz", c.rap_rabi_mhz);
  r.number("rap_chirp_mhz_per_ms", c.rap_chirp_mhz_per_ms);
  r.optional_number("rap2_chirp_mhz_per_ms", c.rap2_chirp_mhz_per_ms);
  r.number("pi_duration_us", c.pi_duration_us);
  r.flag("ideal_pi", c.ideal_pi);
  r.number("alpha_l", c.alpha_l);
  r.count("slices", c.slices);
  r.optional_count("atoms", c.atoms);
  r.number("window_mhz", c.window_mhz);
  r.text("profile", c.profile);
  r.number("linewidth_mhz", c.linewidth_mhz);
  r.optional_number("t2_us", c.t2_us);
  r.optional_number("t1_us", c.t1_us);
  r.number("sample_dt_us", c.sample_dt_us);
  r.number("dt_max_us", c.dt_max_us);
  r.number("alpha_l_min", c.alpha_l_min);
  r.number("alpha_l_max", c.alpha_l_max);
  r.count("alpha_l_points", c.alpha_l_points);
  r.numbers("storage_times_us", c.storage_times_us);
  r.optional_number("target_eta", c.target_eta);
  r.text("scenario", c.scenario);
  r.text("requests_file", c.requests_file);
  r.count("cells", c.cells);
  r.number("cell_spacing_mhz", c.cell_spacing_mhz);
  r.number("tone_span_mhz", c.tone_span_mhz);
  r.number("guard_us", c.guard_us);
  r.number("time_step_us", c.time_step_us);
  r.flag("verify", c.verify);
  r.number("crosstalk_threshold", c.crosstalk_threshold);
  r.text("data_file", c.data_file);
  r.text("form", c.form);
  r.number("photons_at_crystal", c.photons_at_crystal);
  r.numbers("chain", c.chain);
  r.count("samples", c.samples);
  r.seed("seed", c.seed);
  r.finish();

  if (c.protocol != "rappi" && c.protocol != "2ppe") fail("bad-value", "protocol must be 'rappi' or '2ppe'");
  if (c.probe_shape != "square" && c.probe_shape != "gaussian") {
    fail("bad-value", "probe_shape must be 'square' or 'gaussian'");
  }
  if (c.profile != "uniform" && c.profile != "gaussian" && c.profile != "lorentzian") {
    fail("bad-value", "profile must be 'uniform', 'gaussian' or 'lorentzian'");
  }
  if (c.experiment == Experiment::depth_sweep && (c.alpha_l_points < 2 || !(c.alpha_l_max > c.alpha_l_min))) {
    fail("bad-value", "depth sweep needs alpha_l_points >= 2 and alpha_l_max > alpha_l_min");
  }
  if (c.experiment == Experiment::fit) {
    analysis::parse_form(c.form);
    if (c.data_file.empty()) fail("missing-key", "fit needs 'data_file'");
  }
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("file-not-found", "cannot open configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

json resolved(const RunConfig& c) {
  json all;
  all["experiment"] = experiment_name(c.experiment);
  all["protocol"] = c.protocol;
  all["tau1_us"] = c.tau1_us;
  all["tau2_us"] = c.tau2_us;
  all["probe_shape"] = c.probe_shape;
  all["probe_duration_us"] = c.probe_duration_us;
  all["probe_tip_rad"] = c.probe_tip_rad;
  all["rap_duration_us"] = c.rap_duration_us;
  all["rap_rabi_mhz"] = c.rap_rabi_mhz;
  all["rap_chirp_mhz_per_ms"] = c.rap_chirp_mhz_per_ms;
  all["rap2_chirp_mhz_per_ms"] = optional_json(c.rap2_chirp_mhz_per_ms);
  all["pi_duration_us"] = c.pi_duration_us;
  all["ideal_pi"] = c.ideal_pi;
  all["alpha_l"] = c.alpha_l;
  all["slices"] = c.slices;
  all["atoms"] = c.atoms ? json(*c.atoms) : json(nullptr);
  all["window_mhz"] = c.window_mhz;
  all["profile"] = c.profile;
  all["linewidth_mhz"] = c.linewidth_mhz;
  all["t2_us"] = optional_json(c.t2_us);
  all["t1_us"] = optional_json(c.t1_us);
  all["sample_dt_us"] = c.sample_dt_us;
  all["dt_max_us"] = c.dt_max_us;
  all["alpha_l_min"] = c.alpha_l_min;
  all["alpha_l_max"] = c.alpha_l_max;
  all["alpha_l_points"] = c.alpha_l_points;
  all["storage_times_us"] = c.storage_times_us;
  all["target_eta"] = optional_json(c.target_eta);
  all["scenario"] = c.scenario;
  all["requests_file"] = c.requests_file;
  all["cells"] = c.cells;
  all["cell_spacing_mhz"] = c.cell_spacing_mhz;
  all["tone_span_mhz"] = c.tone_span_mhz;
  all["guard_us"] = c.guard_us;
  all["time_step_us"] = c.time_step_us;
  all["verify"] = c.verify;
  all["crosstalk_threshold"] = c.crosstalk_threshold;
  all["data_file"] = c.data_file;
  all["form"] = c.form;
  all["photons_at_crystal"] = c.photons_at_crystal;
  all["chain"] = c.chain;
  all["samples"] = c.samples;
  all["seed"] = c.seed;
  json out;
  for (const auto& k : keys_for(c.experiment)) out[k] = all[k];
  return out;
}

json manifest(const RunConfig& c) {
  json m;
  m["tool"] = tool_name;
  m["version"] = tool_version;
  m["config"] = resolved(c);
  return m;
}

protocol::ProtocolRun protocol_run(const RunConfig& c) {
  using namespace units;
  protocol::ProtocolRun r;
  r.kind = c.protocol == "2ppe" ? protocol::Kind::two_ppe : protocol::Kind::rappi;
  r.tau1 = us(c.tau1_us);
  r.tau2 = us(c.tau2_us);
  const auto shape = c.probe_shape == "gaussian" ? pulse::Kind::probe_gaussian : pulse::Kind::probe_square;
  r.probe = pulse::probe_with_area(shape, 0.0, us(c.probe_duration_us), c.probe_tip_rad);
  if (r.kind == protocol::Kind::rappi) {
    r.control = pulse::rap(0.0, us(c.rap_duration_us), mhz(c.rap_rabi_mhz), mhz_per_ms(c.rap_chirp_mhz_per_ms));
    if (c.rap2_chirp_mhz_per_ms) {
      r.second_control = r.control;
      r.second_control->chirp_rate = mhz_per_ms(*c.rap2_chirp_mhz_per_ms);
    }
  } else {
    r.control = protocol::pi_pulse(us(c.pi_duration_us));
    r.ideal_pi = c.ideal_pi;
  }
  r.medium.optical_depth = c.alpha_l;
  r.medium.slices = c.slices;
  auto& e = r.medium.ensemble;
  e.window = mhz(c.window_mhz);
  e.profile = c.profile == "gaussian"     ? ensemble::Profile::gaussian
              : c.profile == "lorentzian" ? ensemble::Profile::lorentzian
                                          : ensemble::Profile::uniform;
  e.linewidth = mhz(c.linewidth_mhz);
  e.t2 = c.t2_us ? us(*c.t2_us) : infinity;
  e.t1 = c.t1_us ? us(*c.t1_us) : infinity;
  r.sample_dt = us(c.sample_dt_us);
  r.dt_max = us(c.dt_max_us);
  r.threads = c.threads;
  // Atom count: explicit, or the smallest passing the revival guard over
  // the longest time the experiment evaluates.
  if (c.atoms) {
    e.atoms = *c.atoms;
  } else {
    double longest = r.kind == protocol::Kind::rappi ? 2.0 * (r.tau2 + r.tau_r()) : 2.0 * r.tau1;
    if (c.experiment == Experiment::storage_sweep) {
      for (double t : c.storage_times_us) longest = std::max(longest, us(t));
    }
    e.atoms = ensemble::atoms_for_span(e.window, longest + 2.5 * r.probe.duration);
  }
  return r;
}

ram::CellPhysics cell_physics(const RunConfig& c) {
  using namespace units;
  ram::CellPhysics p;
  p.probe_kind = c.probe_shape == "gaussian" ? pulse::Kind::probe_gaussian : pulse::Kind::probe_square;
  p.probe_duration = us(c.probe_duration_us);
  p.probe_tip = c.probe_tip_rad;
  p.rap_rabi = mhz(c.rap_rabi_mhz);
  p.tau_r = us(c.rap_duration_us);
  p.t2 = c.t2_us ? us(*c.t2_us) : infinity;
  if (c.atoms) p.min_atoms = *c.atoms;
  p.sample_dt = us(c.sample_dt_us);
  p.dt_max = us(c.dt_max_us);
  p.threads = c.threads;
  return p;
}

ram::ScheduleOptions schedule_options(const RunConfig& c) {
  using namespace units;
  ram::ScheduleOptions o;
  o.tau_r = us(c.rap_duration_us);
  o.probe_duration = us(c.probe_duration_us);
  o.guard = us(c.guard_us);
  o.time_step = us(c.time_step_us);
  return o;
}

std::filesystem::path resolve_path(const RunConfig& c, const std::string& file) {
  std::filesystem::path p(file);
  return p.is_absolute() || c.base_dir.empty() ? p : c.base_dir / p;
}

}  // namespace rappi::config
