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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../common/schedule_oracle.hpp"
#include "rappi/config.hpp"
#include "rappi/ensemble.hpp"
#include "rappi/error.hpp"
#include "rappi/ram.hpp"
#include "rappi/units.hpp"

namespace {

using namespace rappi;
using units::mhz;
using units::us;

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

void expect_schedule_invariants(const ram::RamSchedule& s, const std::vector<ram::RamRequest>& requests,
                                const ram::ScheduleOptions& o) {
  for (std::size_t k = 0; k + 1 < s.events.size(); ++k)
    EXPECT_GE(s.events[k + 1].t_start - s.events[k].t_start, o.tau_r - 1e-12);
  for (const auto& r : requests) {
    int appearances = 0;
    for (const auto& e : s.events) appearances += static_cast<int>(std::count(e.cells.begin(), e.cells.end(), r.cell));
    EXPECT_EQ(appearances, 2) << "cell " << r.cell;
    const auto it = std::find_if(s.assignments.begin(), s.assignments.end(),
                                 [&](const ram::CellAssignment& a) { return a.cell == r.cell; });
    ASSERT_NE(it, s.assignments.end());
    EXPECT_NEAR(s.events[it->second].t_start - s.events[it->first].t_start, 0.5 * (r.t_out - r.t_in), 1e-12);
    // RAP1 starts after the probe window; RAP2 ends before the echo window.
    EXPECT_GE(s.events[it->first].t_start, r.t_in + 0.5 * o.probe_duration + o.guard - 1e-12);
    EXPECT_LE(s.events[it->second].t_start + o.tau_r, r.t_out - 0.5 * o.probe_duration - o.guard + 1e-12);
  }
}

TEST(Ram, SingleCellNeedsTwoEvents) {
  const std::vector<ram::RamRequest> req{{0, 0.0, us(160)}};
  const auto s = ram::schedule(req, ram::cell_row(1, mhz(3.5), mhz(1.5)));
  EXPECT_TRUE(s.feasible);
  EXPECT_EQ(s.events.size(), 2u);
  expect_schedule_invariants(s, req, {});
}

TEST(Ram, EqualStorageCellsShareEvents) {
  const std::vector<ram::RamRequest> req{{0, 0.0, us(160)}, {1, 0.0, us(160)}};
  const auto s = ram::schedule(req, ram::cell_row(2, mhz(3.5), mhz(1.5)));
  ASSERT_EQ(s.events.size(), 2u);
  for (const auto& e : s.events) EXPECT_EQ(e.cells, (std::vector<int>{0, 1}));
  ram::ScheduleOptions o;
  oracle::ScheduleOracle search(req, o);
  EXPECT_EQ(search.optimum(), 2u);
}

TEST(Ram, BundledScenarioNeedsAtMostSixEvents) {
  const auto req = ram::example_requests();
  const auto s = ram::schedule(req, ram::example_cells());
  EXPECT_TRUE(s.feasible);
  EXPECT_LE(s.events.size(), 6u);
  expect_schedule_invariants(s, req, {});
}

TEST(Ram, GreedyMatchesExhaustiveSearch) {
  std::mt19937_64 rng(2024);
  ram::ScheduleOptions o;
  o.time_step = us(2);
  int compared = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const auto req = oracle::random_instance(rng, 4);
    oracle::ScheduleOracle search(req, o);
    const std::size_t best = search.optimum();
    const auto s = ram::schedule(req, ram::cell_row(req.size(), mhz(3.5), mhz(1.5)), o);
    if (best == std::numeric_limits<std::size_t>::max()) {
      EXPECT_FALSE(s.feasible) << "trial " << trial;
      continue;
    }
    ASSERT_TRUE(s.feasible) << "trial " << trial;
    EXPECT_EQ(s.events.size(), best) << "trial " << trial;
    expect_schedule_invariants(s, req, o);
    ++compared;
  }
  EXPECT_GT(compared, 40);
}

TEST(Ram, ShortStorageIsInfeasible) {
  EXPECT_EQ(error_code([] { ram::rap1_range({0, 0.0, us(100)}, {}); }), "infeasible-request");
}

TEST(Ram, UnavoidableCollisionIsReported) {
  // Cell 1's probe at 40 us sits inside every admissible RAP1 of cell 0.
  const std::vector<ram::RamRequest> req{{0, 0.0, us(150)}, {1, us(40), us(240)}};
  const auto s = ram::schedule(req, ram::cell_row(2, mhz(3.5), mhz(1.5)));
  EXPECT_FALSE(s.feasible);
  ASSERT_FALSE(s.violations.empty());
  EXPECT_EQ(s.violations.front().cell, 0);
  EXPECT_EQ(s.violations.front().kind, "collision");
}

TEST(Ram, RequestValidation) {
  const auto cells = ram::cell_row(2, mhz(3.5), mhz(1.5));
  EXPECT_EQ(error_code([&] { ram::schedule({{5, 0.0, us(160)}}, cells); }), "unknown-cell");
  EXPECT_EQ(error_code([&] { ram::schedule({{0, 0.0, us(160)}, {0, us(5), us(170)}}, cells); }),
            "duplicate-request");
  EXPECT_EQ(error_code([] { ram::validate_cells(ram::cell_row(2, mhz(3.5), mhz(4.2))); }), "overlapping-cells");
  EXPECT_NO_THROW(ram::validate_cells(ram::cell_row(2, mhz(3.5), mhz(4.2)), true));
}

TEST(Ram, ScheduleJsonLayout) {
  const auto s = ram::schedule({{0, 0.0, us(160)}}, ram::cell_row(1, mhz(3.5), mhz(1.5)));
  const auto text = ram::schedule_json(s);
  EXPECT_NE(text.find("\"events\""), std::string::npos);
  EXPECT_NE(text.find("\"t_start_us\""), std::string::npos);
  EXPECT_NE(text.find("\"tones\""), std::string::npos);
  EXPECT_NE(text.find("\"assignments\""), std::string::npos);
  EXPECT_NE(text.find("\"violations\""), std::string::npos);
}

ram::CellPhysics quick_physics() {
  ram::CellPhysics ph;
  ph.min_atoms = 401;
  return ph;
}

TEST(Ram, EchoTimeIndependentOfRapSlide) {
  const auto cells = ram::cell_row(1, mhz(3.5), mhz(1.5));
  const ram::RamRequest r{0, 0.0, us(160)};
  const auto [lo, hi] = ram::rap1_range(r, {});
  for (double s1 : {lo, 0.5 * (lo + hi), hi}) {
    const std::vector<ram::RamEvent> events{{s1, us(50), {0}}, {s1 + us(80), us(50), {0}}};
    const auto sim = ram::simulate_cell(cells, 0, {0.0}, events, -us(1), us(166), quick_physics(), false);
    EXPECT_NEAR(ensemble::find_echo(sim.trace, us(160), us(4)).time, us(160), us(1)) << "RAP1 at " << s1;
  }
}

double echo_energy(const ram::CellSimulation& sim, double t) { return ensemble::window_energy(sim.trace, t, us(4)); }

TEST(Ram, RemovingToneSilencesOnlyThatCell) {
  const auto cells = ram::cell_row(2, mhz(3.5), mhz(1.5));
  const std::vector<ram::RamEvent> both{{us(10), us(50), {0, 1}}, {us(80), us(50), {0, 1}}};
  const std::vector<ram::RamEvent> only0{{us(10), us(50), {0}}, {us(80), us(50), {0}}};
  const auto ph = quick_physics();
  const double c0_both = echo_energy(ram::simulate_cell(cells, 0, {0.0}, both, -us(1), us(146), ph, false), us(140));
  const double c0_only = echo_energy(ram::simulate_cell(cells, 0, {0.0}, only0, -us(1), us(146), ph, false), us(140));
  const double c1_both = echo_energy(ram::simulate_cell(cells, 1, {0.0}, both, -us(1), us(146), ph, false), us(140));
  const double c1_none = echo_energy(ram::simulate_cell(cells, 1, {0.0}, only0, -us(1), us(146), ph, false), us(140));
  EXPECT_NEAR(c0_only / c0_both, 1.0, 0.01);
  EXPECT_LT(c1_none, 1e-6 * c1_both);
}

config::RunConfig crosstalk_config() { return config::parse(R"({"experiment": "crosstalk", "probe_duration_us": 1.0})"); }

ram::VerifyOptions crosstalk_options() {
  ram::VerifyOptions v;
  v.physics = config::cell_physics(crosstalk_config());
  return v;
}

const std::vector<ram::RamRequest> crosstalk_requests{{3, 0.0, us(600)}, {4, us(60), us(300)}};

TEST(Ram, NominalSpacingHasNoCrosstalk) {
  const auto cells = ram::cell_row(8, mhz(3.5), mhz(1.5));
  const auto s = ram::schedule(crosstalk_requests, cells, config::schedule_options(crosstalk_config()));
  ASSERT_TRUE(s.feasible);
  const auto report = ram::verify_schedule(s, cells, crosstalk_options());
  EXPECT_TRUE(report.pass);
  for (const auto& c : report.cells) {
    EXPECT_LT(c.crosstalk_ratio, 0.01) << "cell " << c.cell;
    EXPECT_NEAR(c.t_echo, c.t_out, us(1.0)) << "cell " << c.cell;
  }
}

TEST(Ram, OverlappingSpansFailVerification) {
  const auto cells = ram::cell_row(8, mhz(3.5), mhz(4.2));
  const auto s = ram::schedule(crosstalk_requests, cells, config::schedule_options(crosstalk_config()));
  const auto report = ram::verify_schedule(s, cells, crosstalk_options());
  EXPECT_FALSE(report.pass);
  double worst = 0.0;
  for (const auto& c : report.cells) worst = std::max(worst, c.crosstalk_ratio);
  EXPECT_GT(worst, 0.01);
}

TEST(Ram, OnDemandSpectralRecall) {
  const auto r = ram::multimode_run(ram::spectral_scenario(4));
  ASSERT_EQ(r.modes.size(), 3u);
  for (const auto& m : r.modes) {
    EXPECT_TRUE(m.recalled) << "cell " << m.cell;
    EXPECT_NEAR(m.t_echo, m.t_expected, us(1)) << "cell " << m.cell;
    EXPECT_LT(m.leakage, 0.01) << "cell " << m.cell;
  }
}

TEST(Ram, SingleModeReducesToPlainRecall) {
  ram::MultimodeScenario s;
  s.name = "single";
  s.cells = ram::cell_row(1, mhz(3.5), mhz(1.5));
  s.probes = {{0, 0.0}};
  s.events = {{us(10), us(50), {0}}, {us(80), us(50), {0}}};
  ram::Mode m;
  m.cell = 0;
  m.t_in = 0.0;
  m.t_expected = us(140);
  s.modes = {m};
  s.t_end = us(146);
  const auto r = ram::multimode_run(s);
  ASSERT_EQ(r.modes.size(), 1u);
  EXPECT_TRUE(r.modes[0].recalled);
  EXPECT_NEAR(r.modes[0].t_echo, us(140), us(1));
}

TEST(Ram, TrainCollidingWithRapRefused) {
  auto s = ram::spectral_scenario(1);
  s.probes.push_back({0, us(30)});
  EXPECT_EQ(error_code([&] { ram::multimode_run(s); }), "train-collision");
}

}  // namespace
