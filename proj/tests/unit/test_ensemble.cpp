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
#include <numeric>

#include "rappi/ensemble.hpp"
#include "rappi/error.hpp"
#include "rappi/protocol.hpp"
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

ensemble::RunOptions trace_options(double probe_duration) {
  ensemble::RunOptions o;
  o.probe_duration = probe_duration;
  return o;
}

double peak_signal(const ensemble::EnsembleTrace& tr, double lo, double hi) {
  double best = 0.0;
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    if (tr.t[k] >= lo && tr.t[k] <= hi) best = std::max(best, std::abs(tr.signal[k]));
  return best;
}

TEST(Ensemble, RevivalTimeFollowsGridSpacing) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 1001;
  spec.window = mhz(10);
  const auto grid = ensemble::build_grid(spec, us(40));
  EXPECT_NEAR(units::to_hz(grid.spacing), 10e3, 1e-6);
  EXPECT_NEAR(grid.revival_time, us(100), 1e-12);
  EXPECT_EQ(error_code([&] { ensemble::build_grid(spec, us(700)); }), "revival-guard");
}

TEST(Ensemble, UniformWeightsAreEqual) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 3;
  spec.window = mhz(1);
  const auto grid = ensemble::build_grid(spec, us(0.5));
  ASSERT_EQ(grid.atoms.size(), 3u);
  for (const auto& a : grid.atoms) EXPECT_NEAR(a.weight, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(grid.atoms[1].detuning, 0.0);
}

TEST(Ensemble, GaussianWeightsAreSymmetric) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 101;
  spec.window = mhz(4);
  spec.profile = ensemble::Profile::gaussian;
  spec.linewidth = mhz(1);
  const auto grid = ensemble::build_grid(spec, us(10));
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.atoms.size(); ++k) {
    sum += grid.atoms[k].weight;
    EXPECT_NEAR(grid.atoms[k].weight, grid.atoms[grid.atoms.size() - 1 - k].weight, 1e-15);
    EXPECT_LE(grid.atoms[k].weight, grid.atoms[50].weight);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Ensemble, EvenAtomCountRejected) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 100;
  spec.window = mhz(1);
  EXPECT_EQ(error_code([&] { ensemble::build_grid(spec, us(1)); }), "invalid-grid");
}

TEST(Ensemble, AtomsForSpanPassesGuard) {
  const std::size_t n = ensemble::atoms_for_span(mhz(3.3), us(705));
  EXPECT_EQ(n % 2, 1u);
  ensemble::EnsembleSpec spec;
  spec.window = mhz(3.3);
  spec.atoms = n;
  EXPECT_NO_THROW(ensemble::build_grid(spec, us(705)));
  // Revival 2 pi (N - 1) / window must exceed twice the span.
  const double least = mhz(3.3) * us(705) / units::pi + 1.0;
  EXPECT_GT(static_cast<double>(n), least);
  EXPECT_LT(static_cast<double>(n), 1.03 * least + 2.0);
  spec.atoms = static_cast<std::size_t>(std::floor(least)) | 1u;
  if (static_cast<double>(spec.atoms) > least) spec.atoms -= 2;
  EXPECT_THROW(ensemble::build_grid(spec, us(705)), Error);
}

TEST(Ensemble, WindowMustHoldSweepAndProbe) {
  ensemble::EnsembleSpec spec;
  spec.window = mhz(3.3);
  EXPECT_NO_THROW(ensemble::check_window(spec, mhz(1.5), mhz(0.443)));
  spec.window = mhz(3.0);
  EXPECT_EQ(error_code([&] { ensemble::check_window(spec, mhz(1.5), mhz(0.443)); }), "window-too-narrow");
}

TEST(Ensemble, EchoTimeExamples) {
  EXPECT_NEAR(ensemble::echo_time_check(us(10), us(20), us(50)), us(140), 1e-15);
  EXPECT_NEAR(ensemble::echo_time_check(us(10), us(300), us(50)), us(700), 1e-15);
  EXPECT_EQ(error_code([] { ensemble::echo_time_check(us(20), us(20), us(50)); }), "timing");
  EXPECT_EQ(error_code([] { ensemble::echo_time_check(us(20), us(10), us(50)); }), "timing");
}

TEST(Ensemble, RappiSilencesPrimaryAndRecallsSecondary) {
  const auto run = protocol::reference_run();
  const auto built = protocol::build_sequence(run);
  const auto grid = ensemble::build_grid(run.medium.ensemble, built.sequence.t_end - built.sequence.t_begin);
  const auto res = ensemble::run_sequence(grid, built.sequence, trace_options(run.probe.duration));
  const double tp = run.probe.duration;
  const auto secondary = ensemble::find_echo(res.trace, built.t_echo, 2.0 * tp);
  EXPECT_NEAR(secondary.time, built.t_echo, 0.5 * tp);
  // RAP1 ends at 60 us and RAP2 starts at 80 us; the primary would sit at 70 us.
  const double primary = peak_signal(res.trace, us(62), us(78));
  EXPECT_LT(primary, 0.05 * secondary.magnitude);
}

TEST(Ensemble, HahnEchoAppearsAtTwiceTau) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 1001;
  spec.window = mhz(3.3);
  const auto grid = ensemble::build_grid(spec, us(70));
  const double tp = us(2);
  ensemble::Sequence seq;
  seq.t_begin = -0.5 * tp;
  seq.t_end = us(65);
  seq.events.push_back(ensemble::probe_event(pulse::probe_square(0.0, tp, 0.01 / tp)));
  seq.events.push_back(ensemble::IdealRotation{us(30), units::pi, 0.0});
  const auto res = ensemble::run_sequence(grid, seq, trace_options(tp));
  const auto echo = ensemble::find_echo(res.trace, us(60), 2.0 * tp);
  EXPECT_NEAR(echo.time, us(60), 0.5 * tp);
  EXPECT_GT(echo.magnitude, 0.5 * peak_signal(res.trace, -0.5 * tp, 0.5 * tp));
}

TEST(Ensemble, NoProbeLeavesNothingToRephase) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 1001;
  spec.window = mhz(3.3);
  const auto grid = ensemble::build_grid(spec, us(70));
  ensemble::Sequence seq;
  seq.t_begin = 0.0;
  seq.t_end = us(65);
  seq.events.push_back(ensemble::IdealRotation{us(30), units::pi, 0.0});
  ensemble::RunOptions o = trace_options(us(2));
  o.subtract_background = false;
  const auto res = ensemble::run_sequence(grid, seq, o);
  for (std::size_t k = 0; k < res.trace.t.size(); ++k) ASSERT_NEAR(res.trace.sigma_y_bar[k], 0.0, 1e-12);
}

TEST(Ensemble, OverlappingPulsesRejected) {
  ensemble::EnsembleSpec spec;
  spec.atoms = 101;
  spec.window = mhz(3.3);
  const auto grid = ensemble::build_grid(spec, us(10));
  ensemble::Sequence seq;
  seq.t_begin = -us(1);
  seq.t_end = us(10);
  seq.events.push_back(ensemble::probe_event(pulse::probe_square(0.0, us(2), 0.005e6)));
  seq.events.push_back(ensemble::control_event(pulse::probe_square(us(0.5), us(2), 0.005e6)));
  EXPECT_EQ(error_code([&] { ensemble::run_sequence(grid, seq, trace_options(us(2))); }), "overlapping-pulses");
}

TEST(Ensemble, EchoWindowOutsideTraceRejected) {
  ensemble::EnsembleTrace tr;
  tr.t = {0.0, 1e-6, 2e-6};
  tr.signal.assign(3, {0.0, 0.0});
  tr.emitted_proxy = tr.signal;
  EXPECT_EQ(error_code([&] { ensemble::find_echo(tr, us(10), us(1)); }), "window-outside-trace");
}

TEST(Ensemble, TraceStaysBounded) {
  const auto run = protocol::reference_run();
  const auto built = protocol::build_sequence(run);
  const auto grid = ensemble::build_grid(run.medium.ensemble, built.sequence.t_end - built.sequence.t_begin);
  const auto res = ensemble::run_sequence(grid, built.sequence, trace_options(run.probe.duration));
  for (std::size_t k = 0; k < res.trace.t.size(); ++k) {
    ASSERT_LE(std::abs(res.trace.sigma_y_bar[k]), 1.0);
    ASSERT_LE(std::abs(res.trace.sigma_z_bar[k]), 1.0 + 1e-9);
  }
}

}  // namespace
