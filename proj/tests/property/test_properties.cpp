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
#include <iostream>
#include <random>
#include <variant>

#include "rappi/bloch.hpp"
#include "rappi/ensemble.hpp"
#include "rappi/protocol.hpp"
#include "rappi/pulse.hpp"
#include "rappi/units.hpp"

namespace {

using namespace rappi;
using units::mhz;
using units::mhz_per_ms;
using units::us;

ensemble::SequenceResult rappi_trace(const std::vector<pulse::PulseSpec>& probes, int threads) {
  auto run = protocol::reference_run();
  auto built = protocol::build_sequence(run);
  ensemble::Sequence seq;
  seq.t_begin = built.sequence.t_begin;
  seq.t_end = built.sequence.t_end + us(6);
  for (const auto& p : probes) seq.events.push_back(ensemble::probe_event(p));
  for (const auto& e : built.sequence.events) {
    const auto* pe = std::get_if<ensemble::PulseEvent>(&e);
    if (pe && !pe->probe) seq.events.push_back(e);
  }
  const auto grid = ensemble::build_grid(run.medium.ensemble, seq.t_end - seq.t_begin);
  ensemble::RunOptions o;
  o.probe_duration = us(2);
  o.threads = threads;
  return ensemble::run_sequence(grid, seq, o);
}

TEST(Linearity, SuperposedProbesGiveSummedTraces) {
  const auto a = pulse::probe_with_area(pulse::Kind::probe_square, 0.0, us(2), 0.02);
  const auto b = pulse::probe_with_area(pulse::Kind::probe_square, us(4), us(2), 0.02);
  const auto ta = rappi_trace({a}, 1).trace;
  const auto tb = rappi_trace({b}, 1).trace;
  const auto tab = rappi_trace({a, b}, 1).trace;
  ASSERT_EQ(ta.t.size(), tab.t.size());
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < tab.t.size(); ++k) {
    const auto sum = ta.signal[k] + tb.signal[k];
    scale = std::max(scale, std::abs(sum));
    worst = std::max(worst, std::abs(tab.signal[k] - sum));
  }
  EXPECT_LT(worst, 0.01 * scale);
}

bool during_control(double t) {
  const auto built = protocol::build_sequence(protocol::reference_run());
  for (const auto& e : built.sequence.events) {
    const auto* pe = std::get_if<ensemble::PulseEvent>(&e);
    if (pe && !pe->probe && std::abs(t - pe->spec.center_time) <= 0.5 * pe->spec.duration) return true;
  }
  return false;
}

// While a RAP drives the medium it also maps the probe's second-order
// population change into coherence, which is not detected. The emitted
// signal between control pulses is what must scale with the probe area.
TEST(Linearity, SignalScalesWithProbeArea) {
  const auto small = rappi_trace({pulse::probe_with_area(pulse::Kind::probe_square, 0.0, us(2), 0.01)}, 1).trace;
  const auto large = rappi_trace({pulse::probe_with_area(pulse::Kind::probe_square, 0.0, us(2), 0.05)}, 1).trace;
  double worst = 0.0, scale = 0.0, driven = 0.0;
  for (std::size_t k = 0; k < small.t.size(); ++k) {
    const double dev = std::abs(large.signal[k] - 5.0 * small.signal[k]);
    if (during_control(small.t[k])) {
      driven = std::max(driven, dev);
      continue;
    }
    scale = std::max(scale, std::abs(5.0 * small.signal[k]));
    worst = std::max(worst, dev);
  }
  std::cout << "largest deviation while driven: " << driven / scale << " of the gated peak\n";
  EXPECT_LT(worst, 0.01 * scale);
}

TEST(Norm, ConservedOverRapPulsesAtDefaultGrid) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> det(-1.6, 1.6), ang(0.0, units::two_pi), cosine(-1.0, 1.0);
  const auto single = pulse::rap(0.0, us(50), mhz(0.35), mhz_per_ms(30));
  const double r = mhz_per_ms(30);
  const auto triple = pulse::multitone(0.0, us(50), {{mhz(-3.5), mhz(0.35), r}, {0.0, mhz(0.35), r}, {mhz(3.5), mhz(0.35), r}});
  for (const auto& spec : {single, triple}) {
    const double max_d = mhz(5.5);
    const auto env = pulse::synthesize(spec, pulse::default_dt(spec, us(2), max_d));
    for (int trial = 0; trial < 20; ++trial) {
      bloch::AtomParams p;
      p.detuning = mhz(det(rng)) * (spec.kind == pulse::Kind::multitone_composite ? 3.0 : 1.0);
      const double cz = cosine(rng), phi = ang(rng), sz = std::sqrt(1.0 - cz * cz);
      const auto traj = bloch::evolve({sz * std::cos(phi), sz * std::sin(phi), cz}, p, env);
      double drift = 0.0;
      for (const auto& s : traj.states) drift = std::max(drift, std::abs(s.norm() - 1.0));
      EXPECT_LT(drift, 1e-6) << "detuning " << units::to_mhz(p.detuning) << " MHz";
    }
  }
}

bloch::AtomState final_state(std::size_t intervals) {
  const auto spec = pulse::probe_gaussian(0.0, us(2), mhz(1.0));
  pulse::TimeGrid grid{spec.start(), spec.duration / static_cast<double>(intervals), intervals + 1};
  const auto env = pulse::synthesize(spec, grid);
  bloch::AtomParams p;
  p.detuning = mhz(0.3);
  return bloch::evolve_final(bloch::AtomState::ground(), p, env);
}

double distance(const bloch::AtomState& a, const bloch::AtomState& b) {
  return std::sqrt(std::pow(a.u - b.u, 2) + std::pow(a.v - b.v, 2) + std::pow(a.w - b.w, 2));
}

TEST(Rk4, FourthOrderConvergence) {
  const auto h = final_state(80), h2 = final_state(160), h4 = final_state(320);
  const double ratio = distance(h, h2) / distance(h2, h4);
  std::cout << "error ratio " << ratio << "\n";
  EXPECT_NEAR(ratio, 16.0, 4.0);
}

TEST(Rk4, DefaultGridIsConverged) {
  const auto spec = pulse::rap(0.0, us(50), mhz(0.35), mhz_per_ms(30));
  const double dt = pulse::default_dt(spec, us(2), mhz(1.65));
  const auto coarse = pulse::fit_grid(spec, dt);
  const pulse::TimeGrid fine{coarse.t_start, 0.5 * coarse.dt, 2 * coarse.n - 1};
  for (double f : {-0.7, 0.0, 0.4, 1.2}) {
    bloch::AtomParams p;
    p.detuning = mhz(f);
    const auto a = bloch::evolve_final({0.6, 0.0, -0.8}, p, pulse::synthesize(spec, coarse));
    const auto b = bloch::evolve_final({0.6, 0.0, -0.8}, p, pulse::synthesize(spec, fine));
    EXPECT_LT(distance(a, b), 1e-7) << f << " MHz";
  }
}

TEST(Threads, EnsembleTraceIndependentOfWorkerCount) {
  const auto probe = pulse::probe_with_area(pulse::Kind::probe_square, 0.0, us(2), 0.01);
  const auto one = rappi_trace({probe}, 1);
  for (int threads : {2, 4}) {
    const auto many = rappi_trace({probe}, threads);
    ASSERT_EQ(one.trace.t.size(), many.trace.t.size());
    for (std::size_t k = 0; k < one.trace.t.size(); ++k) {
      ASSERT_EQ(one.trace.signal[k], many.trace.signal[k]) << threads << " threads, sample " << k;
      ASSERT_EQ(one.trace.sigma_z_bar[k], many.trace.sigma_z_bar[k]);
    }
    for (std::size_t j = 0; j < one.final_states.size(); ++j) {
      ASSERT_EQ(one.final_states[j].u, many.final_states[j].u);
      ASSERT_EQ(one.final_states[j].w, many.final_states[j].w);
    }
  }
}

TEST(Threads, PropagatedEchoIndependentOfWorkerCount) {
  auto run = protocol::reference_run();
  run.threads = 1;
  const auto a = protocol::run_experiment(run, {false});
  run.threads = 4;
  const auto b = protocol::run_experiment(run, {false});
  EXPECT_EQ(a.eta, b.eta);
  EXPECT_EQ(a.suppression_ratio, b.suppression_ratio);
  ASSERT_EQ(a.propagation.e_out.size(), b.propagation.e_out.size());
  for (std::size_t k = 0; k < a.propagation.e_out.size(); ++k) ASSERT_EQ(a.propagation.e_out[k], b.propagation.e_out[k]);
}

}  // namespace
