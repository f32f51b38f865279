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
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "rappi/error.hpp"
#include "rappi/io.hpp"
#include "rappi/ram.hpp"

namespace rappi::ram {

namespace {

[[noreturn]] void fail(const char* code, const std::string& message) { throw Error("ram", code, message); }

std::string us(double t) { return io::format_double(units::to_us(t)); }

// Times are compared on a tolerance well below any grid step.
constexpr double time_eps = 1e-10;

struct Interval {
  double lo, hi;
};

std::vector<Interval> busy_windows(const std::vector<RamRequest>& requests, const ScheduleOptions& o) {
  const double half = 0.5 * o.probe_duration + o.guard;
  std::vector<Interval> w;
  for (const auto& r : requests) {
    w.push_back({r.t_in - half, r.t_in + half});
    w.push_back({r.t_out - half, r.t_out + half});
  }
  return w;
}

bool collides(double start, double tau_r, const std::vector<Interval>& windows) {
  const double end = start + tau_r;
  for (const auto& w : windows) {
    if (start < w.hi - time_eps && w.lo + time_eps < end) return true;
  }
  return false;
}

struct Placement {
  std::vector<double> starts;  // distinct event start times
  std::vector<double> rap1;    // per request, in request order
  std::size_t unplaced = 0;
};

// Index of an existing event at `t`, or -1; -2 if `t` would overlap one.
int lookup(const std::vector<double>& starts, double t, double separation) {
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const double d = std::abs(starts[k] - t);
    if (d < time_eps) return static_cast<int>(k);
    if (d < separation - time_eps) return -2;
  }
  return -1;
}

Placement greedy(const std::vector<RamRequest>& requests, const std::vector<std::vector<double>>& candidates,
                 const std::vector<std::size_t>& order, const ScheduleOptions& o) {
  Placement p;
  p.rap1.assign(requests.size(), std::numeric_limits<double>::quiet_NaN());
  const double separation = o.tau_r + o.guard;
  for (std::size_t i : order) {
    const double half_d = 0.5 * (requests[i].t_out - requests[i].t_in);
    int best_new = 3;
    double best_s = 0.0;
    for (double s1 : candidates[i]) {
      const int a = lookup(p.starts, s1, separation);
      const int b = lookup(p.starts, s1 + half_d, separation);
      if (a == -2 || b == -2) continue;
      const int fresh = (a == -1) + (b == -1);
      if (fresh < best_new) {
        best_new = fresh;
        best_s = s1;
        if (fresh == 0) break;
      }
    }
    if (best_new == 3) {
      ++p.unplaced;
      continue;
    }
    p.rap1[i] = best_s;
    for (double t : {best_s, best_s + half_d}) {
      if (lookup(p.starts, t, separation) == -1) p.starts.push_back(t);
    }
  }
  return p;
}

// Depth-first improvement on the greedy result. Each cell tries its
// candidates in order of fresh events then start time, and branches that
// cannot beat the incumbent's event count are cut. The node budget bounds the
// cost for large request sets, where the greedy answer stands.
class Refiner {
 public:
  Refiner(const std::vector<RamRequest>& requests, const std::vector<std::vector<double>>& candidates,
          const ScheduleOptions& o, Placement& best)
      : requests_(requests), candidates_(candidates), separation_(o.tau_r + o.guard), best_(best) {
    rap1_.assign(requests.size(), 0.0);
    order_.resize(requests.size());
    std::iota(order_.begin(), order_.end(), 0);
    // Fewest options first narrows the tree near the root.
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].size() < candidates[b].size(); });
  }

  void run() { descend(0); }

 private:
  static constexpr long budget = 2'000'000;

  bool improves(std::size_t count) const { return best_.unplaced > 0 || count < best_.starts.size(); }

  void descend(std::size_t depth) {
    if (++nodes_ > budget || !improves(starts_.size())) return;
    if (depth == order_.size()) {
      best_.starts = starts_;
      best_.rap1 = rap1_;
      best_.unplaced = 0;
      return;
    }
    const std::size_t i = order_[depth];
    const double half_d = 0.5 * (requests_[i].t_out - requests_[i].t_in);
    std::vector<std::pair<int, double>> options;
    for (double s1 : candidates_[i]) {
      const int a = lookup(starts_, s1, separation_);
      const int b = lookup(starts_, s1 + half_d, separation_);
      if (a == -2 || b == -2) continue;
      options.emplace_back((a == -1) + (b == -1), s1);
    }
    std::stable_sort(options.begin(), options.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [fresh, s1] : options) {
      if (!improves(starts_.size() + static_cast<std::size_t>(fresh))) break;
      const std::size_t mark = starts_.size();
      for (double t : {s1, s1 + half_d}) {
        if (lookup(starts_, t, separation_) == -1) starts_.push_back(t);
      }
      rap1_[i] = s1;
      descend(depth + 1);
      starts_.resize(mark);
      if (nodes_ > budget) return;
    }
  }

  const std::vector<RamRequest>& requests_;
  const std::vector<std::vector<double>>& candidates_;
  double separation_;
  Placement& best_;
  std::vector<std::size_t> order_;
  std::vector<double> starts_, rap1_;
  long nodes_ = 0;
};

std::vector<std::vector<std::size_t>> cell_orders(std::size_t n) {
  std::vector<std::size_t> base(n);
  std::iota(base.begin(), base.end(), 0);
  std::vector<std::vector<std::size_t>> orders;
  if (n <= 6) {
    do orders.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));
    return orders;
  }
  orders.push_back(base);
  std::mt19937_64 rng(0x5eed);
  for (int k = 0; k < 2000; ++k) {
    std::shuffle(base.begin(), base.end(), rng);
    orders.push_back(base);
  }
  return orders;
}

}  // namespace

std::vector<MemoryCell> cell_row(std::size_t count, double spacing, double tone_span) {
  std::vector<MemoryCell> cells(count);
  const double mid = 0.5 * static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) {
    cells[k] = {static_cast<int>(k), (static_cast<double>(k) - mid) * spacing, tone_span, spacing};
  }
  return cells;
}

void validate_cells(const std::vector<MemoryCell>& cells, bool allow_overlap) {
  std::set<int> ids;
  for (const auto& c : cells) {
    if (!ids.insert(c.id).second) fail("invalid-cells", "duplicate cell id " + std::to_string(c.id));
    if (!(c.tone_span > 0.0) || !(c.guard > 0.0)) {
      fail("invalid-cells", "cell " + std::to_string(c.id) + " needs a positive tone span and guard");
    }
    if (!allow_overlap && c.tone_span > c.guard * (1.0 + 1e-12)) {
      fail("overlapping-cells", "cell " + std::to_string(c.id) + " tone span exceeds its guard spacing");
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const double need = std::max(cells[i].guard, cells[j].guard);
      if (std::abs(cells[i].center - cells[j].center) < need * (1.0 - 1e-12)) {
        fail("overlapping-cells", "cells " + std::to_string(cells[i].id) + " and " + std::to_string(cells[j].id) +
                                      " are closer than their guard spacing");
      }
    }
  }
}

std::pair<double, double> rap1_range(const RamRequest& r, const ScheduleOptions& o) {
  const double half_d = 0.5 * (r.t_out - r.t_in);
  const double lo = r.t_in + 0.5 * o.probe_duration + o.guard;
  const double hi = r.t_in + half_d - o.tau_r - 0.5 * o.probe_duration - o.guard;
  if (!(r.t_out > r.t_in) || hi < lo - time_eps) {
    fail("infeasible-request", "cell " + std::to_string(r.cell) + ": storage time " + us(r.t_out - r.t_in) +
                                   " us is shorter than 2*tau_R + probe + guards = " +
                                   us(2.0 * (o.tau_r + o.probe_duration + 2.0 * o.guard)) + " us");
  }
  return {lo, hi};
}

std::vector<double> rap1_candidates(const RamRequest& r, const std::vector<RamRequest>& requests,
                                    const ScheduleOptions& o) {
  const auto [lo, hi] = rap1_range(r, o);
  const auto windows = busy_windows(requests, o);
  const double half_d = 0.5 * (r.t_out - r.t_in);
  std::vector<double> out;
  const auto k0 = static_cast<long long>(std::ceil(lo / o.time_step - 1e-9));
  const auto k1 = static_cast<long long>(std::floor(hi / o.time_step + 1e-9));
  for (long long k = k0; k <= k1; ++k) {
    const double s = static_cast<double>(k) * o.time_step;
    if (collides(s, o.tau_r, windows) || collides(s + half_d, o.tau_r, windows)) continue;
    out.push_back(s);
  }
  return out;
}

RamSchedule schedule(const std::vector<RamRequest>& requests, const std::vector<MemoryCell>& cells,
                     const ScheduleOptions& o) {
  if (!(o.tau_r > 0.0) || !(o.probe_duration > 0.0) || !(o.time_step > 0.0) || o.guard < 0.0) {
    fail("invalid-options", "tau_R, probe duration and time step must be positive");
  }
  // Spectral overlap is a physics question left to verification.
  validate_cells(cells, true);
  if (requests.empty()) fail("no-requests", "nothing to schedule");
  if (requests.size() > 16) fail("too-many-cells", "at most 16 requests are supported");
  std::set<int> known, seen;
  for (const auto& c : cells) known.insert(c.id);
  for (const auto& r : requests) {
    if (!known.count(r.cell)) fail("unknown-cell", "request for undefined cell " + std::to_string(r.cell));
    if (!seen.insert(r.cell).second) fail("duplicate-request", "cell " + std::to_string(r.cell) + " requested twice");
  }

  std::vector<std::vector<double>> candidates;
  for (const auto& r : requests) candidates.push_back(rap1_candidates(r, requests, o));

  Placement best;
  bool have = false;
  for (const auto& order : cell_orders(requests.size())) {
    auto p = greedy(requests, candidates, order, o);
    if (!have || p.unplaced < best.unplaced ||
        (p.unplaced == best.unplaced && p.starts.size() < best.starts.size())) {
      best = std::move(p);
      have = true;
    }
  }
  Refiner(requests, candidates, o, best).run();

  RamSchedule s;
  std::sort(best.starts.begin(), best.starts.end());
  for (double t : best.starts) s.events.push_back({t, o.tau_r, {}});
  const auto index_of = [&](double t) {
    for (std::size_t k = 0; k < s.events.size(); ++k) {
      if (std::abs(s.events[k].t_start - t) < time_eps) return k;
    }
    return s.events.size();
  };
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    const double half_d = 0.5 * (r.t_out - r.t_in);
    double s1 = best.rap1[i];
    if (std::isnan(s1)) {
      // No clear slot: fall back to the earliest admissible start and report.
      s1 = std::ceil(rap1_range(r, o).first / o.time_step - 1e-9) * o.time_step;
      s.violations.push_back({"collision", r.cell,
                              "cell " + std::to_string(r.cell) + ": no RAP start keeps both events clear of probe/echo "
                              "windows and other events; placed at " + us(s1) + " us"});
      s.feasible = false;
      for (double t : {s1, s1 + half_d}) {
        if (index_of(t) == s.events.size()) s.events.push_back({t, o.tau_r, {}});
      }
      std::sort(s.events.begin(), s.events.end(), [](const RamEvent& a, const RamEvent& b) { return a.t_start < b.t_start; });
    }
    best.rap1[i] = s1;
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    const double s1 = best.rap1[i];
    const std::size_t e1 = index_of(s1), e2 = index_of(s1 + 0.5 * (r.t_out - r.t_in));
    s.events[e1].cells.push_back(r.cell);
    s.events[e2].cells.push_back(r.cell);
    s.assignments.push_back({r.cell, e1, e2, r.t_in, r.t_out});
  }
  for (auto& e : s.events) std::sort(e.cells.begin(), e.cells.end());
  for (std::size_t k = 0; k + 1 < s.events.size(); ++k) {
    if (s.events[k + 1].t_start - s.events[k].t_start < o.tau_r - time_eps) {
      s.violations.push_back({"event-overlap", -1,
                              "events at " + us(s.events[k].t_start) + " and " + us(s.events[k + 1].t_start) +
                                  " us overlap"});
      s.feasible = false;
    }
  }
  std::sort(s.assignments.begin(), s.assignments.end(),
            [](const CellAssignment& a, const CellAssignment& b) { return a.cell < b.cell; });
  return s;
}

std::vector<RamRequest> read_requests(const std::string& path) {
  const auto table = io::read_csv(path);
  const std::vector<std::string> want{"cell", "t_in_us", "t_out_us"};
  if (table.header != want) fail("bad-request-file", path + ": header must be cell,t_in_us,t_out_us");
  std::vector<RamRequest> out;
  for (const auto& row : table.rows) {
    if (row[0] != std::floor(row[0]) || row[0] < 0) fail("bad-request-file", path + ": cell ids must be integers >= 0");
    out.push_back({static_cast<int>(row[0]), units::us(row[1]), units::us(row[2])});
  }
  return out;
}

namespace {

// Microseconds rounded to the picosecond, so grid times print cleanly.
double json_us(double t) { return std::round(units::to_us(t) * 1e6) / 1e6; }

}  // namespace

std::string schedule_json(const RamSchedule& s) {
  nlohmann::ordered_json j;
  j["feasible"] = s.feasible;
  j["event_count"] = s.events.size();
  auto& events = j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : s.events) {
    events.push_back({{"t_start_us", json_us(e.t_start)}, {"duration_us", json_us(e.duration)}, {"tones", e.cells}});
  }
  auto& assignments = j["assignments"] = nlohmann::ordered_json::array();
  for (const auto& a : s.assignments) {
    assignments.push_back({{"cell", a.cell},
                           {"rap1_event", a.first},
                           {"rap2_event", a.second},
                           {"rap1_start_us", json_us(s.events[a.first].t_start)},
                           {"rap2_start_us", json_us(s.events[a.second].t_start)},
                           {"t_in_us", json_us(a.t_in)},
                           {"t_out_us", json_us(a.t_out)}});
  }
  auto& violations = j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : s.violations) violations.push_back({{"kind", v.kind}, {"cell", v.cell}, {"message", v.message}});
  return j.dump(2);
}

std::vector<MemoryCell> example_cells() { return cell_row(8, units::mhz(3.5), units::mhz(1.5)); }

std::vector<RamRequest> example_requests() {
  // Four storage times (140, 160, 180, 200 us), two cells each, with
  // staggered inputs.
  const auto r = [](int cell, double t_in, double storage) {
    return RamRequest{cell, units::us(t_in), units::us(t_in + storage)};
  };
  return {r(1, 0, 140), r(6, 5, 140), r(3, 65, 160), r(0, 72, 160),
          r(7, 150, 180), r(4, 155, 180), r(2, 238, 200), r(5, 243, 200)};
}

}  // namespace rappi::ram
