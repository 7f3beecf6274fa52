#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "soapsched/analytic.hpp"
#include "soapsched/error.hpp"
#include "soapsched/sim.hpp"

using namespace soapsched;
using doctest::Approx;

namespace {

DiscreteDist d1() { return DiscreteDist({{1.0, 0.5}, {2.0, 0.5}}); }

SimConfig config(const MG1& m, PolicySpec p, std::uint64_t jobs, std::uint64_t seed = 42) {
  SimConfig c{m, std::move(p), jobs, 0.1, seed, 20, {}};
  return c;
}

struct TraceRow {
  double time;
  std::string event;
  std::uint64_t id;
  double age;
};

std::vector<TraceRow> read_trace(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "time,event,job_id,age,rank");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f[5];
    for (auto& s : f) std::getline(ss, s, ',');
    rows.push_back({std::stod(f[0]), f[1], std::stoull(f[2]), std::stod(f[3])});
  }
  return rows;
}

}  // namespace

TEST_CASE("FCFS on two atoms matches Pollaczek-Khinchine") {
  const SimResult r = simulate(config(MG1(d1(), 0.4), Policy::FCFS, 1'000'000));
  CHECK(r.ci_halfwidth > 0.0);
  CHECK(r.ci_halfwidth < 0.03);
  CHECK(std::abs(r.mean_response - 2.75) <= r.ci_halfwidth);
  CHECK(r.completions == 900'000);
  CHECK(r.seed == 42);
  CHECK(r.busy_time == Approx(r.work_served).epsilon(1e-9));
}

TEST_CASE("Gittins, SERPT and M-SERPT reduce to FCFS on two atoms") {
  const MG1 m(d1(), 0.4);
  const auto rs = compare_policies(m, {Policy::FCFS, Policy::Gittins, Policy::SERPT, Policy::MSERPT},
                                   config(m, Policy::FCFS, 200'000));
  REQUIRE(rs.size() == 4);
  for (const SimResult& r : rs) {
    CHECK(r.mean_response == Approx(rs[0].mean_response).epsilon(1e-12));
    CHECK(std::abs(r.mean_response - 2.75) <= 3 * r.ci_halfwidth);
  }
}

TEST_CASE("empty system: response equals size") {
  const SimResult r = simulate(config(MG1(DiscreteDist::point_mass(3.0), 0.0), Policy::Gittins, 20'000));
  CHECK(r.mean_response == Approx(3.0).epsilon(1e-12));
  const SimResult s = simulate(config(MG1(d1(), 0.0), Policy::FB, 200'000));
  CHECK(s.mean_response == Approx(1.5).epsilon(0.01));
}

TEST_CASE("point mass: FB shares the server, FCFS does not") {
  const MG1 m(DiscreteDist::point_mass(1.0), 0.5);
  const auto rs = compare_policies(m, {Policy::FB, Policy::FCFS}, config(m, Policy::FCFS, 400'000));
  CHECK(std::abs(rs[0].mean_response - 3.0) <= std::max(0.02 * 3.0, 3 * rs[0].ci_halfwidth));
  CHECK(std::abs(rs[1].mean_response - 1.5) <= std::max(0.02 * 1.5, 3 * rs[1].ci_halfwidth));
  CHECK(rs[0].mean_response / rs[1].mean_response == Approx(2.0).epsilon(0.05));
}

TEST_CASE("monotone policies match the analytic values") {
  for (double rho : {0.3, 0.8}) {
    const MG1 m = MG1::with_load(pathological(0.1), rho);
    for (Policy p : {Policy::MSERPT, Policy::FB, Policy::FCFS}) {
      const SimResult r = simulate(config(m, p, 300'000, 3));
      const double a = mean_response(m, p).mean_response;
      CHECK(std::abs(r.mean_response - a) <= std::max(0.02 * a, 3 * r.ci_halfwidth));
    }
  }
}

TEST_CASE("results are reproducible per seed") {
  const MG1 m = MG1::with_load(quantize({Pareto{1.5, 1.0}, 200}), 0.7);
  const SimResult a = simulate(config(m, Policy::Gittins, 50'000, 9));
  const SimResult b = simulate(config(m, Policy::Gittins, 50'000, 9));
  const SimResult c = simulate(config(m, Policy::Gittins, 50'000, 10));
  CHECK(a.mean_response == b.mean_response);
  CHECK(a.ci_halfwidth == b.ci_halfwidth);
  CHECK(a.busy_time == b.busy_time);
  CHECK(a.mean_response != c.mean_response);
}

TEST_CASE("SRPT stays above the universal floor") {
  const MG1 m = MG1::with_load(quantize({Exponential{1.0}, 200}), 0.8);
  const SimResult srpt = simulate(config(m, Policy::SRPT, 300'000));
  CHECK(srpt.mean_response >= srpt_lower_bound(m) - 3 * srpt.ci_halfwidth);
  const SimResult git = simulate(config(m, Policy::Gittins, 300'000));
  CHECK(srpt.mean_response <= git.mean_response + 3 * (srpt.ci_halfwidth + git.ci_halfwidth));
}

TEST_CASE("invalid configurations") {
  const MG1 m(d1(), 0.4);
  CHECK_THROWS_AS(simulate(config(m, Policy::PS, 1000)), UnsupportedError);
  CHECK_THROWS_AS(simulate(config(m, Policy::FCFS, 0)), ParameterError);
  SimConfig c = config(m, Policy::FCFS, 1000);
  c.warmup = 1.0;
  CHECK_THROWS_AS(simulate(c), ParameterError);
  c = config(m, Policy::FCFS, 1000);
  c.batches = 1;
  CHECK_THROWS_AS(simulate(c), ParameterError);
  c = config(m, Policy::FCFS, 1000);
  c.trace_path = "/nonexistent/dir/trace.csv";
  CHECK_THROWS(simulate(c));
}

TEST_CASE("next_event") {
  const JobState job{0, 5.0, 1.0, 0.0};
  SUBCASE("flat rank never crosses") {
    const PiecewiseLinearFn flat = PiecewiseLinearFn::constant(2.0, 10.0);
    Event e = next_event(job, 3.0, flat, 100.0);
    CHECK(e.kind == EventKind::Completion);
    CHECK(e.delay == 4.0);
    e = next_event(job, 3.0, flat, 0.5);
    CHECK(e.kind == EventKind::Arrival);
    CHECK(e.delay == 0.5);
  }
  SUBCASE("identity rank crosses a waiting job's age") {
    const PiecewiseLinearFn fb = PiecewiseLinearFn::identity(10.0);
    const Event e = next_event(job, 2.5, fb, 100.0);
    CHECK(e.kind == EventKind::RankCrossing);
    CHECK(e.delay == Approx(1.5));
  }
  SUBCASE("breakpoint comes first") {
    const PiecewiseLinearFn step({{0.0, 1.0, 0.0}, {2.0, 4.0, 0.0}}, 10.0);
    const Event e = next_event(job, 3.0, step, 100.0);
    CHECK(e.kind == EventKind::Breakpoint);
    CHECK(e.delay == Approx(1.0));
  }
}

TEST_CASE("pathological M-SERPT: a new arrival preempts a job past 1 - delta") {
  // Ranks: 1.01 on [0, 0.9), 1.1 on [0.9, 1), 10 from age 1. A new job has
  // rank 1.01, so it ties with (and loses to) a job younger than 0.9 but
  // preempts a job in [0.9, 1).
  const std::string path =
      (std::filesystem::temp_directory_path() / "soapsched_preempt_trace.csv").string();
  SimConfig c = config(MG1::with_load(pathological(0.1), 0.5), Policy::MSERPT, 20'000, 5);
  c.trace_path = path;
  simulate(c);
  const std::vector<TraceRow> rows = read_trace(path);
  std::filesystem::remove(path);

  int preempted = 0, kept = 0;
  for (std::size_t i = 0; i + 2 < rows.size(); ++i) {
    if (rows[i].event != "arrival") continue;
    const TraceRow& arrival = rows[i];
    const TraceRow& running = rows[i + 1];
    const TraceRow& next = rows[i + 2];
    if (running.event != "preempt" || next.event != "serve" || running.time != arrival.time) continue;
    if (running.age > 0.9 + 1e-9 && running.age < 1.0 - 1e-9) {
      CHECK(next.id == arrival.id);
      ++preempted;
    } else if (running.age > 1e-9 && running.age < 0.9 - 1e-9) {
      CHECK(next.id == running.id);
      ++kept;
    }
  }
  CHECK(preempted > 10);
  CHECK(kept > 100);
}

TEST_CASE("ratio confidence interval") {
  CHECK(ratio_ci(2.0, 0.0, 1.0, 0.0) == 0.0);
  CHECK(ratio_ci(2.0, 0.2, 1.0, 0.0) == Approx(0.2));
  CHECK(ratio_ci(2.0, 0.2, 1.0, 0.1) == Approx(2.0 * std::hypot(0.1, 0.1)));
}
