// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. The simulation battery is shared by criteria 4 to 6.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "soapsched/analytic.hpp"
#include "soapsched/parallel.hpp"
#include "soapsched/sim.hpp"
#include "soapsched/verify.hpp"

using namespace soapsched;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kJobs = 1'000'000;
constexpr std::uint64_t kSeed = 42;

struct Named {
  std::string name;
  DiscreteDist dist;
};

struct Cell {
  std::string dist;
  double rho;
  Policy policy;
};

using Key = std::tuple<std::string, double, Policy>;

class Battery {
 public:
  explicit Battery(std::vector<Named> dists) {
    for (auto& d : dists) dists_.emplace(d.name, std::move(d.dist));
  }

  const DiscreteDist& dist(const std::string& name) const { return dists_.at(name); }

  // Simulates every cell not yet cached, in parallel, in a fixed order.
  void run(const std::vector<Cell>& cells) {
    std::vector<Cell> todo;
    for (const Cell& c : cells)
      if (!results_.count({c.dist, c.rho, c.policy})) todo.push_back(c);
    const auto out = parallel_map<SimResult>(todo.size(), [&](std::size_t i) {
      const MG1 m = MG1::with_load(dists_.at(todo[i].dist), todo[i].rho);
      SimConfig cfg{m, todo[i].policy, kJobs, 0.1, kSeed, 20, {}};
      return simulate(cfg);
    });
    for (std::size_t i = 0; i < todo.size(); ++i)
      results_[{todo[i].dist, todo[i].rho, todo[i].policy}] = out[i];
  }

  const SimResult& at(const std::string& d, double rho, Policy p) const {
    return results_.at({d, rho, p});
  }

 private:
  std::map<std::string, DiscreteDist> dists_;
  std::map<Key, SimResult> results_;
};

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("criterion %2d %-34s %s  %s\n", id, title, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string cell_name(const std::string& d, double rho, Policy p) {
  return d + "/" + fmt("%.2g", rho) + "/" + policy_name(p);
}

}  // namespace

int main() {
  const std::vector<double> loads = {0.3, 0.6, 0.9};
  const std::vector<std::string> core = {"d1", "pathological", "pareto"};
  const std::vector<std::string> with_exp = {"d1", "pathological", "pareto", "exponential"};
  const DiscreteDist d1({{1.0, 0.5}, {2.0, 0.5}});

  Battery battery({{"d1", d1},
                   {"pathological", pathological(0.1)},
                   {"pareto", quantize({Pareto{1.5, 1.0}, 2000})},
                   {"exponential", quantize({Exponential{1.0}, 200})},
                   {"four-bell", quantize({four_bell_mixture(), 1000})}});

  // 1. Pollaczek-Khinchine on two atoms.
  {
    const auto t0 = Clock::now();
    const double t = mean_response(MG1(d1, 0.4), Policy::MSERPT).mean_response;
    const double ms = seconds_since(t0) * 1e3;
    report(1, "P-K exactness", std::abs(t - 2.75) < 1e-9 && ms < 1.0,
           "E[T]=" + fmt("%.15g", t) + " in " + fmt("%.3f", ms) + " ms");
  }

  // 2. Point-mass closed forms.
  {
    const MG1 m(DiscreteDist::point_mass(1.0), 0.5);
    const double fb = mean_response(m, Policy::FB).mean_response;
    const double ps = mean_response(m, Policy::PS).mean_response;
    report(2, "closed forms (FB, PS)", std::abs(fb - 3.0) < 1e-9 && std::abs(ps - 2.0) < 1e-9,
           "FB=" + fmt("%.15g", fb) + " PS=" + fmt("%.15g", ps));
  }

  // 3. Ratio bound curve.
  {
    const auto [t1, t2] = ratio_bound_thresholds();
    const bool ok = ratio_bound(8.0 / 9.0) == 3.0 && ratio_bound(0.0) == 2.0 &&
                    std::abs(t1 - 0.9587) < 5e-5 && std::abs(t2 - 0.9898) < 5e-5 &&
                    ratio_bound(0.64) <= 2.5 && ratio_bound(0.95) <= 3.3 &&
                    ratio_bound(0.98) <= 4.0 && ratio_bound(0.999) <= 5.0;
    report(3, "ratio bound curve", ok,
           "bound(8/9)=" + fmt("%.17g", ratio_bound(8.0 / 9.0)) + " thresholds " +
               fmt("%.6f", t1) + ", " + fmt("%.6f", t2));
  }

  // 4. Simulation against exact analysis.
  {
    std::vector<Cell> cells;
    for (const auto& d : core)
      for (double rho : loads)
        for (Policy p : {Policy::FCFS, Policy::FB, Policy::MSERPT}) cells.push_back({d, rho, p});
    const auto t0 = Clock::now();
    battery.run(cells);
    const double secs = seconds_since(t0);
    bool ok = secs < 600.0;
    double worst = 0.0;
    std::string worst_cell;
    for (const Cell& c : cells) {
      const SimResult& r = battery.at(c.dist, c.rho, c.policy);
      const double a = mean_response(MG1::with_load(battery.dist(c.dist), c.rho), c.policy).mean_response;
      const double allowed = std::max(0.02 * a, 3.0 * r.ci_halfwidth);
      const double used = std::abs(r.mean_response - a) / allowed;
      if (used > worst) {
        worst = used;
        worst_cell = cell_name(c.dist, c.rho, c.policy);
      }
      ok = ok && used <= 1.0;
    }
    report(4, "sim vs analytic (27 cells)", ok,
           "worst " + worst_cell + " at " + fmt("%.2f", worst) + " of tolerance, " +
               fmt("%.0f", secs) + " s");
  }

  // 5 and 6 share the battery extended by SERPT, Gittins and the exponential.
  std::vector<Cell> full;
  for (const auto& d : with_exp)
    for (double rho : loads)
      for (Policy p : {Policy::FCFS, Policy::FB, Policy::MSERPT, Policy::SERPT, Policy::Gittins})
        full.push_back({d, rho, p});
  battery.run(full);

  {
    bool ok = true;
    double worst = -1e300;
    std::string worst_cell;
    for (const auto& d : with_exp)
      for (double rho : loads) {
        const SimResult& g = battery.at(d, rho, Policy::Gittins);
        for (Policy p : {Policy::SERPT, Policy::MSERPT, Policy::FB, Policy::FCFS}) {
          const SimResult& o = battery.at(d, rho, p);
          const double slack = 3.0 * std::hypot(g.ci_halfwidth, o.ci_halfwidth);
          const double excess = (g.mean_response - o.mean_response) / slack;
          if (excess > worst) {
            worst = excess;
            worst_cell = cell_name(d, rho, p);
          }
          ok = ok && g.mean_response <= o.mean_response + slack;
        }
      }
    report(5, "Gittins empirical optimality", ok,
           "closest " + worst_cell + " (Gittins - other) = " + fmt("%.2f", worst) + " x slack");
  }

  {
    bool ok = true;
    double max_ratio = 0.0;
    std::string max_cell;
    for (const auto& d : with_exp)
      for (double rho : loads) {
        const SimResult& m = battery.at(d, rho, Policy::MSERPT);
        const SimResult& g = battery.at(d, rho, Policy::Gittins);
        const double ratio = m.mean_response / g.mean_response;
        const double ci = ratio_ci(m.mean_response, m.ci_halfwidth, g.mean_response, g.ci_halfwidth);
        if (ratio > max_ratio) {
          max_ratio = ratio;
          max_cell = d + "/" + fmt("%.2g", rho);
        }
        ok = ok && ratio <= ratio_bound(rho) + 3.0 * ci && ratio >= 1.0 - 3.0 * ci;
      }
    report(6, "ratio bound consistency", ok,
           "largest M-SERPT/Gittins " + fmt("%.4f", max_ratio) + " at " + max_cell);
  }

  // 7. Pathological distribution.
  {
    const double c1 = pathological_ratio_approx(0.1, std::pow(0.1, 1.5));
    const double c2 = pathological_ratio_approx(0.01, std::pow(0.01, 1.5));
    const double c3 = pathological_ratio_approx(0.001, std::pow(0.001, 1.5));
    const PathologicalPoint p = pathological_point(0.01);
    const double rel = std::abs(p.quasi_ratio / p.closed_form - 1.0);
    const bool ok = std::abs(c1 - 1.513) < 1e-3 && std::abs(c2 - 1.769) < 1e-3 &&
                    std::abs(c3 - 1.913) < 1e-3 && c1 < c2 && c2 < c3 && c3 < 2.0 && rel < 0.10;
    report(7, "pathological lower bound", ok,
           "closed " + fmt("%.4f", c1) + " " + fmt("%.4f", c2) + " " + fmt("%.4f", c3) +
               "; quasi(0.01)=" + fmt("%.4f", p.quasi_ratio) + " off by " + fmt("%.1f%%", 100 * rel));
  }

  // 8. Property suite.
  {
    const auto t0 = Clock::now();
    VerifyOptions opt;
    opt.cases = 200;
    opt.seed = 7;
    const VerifyReport rep = run_verify(opt);
    const double secs = seconds_since(t0);
    report(8, "property suite", rep.ok() && secs < 120.0,
           std::to_string(rep.checks) + " checks, " + std::to_string(rep.failures.size()) +
               " failures, " + fmt("%.1f", secs) + " s");
  }

  // 9. SRPT floor.
  {
    bool ok = true;
    std::string detail;
    for (double rho : {0.5, 0.8}) {
      const MG1 m = MG1::with_load(battery.dist("exponential"), rho);
      SimConfig cfg{m, Policy::SRPT, kJobs, 0.1, kSeed, 20, {}};
      const SimResult r = simulate(cfg);
      const double floor = srpt_lower_bound(m);
      ok = ok && r.mean_response >= floor - 3.0 * r.ci_halfwidth;
      detail += "rho " + fmt("%.1f", rho) + ": " + fmt("%.4f", r.mean_response) + " >= " +
                fmt("%.4f", floor) + "  ";
    }
    report(9, "SRPT floor", ok, detail);
  }

  // 10. PS/FB divergence on Pareto and the four-bell mixture.
  {
    battery.run({{"pareto", 0.8, Policy::FB}, {"pareto", 0.95, Policy::FB}});
    const DiscreteDist& par = battery.dist("pareto");
    auto ps_over_fb = [&](double rho) {
      return mean_response(MG1::with_load(par, rho), Policy::PS).mean_response /
             battery.at("pareto", rho, Policy::FB).mean_response;
    };
    const double r80 = ps_over_fb(0.8), r95 = ps_over_fb(0.95);
    std::vector<Cell> bell;
    for (double rho : loads)
      for (Policy p : {Policy::MSERPT, Policy::Gittins}) bell.push_back({"four-bell", rho, p});
    battery.run(bell);
    double worst = 0.0;
    for (double rho : loads)
      worst = std::max(worst, battery.at("four-bell", rho, Policy::MSERPT).mean_response /
                                  battery.at("four-bell", rho, Policy::Gittins).mean_response);
    report(10, "PS/FB divergence, mixture ratio", r95 > r80 && worst <= 1.15,
           "PS/FB " + fmt("%.3f", r80) + " -> " + fmt("%.3f", r95) + "; mixture M-SERPT/Gittins max " +
               fmt("%.4f", worst));
  }

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
