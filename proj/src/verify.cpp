#include "soapsched/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "soapsched/analytic.hpp"
#include "soapsched/hillvalley.hpp"
#include "soapsched/rank.hpp"
#include "soapsched/sim.hpp"

namespace soapsched {

DiscreteDist random_discrete(std::mt19937_64& rng, int min_atoms, int max_atoms) {
  std::uniform_int_distribution<int> count(min_atoms, max_atoms);
  std::uniform_real_distribution<double> log_size(0.0, 4.0);
  std::exponential_distribution<double> gamma1(1.0);
  const int n = count(rng);
  std::vector<double> sizes;
  while (static_cast<int>(sizes.size()) < n) {
    const double x = std::pow(10.0, log_size(rng));
    if (std::find(sizes.begin(), sizes.end(), x) == sizes.end()) sizes.push_back(x);
  }
  std::vector<double> weights(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& w : weights) {
    w = gamma1(rng) + 1e-6;
    total += w;
  }
  std::vector<Atom> atoms;
  double used = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = i + 1 == n ? 1.0 - used : weights[static_cast<std::size_t>(i)] / total;
    used += p;
    atoms.push_back({sizes[static_cast<std::size_t>(i)], p});
  }
  return DiscreteDist(std::move(atoms));
}

double brute_force_gittins(const DiscreteDist& dist, double a) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const double b = dist.sizes()[k];
    if (!(b > a)) continue;
    double work = 0.0, finish = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      const double x = dist.sizes()[j];
      const double p = dist.probs()[j];
      work += p * std::clamp(x - a, 0.0, b - a);
      if (x > a && x <= b) finish += p;
    }
    best = std::min(best, work / finish);
  }
  return best;
}

namespace {

bool leq(double a, double b, double scale = 1.0) {
  return a <= b + 1e-9 * std::max({1.0, std::abs(scale), std::abs(b)});
}

class Checker {
 public:
  Checker(VerifyReport& report, std::string label, std::uint64_t seed)
      : report_(report), label_(std::move(label)), seed_(seed) {}

  void expect(bool ok, const std::string& what) {
    ++report_.checks;
    if (ok) return;
    if (failed_ == 0) report_.failing_seeds.push_back(seed_);
    if (++failed_ <= 5) report_.failures.push_back(label_ + ": " + what);
  }

 private:
  VerifyReport& report_;
  std::string label_;
  std::uint64_t seed_;
  int failed_ = 0;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<double> probe_ages(const DiscreteDist& d, int midpoints) {
  std::vector<double> ages{0.0};
  double prev = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = d.sizes()[i];
    for (int m = 1; m <= midpoints; ++m) ages.push_back(prev + (x - prev) * m / (midpoints + 1));
    if (i + 1 < d.size()) ages.push_back(x);
    prev = x;
  }
  return ages;
}

void check_distribution(Checker& c, const DiscreteDist& d, const VerifyOptions& opt) {
  const double xmax = d.max_size();

  // Cached aggregates against direct summation.
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = d.sizes()[i];
    double tail = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double x = std::min(d.sizes()[j], a);
      if (d.sizes()[j] > a) tail += d.probs()[j];
      m1 += d.probs()[j] * x;
      m2 += d.probs()[j] * x * x;
    }
    const auto tm = d.trunc_moments(a);
    c.expect(std::abs(tail - d.tail(a)) <= 1e-12 && std::abs(m1 - tm.first) <= 1e-9 * std::max(1.0, m1) &&
                 std::abs(m2 - tm.second) <= 1e-9 * std::max(1.0, m2),
             "prefix aggregates disagree with direct sums at " + fmt(a));
  }

  const PiecewiseLinearFn serpt = serpt_rank(d);
  const PiecewiseLinearFn mserpt = mserpt_rank(d);
  const auto [gittins, table] = gittins_rank(d);

  // Rank ordering Gittins <= SERPT <= M-SERPT.
  for (double a : probe_ages(d, opt.midpoints)) {
    if (a >= xmax) continue;
    const double g = gittins(a), s = serpt(a), m = mserpt(a);
    c.expect(leq(g, s, xmax) && leq(s, m, xmax),
             "rank ordering at age " + fmt(a) + ": " + fmt(g) + ", " + fmt(s) + ", " + fmt(m));
  }

  // Gittins at segment starts against brute force.
  for (const auto& e : table) {
    const double oracle = brute_force_gittins(d, e.age);
    c.expect(std::abs(oracle - e.rank) <= 1e-9 * std::max(1.0, oracle),
             "gittins rank at " + fmt(e.age) + " is " + fmt(e.rank) + ", oracle " + fmt(oracle));
    c.expect(e.stop > e.age, "stopping age not beyond age " + fmt(e.age));
  }

  // Envelope: dominates, nondecreasing, idempotent.
  const PiecewiseLinearFn twice = increasing_envelope(mserpt);
  c.expect(mserpt.nondecreasing(), "m-serpt rank decreases somewhere");
  for (double a : probe_ages(d, opt.midpoints)) {
    if (a >= xmax) continue;
    c.expect(leq(serpt(a), mserpt(a), xmax), "envelope below input at " + fmt(a));
    c.expect(std::abs(twice(a) - mserpt(a)) <= 1e-12 * std::max(1.0, mserpt(a)),
             "envelope not idempotent at " + fmt(a));
  }

  const HVDecomp hv_m = decompose(mserpt);
  const HVDecomp hv_g = decompose(gittins);
  const double hill_tol = 1e-12 * xmax;

  // Every Gittins hill age is an M-SERPT hill age.
  for (const Hill& h : hv_g.hills()) {
    c.expect(hv_m.is_hill_age(h.lo, hill_tol) && hv_m.is_hill_age(h.hi, hill_tol) &&
                 hv_m.is_hill_age(0.5 * (h.lo + h.hi), hill_tol),
             "gittins hill [" + fmt(h.lo) + ", " + fmt(h.hi) + "] is not an m-serpt hill");
  }

  // y_G(x) <= y_M(x) <= x <= z_M(x) <= z_G(x) at every size.
  for (double x : d.sizes()) {
    const double yg = hv_g.prev_hill(x), ym = hv_m.prev_hill(x);
    const double zm = hv_m.next_hill(x), zg = hv_g.next_hill(x);
    c.expect(leq(yg, ym, xmax) && leq(ym, x, xmax) && leq(x, zm, xmax) && leq(zm, zg, xmax),
             "hill ordering chain fails at size " + fmt(x));
  }

  // Dense grid monotonicity for tail, y and z.
  const int grid = 200;
  double prev_tail = 2.0, prev_ym = 0.0, prev_zm = 0.0, prev_yg = 0.0, prev_zg = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double x = i == grid ? xmax : xmax * i / grid;
    const double t = d.tail(x);
    const double ym = hv_m.prev_hill(x), zm = hv_m.next_hill(x);
    const double yg = hv_g.prev_hill(x), zg = hv_g.next_hill(x);
    c.expect(t <= prev_tail, "tail increases at " + fmt(x));
    c.expect(ym >= prev_ym && zm >= prev_zm && yg >= prev_yg && zg >= prev_zg,
             "y or z decreases at " + fmt(x));
    c.expect(ym <= x && x <= zm && yg <= x && x <= zg, "y(x) <= x <= z(x) fails at " + fmt(x));
    prev_tail = t;
    prev_ym = ym;
    prev_zm = zm;
    prev_yg = yg;
    prev_zg = zg;
  }

  // M-SERPT hill ages for the coload lemma.
  std::vector<double> hill_ages;
  for (const Hill& h : hv_m.hills()) {
    hill_ages.push_back(h.lo);
    if (h.hi > h.lo) hill_ages.push_back(h.hi);
  }
  std::vector<double> lower_ages = hill_ages;
  for (double x : d.sizes()) lower_ages.push_back(x);
  for (double a : probe_ages(d, 1)) lower_ages.push_back(a);

  double prev_load_response = -1.0;
  std::vector<double> prev_per_size;
  for (double rho : opt.loads) {
    const MG1 mg1 = MG1::with_load(d, rho);
    const double rho_eff = mg1.load();

    double prev_coload = 2.0, prev_excess = -1.0;
    for (int i = 0; i <= grid; ++i) {
      const double x = i == grid ? xmax : xmax * i / grid;
      const double cl = coload(mg1, x), ex = excess(mg1, x);
      c.expect(cl <= prev_coload && ex >= prev_excess,
               "coload/excess monotonicity fails at " + fmt(x) + " load " + fmt(rho));
      prev_coload = cl;
      prev_excess = ex;
    }

    for (double b : hill_ages) {
      const double tb = d.tail(b);
      const double cb = coload(mg1, b);
      for (double a : lower_ages) {
        if (a > b) continue;
        const double ta = d.tail(a);
        const double ratio = coload(mg1, a) / cb;
        if (ta > 0.0) {
          const double lemma = 1.0 / (1.0 - rho_eff + rho_eff * tb / ta);
          c.expect(leq(ratio, lemma), "coload lemma fails for a=" + fmt(a) + " b=" + fmt(b) +
                                          " load " + fmt(rho));
        }
        if (tb > 0.0)
          c.expect(leq(ratio, ta / tb), "coload tail corollary fails for a=" + fmt(a) +
                                            " b=" + fmt(b) + " load " + fmt(rho));
      }
    }

    // Closed forms: constant rank is Pollaczek-Khinchine.
    const double pk = mg1.lambda() * d.second_moment() / (2.0 * (1.0 - rho_eff)) + d.mean();
    const double fcfs = mean_response(mg1, Policy::FCFS).mean_response;
    c.expect(std::abs(fcfs - pk) <= 1e-9 * pk, "fcfs " + fmt(fcfs) + " != P-K " + fmt(pk));

    // Per-size M-SERPT response grows with load.
    const AnalyticResult ms = mean_response(mg1, Policy::MSERPT);
    c.expect(ms.mean_response >= prev_load_response, "m-serpt response not increasing in load");
    for (std::size_t i = 0; i < prev_per_size.size(); ++i)
      c.expect(leq(prev_per_size[i], ms.per_size[i].response, ms.per_size[i].response),
               "m-serpt E[T(x)] not increasing in load");
    prev_per_size.clear();
    for (const auto& s : ms.per_size) {
      prev_per_size.push_back(s.response);
      c.expect(leq(s.size, s.residence, s.size), "residence below size");
    }
    prev_load_response = ms.mean_response;

    // Gittins lower bound never exceeds the exact M-SERPT value.
    const AnalyticResult git = mean_response(mg1, Policy::Gittins);
    c.expect(leq(git.mean_response, ms.mean_response, ms.mean_response),
             "gittins lower bound above m-serpt at load " + fmt(rho));
  }

  if (opt.with_sim) {
    const MG1 mg1 = MG1::with_load(d, 0.6);
    SimConfig cfg{mg1, Policy::MSERPT, opt.sim_jobs, 0.1, 11, 10, {}};
    const SimResult a = simulate(cfg);
    const SimResult b = simulate(cfg);
    c.expect(a.mean_response == b.mean_response && a.ci_halfwidth == b.ci_halfwidth,
             "simulation not reproducible for a fixed seed");
  }
}

void check_fixtures(VerifyReport& report, const VerifyOptions& opt) {
  {
    Checker c(report, "fixture D1", 0);
    const DiscreteDist d1({{1.0, 0.5}, {2.0, 0.5}});
    check_distribution(c, d1, opt);
    const HVDecomp m = decompose(mserpt_rank(d1));
    const HVDecomp g = decompose(gittins_rank(d1).first);
    auto is_0_2 = [](const HVDecomp& h) {
      return h.hills().size() == 2 && h.hills()[0].lo == 0.0 && h.hills()[0].hi == 0.0 &&
             h.hills()[1].lo == 2.0 && h.hills()[1].hi == 2.0;
    };
    c.expect(is_0_2(m) && is_0_2(g), "D1 hill sets are not both {0, 2}");
  }
  {
    Checker c(report, "fixture point mass", 0);
    const DiscreteDist pm = DiscreteDist::point_mass(3.0);
    check_distribution(c, pm, opt);
    const PiecewiseLinearFn s = serpt_rank(pm), m = mserpt_rank(pm);
    const PiecewiseLinearFn g = gittins_rank(pm).first;
    for (double a : {0.0, 1.0, 2.5}) c.expect(std::abs(g(a) - s(a)) <= 1e-12, "gittins != serpt");
    c.expect(s(0.0) == m(0.0) && m(2.5) == 3.0, "m-serpt is not constant at the size");
    const HVDecomp hs = decompose(s), hm = decompose(m), hg = decompose(g);
    c.expect(hs.hills().size() == 2 && hm.hills().size() == 2 && hg.hills().size() == 2,
             "point mass should have hills {0, size} only");
  }
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& options) {
  VerifyReport report;
  check_fixtures(report, options);
  for (int i = 0; i < options.cases; ++i) {
    const std::uint64_t case_seed = options.seed * 1'000'003ull + static_cast<std::uint64_t>(i);
    std::mt19937_64 rng(case_seed);
    const DiscreteDist d = random_discrete(rng);
    Checker c(report, "case " + std::to_string(i) + " (seed " + std::to_string(case_seed) + ")",
              case_seed);
    check_distribution(c, d, options);
    ++report.cases;
  }
  return report;
}

}  // namespace soapsched
