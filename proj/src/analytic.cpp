#include "soapsched/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "soapsched/error.hpp"

namespace soapsched {

double waiting_x(const MG1& mg1, const HVDecomp& d, double x) {
  if (mg1.lambda() == 0.0) return 0.0;
  const double y = d.prev_hill(x);
  const double z = d.next_hill(x);
  return excess(mg1, z) / (coload(mg1, y) * coload(mg1, z));
}

double residence_x(const MG1& mg1, const HVDecomp& d, double x) {
  return x / coload(mg1, d.prev_hill(x));
}

namespace {

AnalyticResult sum_over_sizes(const MG1& mg1, const HVDecomp& d, bool exact) {
  AnalyticResult r;
  r.load = mg1.load();
  r.exact = exact;
  const auto& dist = mg1.dist();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto [x, p] = dist.atom(i);
    const double w = waiting_x(mg1, d, x);
    const double res = exact ? residence_x(mg1, d, x) : x;
    r.per_size.push_back({x, p, w, res, w + res});
    r.mean_waiting += p * w;
    r.mean_residence += p * res;
  }
  r.mean_response = r.mean_waiting + r.mean_residence;
  return r;
}

bool monotone_policy(const PolicySpec& policy, const PiecewiseLinearFn& rank) {
  switch (policy.kind) {
    case Policy::MSERPT:
    case Policy::FB:
    case Policy::FCFS: return true;
    case Policy::Custom: return rank.nondecreasing();
    default: return false;
  }
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Extended precision keeps the rounded results exact at simple loads such as
// 8/9, where the bound is 3.
long double log_term(double rho) {
  const long double r = rho;
  return rho == 0.0 ? 1.0L : -std::log1p(-r) / r;
}
long double sqrt_term(double rho) { return 4.0L / (1.0L + std::sqrt(1.0L - rho)); }

}  // namespace

AnalyticResult mean_response(const MG1& mg1, const PolicySpec& policy) {
  if (policy.kind == Policy::SRPT)
    throw UnsupportedError("SRPT has no analytic mean here; simulate it or use srpt_lower_bound");
  const auto& dist = mg1.dist();
  if (policy.kind == Policy::PS) {
    AnalyticResult r;
    r.policy = Policy::PS;
    r.load = mg1.load();
    const double slow = 1.0 / (1.0 - mg1.load());
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const auto [x, p] = dist.atom(i);
      r.per_size.push_back({x, p, x * slow - x, x, x * slow});
      r.mean_waiting += p * (x * slow - x);
      r.mean_residence += p * x;
    }
    r.mean_response = dist.mean() * slow;
    return r;
  }
  const PiecewiseLinearFn rank = policy_rank(policy, dist);
  const bool exact = monotone_policy(policy, rank);
  AnalyticResult r = sum_over_sizes(mg1, decompose(rank), exact);
  r.policy = policy.kind;
  if (!exact) r.mean_response = std::max(r.mean_response, srpt_lower_bound(mg1));
  return r;
}

double hill_valley_response(const MG1& mg1, const PiecewiseLinearFn& rank) {
  return sum_over_sizes(mg1, decompose(rank), true).mean_response;
}

double srpt_lower_bound(const MG1& mg1) {
  return static_cast<double>(log_term(mg1.load())) * mg1.dist().mean();
}

double ratio_bound(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("ratio bound needs 0 <= rho < 1");
  return static_cast<double>(std::min(std::max(sqrt_term(rho), log_term(rho)), 1.0L + sqrt_term(rho)));
}

std::pair<double, double> ratio_bound_thresholds() {
  const double first = bisect([](double r) { return static_cast<double>(sqrt_term(r) - log_term(r)); }, 0.5, 0.99);
  const double second =
      bisect([](double r) { return static_cast<double>(log_term(r) - 1.0L - sqrt_term(r)); }, 0.97, 0.9999);
  return {first, second};
}

double pathological_ratio_approx(double delta, double epsilon) {
  const double d3 = 2.0 * delta * delta * delta;
  const double e2 = epsilon * epsilon;
  return (d3 + 2.0 * delta * epsilon + e2) / (d3 + delta * epsilon + e2);
}

PathologicalPoint pathological_point(double delta) {
  PathologicalPoint p;
  p.delta = delta;
  p.epsilon = std::pow(delta, 1.5);
  p.closed_form = pathological_ratio_approx(delta, p.epsilon);
  const MG1 mg1 = MG1::with_load(pathological(delta), 1.0 - p.epsilon);
  p.mserpt_response = mean_response(mg1, Policy::MSERPT).mean_response;
  p.gittins_response = hill_valley_response(mg1, gittins_rank(mg1.dist()).first);
  p.quasi_ratio = p.mserpt_response / p.gittins_response;
  return p;
}

}  // namespace soapsched
