#pragma once

#include <utility>
#include <vector>

#include "soapsched/dist.hpp"
#include "soapsched/hillvalley.hpp"
#include "soapsched/rank.hpp"

namespace soapsched {

struct SizeResponse {
  double size;
  double prob;
  double waiting;
  double residence;
  double response;
};

/// Mean response time of one policy.
///
/// In exact mode the aggregates are the probability-weighted sums of the
/// per-size values. In lower-bound mode (non-monotone ranks such as Gittins
/// and SERPT) the per-size waiting times are lower bounds, residence is
/// bounded below by the size, and mean_response is the larger of that sum and
/// the bound that holds for every policy.
struct AnalyticResult {
  Policy policy = Policy::FCFS;
  double load = 0.0;
  std::vector<SizeResponse> per_size;
  double mean_waiting = 0.0;
  double mean_residence = 0.0;
  double mean_response = 0.0;
  bool exact = true;
};

/// phi(z(x)) / (coload(y(x)) coload(z(x))).
double waiting_x(const MG1& mg1, const HVDecomp& d, double x);
/// x / coload(y(x)).
double residence_x(const MG1& mg1, const HVDecomp& d, double x);

/// Throws UnsupportedError for SRPT.
AnalyticResult mean_response(const MG1& mg1, const PolicySpec& policy);

/// Waiting-plus-residence sum using the policy's own hills and valleys. Exact
/// for monotone ranks; for Gittins it is the approximation that becomes tight
/// in the pathological regime.
double hill_valley_response(const MG1& mg1, const PiecewiseLinearFn& rank);

/// (1/rho) log(1/(1-rho)) E[X]: the SRPT mean response time floor.
double srpt_lower_bound(const MG1& mg1);

/// Upper bound on E[T_M-SERPT] / E[T_Gittins] at load rho in [0, 1).
double ratio_bound(double rho);

/// Loads where the bound switches branch, solved by bisection to 1e-12.
std::pair<double, double> ratio_bound_thresholds();

/// Approximate M-SERPT/Gittins ratio on pathological(delta) at load 1 - eps.
double pathological_ratio_approx(double delta, double epsilon);

struct PathologicalPoint {
  double delta;
  double epsilon;
  double closed_form;
  double mserpt_response;  // exact
  double gittins_response;  // hill/valley approximation
  double quasi_ratio;
};

/// Evaluates pathological(delta) at load 1 - delta^{3/2}.
PathologicalPoint pathological_point(double delta);

}  // namespace soapsched
