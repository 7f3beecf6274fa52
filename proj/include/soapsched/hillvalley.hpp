#pragma once

#include <vector>

#include "soapsched/dist.hpp"
#include "soapsched/pwl.hpp"

namespace soapsched {

/// Closed interval of hill ages; isolated hill ages have lo == hi.
struct Hill {
  double lo;
  double hi;
};

/// Valley (lo, hi]: every size in it has previous hill age lo and next hill
/// age hi.
struct Valley {
  double lo;
  double hi;
};

/// Hills and valleys of a rank function over [0, end].
///
/// Hill ages are where the increasing envelope of the rank is not locally
/// constant. Age 0 and the domain end are always hill ages.
class HVDecomp {
 public:
  HVDecomp(std::vector<Hill> hills, double end);

  const std::vector<Hill>& hills() const { return hills_; }
  const std::vector<Valley>& valleys() const { return valleys_; }
  double end() const { return end_; }

  bool is_hill_age(double a, double tol = 0.0) const;
  /// y(x) = sup{a < x : a hill age}, with y(0) = 0.
  double prev_hill(double x) const;
  /// z(x) = inf{a >= x : a hill age}, with z(0) = z(0+).
  double next_hill(double x) const;

 private:
  std::vector<Hill> hills_;
  std::vector<Valley> valleys_;
  double end_;
};

/// Envelope jumps become point hills, strictly increasing envelope pieces
/// become interval hills. Increases below `tol` are treated as flat.
HVDecomp decompose(const PiecewiseLinearFn& rank, double tol = 1e-12);

/// a-truncated load complement 1 - lambda E[min(X, a)].
double coload(const MG1& mg1, double a);
/// a-truncated second moment factor (lambda / 2) E[min(X, a)^2].
double excess(const MG1& mg1, double a);

}  // namespace soapsched
