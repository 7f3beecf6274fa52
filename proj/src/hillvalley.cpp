#include "soapsched/hillvalley.hpp"

#include <algorithm>

#include "soapsched/error.hpp"
#include "soapsched/rank.hpp"

namespace soapsched {

HVDecomp::HVDecomp(std::vector<Hill> hills, double end) : end_(end) {
  hills.push_back({0.0, 0.0});
  hills.push_back({end, end});
  std::sort(hills.begin(), hills.end(), [](const Hill& l, const Hill& r) { return l.lo < r.lo; });
  for (const Hill& h : hills) {
    if (h.lo > h.hi || h.lo < 0.0 || h.hi > end)
      throw ParameterError("hill interval outside [0, end] or reversed");
    if (!hills_.empty() && h.lo <= hills_.back().hi) {
      hills_.back().hi = std::max(hills_.back().hi, h.hi);
      continue;
    }
    hills_.push_back(h);
  }
  for (std::size_t i = 0; i + 1 < hills_.size(); ++i)
    valleys_.push_back({hills_[i].hi, hills_[i + 1].lo});
}

bool HVDecomp::is_hill_age(double a, double tol) const {
  return std::any_of(hills_.begin(), hills_.end(),
                     [&](const Hill& h) { return a >= h.lo - tol && a <= h.hi + tol; });
}

double HVDecomp::prev_hill(double x) const {
  if (x <= 0.0) return 0.0;
  // Last hill starting strictly before x.
  auto it = std::lower_bound(hills_.begin(), hills_.end(), x,
                             [](const Hill& h, double v) { return h.lo < v; });
  const Hill& h = *std::prev(it);
  return std::min(h.hi, x);
}

double HVDecomp::next_hill(double x) const {
  if (x <= 0.0) return hills_.front().hi > 0.0 ? 0.0 : hills_[1].lo;
  if (x >= end_) return end_;
  auto it = std::lower_bound(hills_.begin(), hills_.end(), x,
                             [](const Hill& h, double v) { return h.hi < v; });
  return std::max(it->lo, x);
}

HVDecomp decompose(const PiecewiseLinearFn& rank, double tol) {
  const PiecewiseLinearFn env = increasing_envelope(rank);
  std::vector<Hill> hills;
  for (std::size_t i = 0; i < env.piece_count(); ++i) {
    const Breakpoint& b = env.pieces()[i];
    if (i > 0 && b.value - env.left_limit_at_end(i - 1) > tol) hills.push_back({b.age, b.age});
    const double end = env.piece_end(i);
    if (b.slope > 0.0 && b.slope * (end - b.age) > tol) hills.push_back({b.age, end});
  }
  return HVDecomp(std::move(hills), env.end());
}

double coload(const MG1& mg1, double a) {
  return 1.0 - mg1.lambda() * mg1.dist().trunc_moments(a).first;
}

double excess(const MG1& mg1, double a) {
  return 0.5 * mg1.lambda() * mg1.dist().trunc_moments(a).second;
}

}  // namespace soapsched
