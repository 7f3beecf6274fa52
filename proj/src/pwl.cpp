#include "soapsched/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "soapsched/error.hpp"

namespace soapsched {

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<Breakpoint> pieces, double end)
    : pieces_(std::move(pieces)), end_(end) {
  if (pieces_.empty()) throw ParameterError("piecewise-linear function needs a piece");
  if (pieces_.front().age != 0.0) throw ParameterError("first breakpoint must be at age 0");
  for (std::size_t i = 1; i < pieces_.size(); ++i)
    if (!(pieces_[i].age > pieces_[i - 1].age))
      throw ParameterError("breakpoint ages must be strictly increasing");
  if (!(end_ > pieces_.back().age)) throw ParameterError("domain end must exceed last breakpoint");
  build_max_tree();
}

void PiecewiseLinearFn::build_max_tree() {
  leaves_ = 1;
  while (leaves_ < pieces_.size()) leaves_ *= 2;
  max_tree_.assign(2 * leaves_, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < pieces_.size(); ++i)
    max_tree_[leaves_ + i] = std::max(pieces_[i].value, left_limit_at_end(i));
  for (std::size_t k = leaves_; k-- > 1;) max_tree_[k] = std::max(max_tree_[2 * k], max_tree_[2 * k + 1]);
}

bool PiecewiseLinearFn::piece_meets(std::size_t i, double from, double threshold,
                                    bool strict) const {
  const double v = value_in_piece(i, std::max(from, pieces_[i].age));
  if (strict ? v > threshold : v >= threshold) return true;
  return pieces_[i].slope > 0.0 && left_limit_at_end(i) > threshold;
}

double PiecewiseLinearFn::crossing_in_piece(std::size_t i, double from, double threshold,
                                            bool strict) const {
  const double start = std::max(from, pieces_[i].age);
  const double v = value_in_piece(i, start);
  if (strict ? v > threshold : v >= threshold) return start;
  const double root = pieces_[i].age + (threshold - pieces_[i].value) / pieces_[i].slope;
  return std::clamp(root, start, piece_end(i));
}

double PiecewiseLinearFn::first_reaching(double from, double threshold, bool strict) const {
  return first_reaching(from, piece_index(from), threshold, strict);
}

double PiecewiseLinearFn::first_reaching(double from, std::size_t i, double threshold,
                                         bool strict) const {
  if (piece_meets(i, from, threshold, strict)) return crossing_in_piece(i, from, threshold, strict);
  // Leftmost later piece whose supremum reaches the threshold.
  auto reaches = [&](double m) { return strict ? m > threshold : m >= threshold; };
  std::size_t lo = i + 1;
  if (lo >= pieces_.size()) return end_;
  // Walk up from the leaf until a right sibling subtree can contain a hit.
  std::size_t k = leaves_ + lo;
  if (!reaches(max_tree_[k])) {
    while (true) {
      if (k == 1) return end_;
      if ((k & 1) == 0 && reaches(max_tree_[k + 1])) {
        k = k + 1;
        break;
      }
      k /= 2;
    }
  }
  while (k < leaves_) k = reaches(max_tree_[2 * k]) ? 2 * k : 2 * k + 1;
  const std::size_t hit = k - leaves_;
  if (hit >= pieces_.size()) return end_;
  if (!piece_meets(hit, pieces_[hit].age, threshold, strict)) {
    // Supremum equals the threshold only as a left limit; never attained.
    if (hit + 1 >= pieces_.size()) return end_;
    return first_reaching(piece_end(hit), hit + 1, threshold, strict);
  }
  return crossing_in_piece(hit, pieces_[hit].age, threshold, strict);
}

PiecewiseLinearFn PiecewiseLinearFn::constant(double value, double end) {
  return PiecewiseLinearFn({{0.0, value, 0.0}}, end);
}

PiecewiseLinearFn PiecewiseLinearFn::identity(double end) {
  return PiecewiseLinearFn({{0.0, 0.0, 1.0}}, end);
}

std::size_t PiecewiseLinearFn::piece_index(double a) const {
  if (!(a >= 0.0 && a < end_))
    throw DomainError("age " + std::to_string(a) + " outside rank domain [0, " +
                      std::to_string(end_) + ")");
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), a,
                             [](double v, const Breakpoint& b) { return v < b.age; });
  return static_cast<std::size_t>(it - pieces_.begin()) - 1;
}

std::size_t PiecewiseLinearFn::piece_index(double a, std::size_t hint) const {
  if (hint < pieces_.size() && pieces_[hint].age <= a) {
    for (int step = 0; step < 4 && hint < pieces_.size(); ++step, ++hint)
      if (a < piece_end(hint)) return hint;
  }
  return piece_index(a);
}

double PiecewiseLinearFn::operator()(double a) const { return value_in_piece(piece_index(a), a); }

double PiecewiseLinearFn::slope_at(double a) const { return pieces_[piece_index(a)].slope; }

double PiecewiseLinearFn::next_breakpoint(double a) const {
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), a,
                             [](double v, const Breakpoint& b) { return v < b.age; });
  return it == pieces_.end() ? end_ : it->age;
}

double PiecewiseLinearFn::piece_end(std::size_t i) const {
  return i + 1 < pieces_.size() ? pieces_[i + 1].age : end_;
}

double PiecewiseLinearFn::left_limit_at_end(std::size_t i) const {
  return value_in_piece(i, piece_end(i));
}

bool PiecewiseLinearFn::nondecreasing(double tol) const {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].slope < 0.0) return false;
    if (i + 1 < pieces_.size() && pieces_[i + 1].value < left_limit_at_end(i) - tol) return false;
  }
  return true;
}

PiecewiseLinearFn PiecewiseLinearFn::simplified(double tol) const {
  std::vector<Breakpoint> out;
  out.reserve(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (!out.empty()) {
      const Breakpoint& prev = out.back();
      const double continued = prev.slope == 0.0 ? prev.value
                                                 : prev.value + prev.slope * (pieces_[i].age - prev.age);
      if (std::abs(pieces_[i].slope - prev.slope) <= tol &&
          std::abs(pieces_[i].value - continued) <= tol)
        continue;
    }
    out.push_back(pieces_[i]);
  }
  return PiecewiseLinearFn(std::move(out), end_);
}

}  // namespace soapsched
