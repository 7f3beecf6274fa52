#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace soapsched {

/// One linear piece: value at `age` (right limit) and slope until the next
/// breakpoint.
struct Breakpoint {
  double age;
  double value;
  double slope;
};

/// Right-continuous piecewise-linear function on [0, end).
///
/// Jumps may only occur at breakpoints. Evaluation is O(log n).
class PiecewiseLinearFn {
 public:
  /// Throws ParameterError unless ages are strictly increasing, start at 0
  /// and lie below `end`.
  PiecewiseLinearFn(std::vector<Breakpoint> pieces, double end);

  static PiecewiseLinearFn constant(double value, double end);
  static PiecewiseLinearFn identity(double end);

  double end() const { return end_; }
  std::span<const Breakpoint> pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }

  /// Index of the piece containing a. Throws DomainError outside [0, end).
  std::size_t piece_index(double a) const;
  /// piece_index for a caller whose queries move forward from piece `hint`.
  std::size_t piece_index(double a, std::size_t hint) const;
  double operator()(double a) const;
  /// Slope to the right of a.
  double slope_at(double a) const;
  /// Smallest breakpoint strictly greater than a, or end().
  double next_breakpoint(double a) const;

  /// Start/end of piece i and the left limit of the value at its end.
  double piece_start(std::size_t i) const { return pieces_[i].age; }
  double piece_end(std::size_t i) const;
  double left_limit_at_end(std::size_t i) const;

  double value_in_piece(std::size_t i, double a) const {
    const Breakpoint& b = pieces_[i];
    return b.slope == 0.0 ? b.value : b.value + b.slope * (a - b.age);
  }

  /// Smallest age a in [from, end) with f(a) >= threshold (f(a) > threshold
  /// when `strict`), or end() if there is none. Inside a rising piece the
  /// exact linear root is returned. O(log n).
  double first_reaching(double from, double threshold, bool strict) const;
  double first_reaching(double from, std::size_t piece, double threshold, bool strict) const;

  /// True if the function never decreases, including across jumps.
  bool nondecreasing(double tol = 1e-12) const;

  /// Removes breakpoints that continue the previous piece exactly.
  PiecewiseLinearFn simplified(double tol = 0.0) const;

 private:
  void build_max_tree();
  bool piece_meets(std::size_t i, double from, double threshold, bool strict) const;
  double crossing_in_piece(std::size_t i, double from, double threshold, bool strict) const;

  std::vector<Breakpoint> pieces_;
  double end_;
  std::size_t leaves_ = 1;
  std::vector<double> max_tree_;  // sup of each piece, as a segment tree
};

}  // namespace soapsched
