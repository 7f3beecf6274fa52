#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace soapsched {

struct Atom {
  double size;
  double prob;
};

struct TruncatedMoments {
  double first;   // E[min(X, a)]
  double second;  // E[min(X, a)^2]
};

/// Discrete job size distribution: finitely many atoms at positive sizes.
///
/// Prefix aggregates are computed once at construction so that tail and
/// truncated-moment queries cost one binary search.
class DiscreteDist {
 public:
  /// Atoms may be given in any order; equal sizes are merged. Throws
  /// ParameterError on non-positive sizes or probabilities, or when the
  /// probabilities do not sum to one within 1e-12.
  explicit DiscreteDist(std::vector<Atom> atoms);

  static DiscreteDist point_mass(double size);

  std::size_t size() const { return sizes_.size(); }
  std::span<const double> sizes() const { return sizes_; }
  std::span<const double> probs() const { return probs_; }
  Atom atom(std::size_t i) const { return {sizes_[i], probs_[i]}; }

  double max_size() const { return sizes_.back(); }
  double mean() const { return moment1_.back(); }
  double second_moment() const { return moment2_.back(); }
  bool degenerate() const { return sizes_.size() == 1; }

  /// P(X > a).
  double tail(double a) const;
  /// P(X > x_i) for the i-th atom.
  double tail_after(std::size_t i) const { return tails_[i]; }
  /// E[min(X, x_i)] for the i-th atom.
  double integrated_tail_at(std::size_t i) const;
  /// E[min(X, a)] and E[min(X, a)^2]; atoms at exactly a contribute a.
  TruncatedMoments trunc_moments(double a) const;
  /// Integral of the tail over [0, a], equal to E[min(X, a)].
  double integrated_tail(double a) const { return trunc_moments(a).first; }

  /// Number of atoms with size <= a.
  std::size_t count_at_most(double a) const;

  template <class Rng>
  double sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return sample_at(u(rng));
  }
  /// Inverse-CDF lookup for u in [0, 1).
  double sample_at(double u) const;

 private:
  std::vector<double> sizes_;
  std::vector<double> probs_;
  std::vector<double> cdf_;      // P(X <= x_i)
  std::vector<double> tails_;    // P(X > x_i), summed from the right
  std::vector<double> moment1_;  // sum_{j <= i} p_j x_j
  std::vector<double> moment2_;  // sum_{j <= i} p_j x_j^2
};

// Continuous families, only ever used through quantize().
struct Exponential {
  double rate;
};
struct Pareto {
  double shape;
  double scale;
};
struct Uniform {
  double lo;
  double hi;
};
struct ExpBranch {
  double prob;
  double rate;
};
struct HyperExponential {
  std::vector<ExpBranch> branches;
};
struct NormalComponent {
  double weight;
  double mean;
  double stddev;
};
/// Mixture of normals conditioned on X > 0.
struct NormalMixture {
  std::vector<NormalComponent> components;
};
struct PointMass {
  double size;
};

using ContinuousFamily =
    std::variant<Exponential, Pareto, Uniform, HyperExponential, NormalMixture, PointMass>;

struct ContinuousSpec {
  ContinuousFamily family;
  int points = 1000;
};

/// Throws ParameterError when the family parameters are out of range.
void validate(const ContinuousFamily& family);

/// CDF, partial expectation int_0^x t dF(t) and mean of a continuous family.
double family_cdf(const ContinuousFamily& family, double x);
double family_partial_mean(const ContinuousFamily& family, double x);
double family_mean(const ContinuousFamily& family);
double family_quantile(const ContinuousFamily& family, double u);

/// Equal-probability quantization: n atoms at the conditional means of the
/// n slices [Q(k/n), Q((k+1)/n)], each with probability 1/n.
DiscreteDist quantize(const ContinuousSpec& spec);

/// Three-atom distribution {1-d w.p. 1-d, 1 w.p. d-d^2, 1/d+1 w.p. d^2}.
DiscreteDist pathological(double delta);

/// Four bell curves of increasing location; used as a representative mixture
/// when comparing M-SERPT against Gittins.
NormalMixture four_bell_mixture();

/// M/G/1 system: Poisson arrivals at rate lambda, sizes drawn from dist.
class MG1 {
 public:
  /// Throws ParameterError for negative lambda, StabilityError for load >= 1.
  MG1(DiscreteDist dist, double lambda);

  /// Builds the system with the given load instead of an arrival rate.
  static MG1 with_load(DiscreteDist dist, double rho);

  const DiscreteDist& dist() const { return dist_; }
  double lambda() const { return lambda_; }
  double load() const { return lambda_ * dist_.mean(); }

 private:
  DiscreteDist dist_;
  double lambda_;
};

}  // namespace soapsched
