#include "soapsched/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "soapsched/error.hpp"

namespace soapsched {

namespace {

constexpr double kProbSumTol = 1e-12;

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

DiscreteDist::DiscreteDist(std::vector<Atom> atoms) {
  if (atoms.empty()) throw ParameterError("distribution needs at least one atom");
  for (const Atom& a : atoms) {
    if (!(a.size > 0.0) || !std::isfinite(a.size))
      throw ParameterError("atom size must be positive and finite, got " + describe(a.size));
    if (!(a.prob > 0.0) || !std::isfinite(a.prob))
      throw ParameterError("atom probability must be positive, got " + describe(a.prob));
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& l, const Atom& r) { return l.size < r.size; });

  double total = 0.0;
  for (const Atom& a : atoms) {
    total += a.prob;
    if (!sizes_.empty() && sizes_.back() == a.size) {
      probs_.back() += a.prob;
      continue;
    }
    sizes_.push_back(a.size);
    probs_.push_back(a.prob);
  }
  if (std::abs(total - 1.0) > kProbSumTol)
    throw ParameterError("atom probabilities sum to " + describe(total) + ", expected 1");

  const std::size_t n = sizes_.size();
  cdf_.resize(n);
  tails_.resize(n);
  moment1_.resize(n);
  moment2_.resize(n);
  double cum = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += probs_[i];
    m1 += probs_[i] * sizes_[i];
    m2 += probs_[i] * sizes_[i] * sizes_[i];
    cdf_[i] = cum;
    moment1_[i] = m1;
    moment2_[i] = m2;
  }
  double suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    tails_[i] = suffix;
    suffix += probs_[i];
  }
}

DiscreteDist DiscreteDist::point_mass(double size) { return DiscreteDist({{size, 1.0}}); }

std::size_t DiscreteDist::count_at_most(double a) const {
  return static_cast<std::size_t>(std::upper_bound(sizes_.begin(), sizes_.end(), a) -
                                  sizes_.begin());
}

double DiscreteDist::tail(double a) const {
  const std::size_t k = count_at_most(a);
  if (k == 0) return 1.0;
  return tails_[k - 1];
}

double DiscreteDist::integrated_tail_at(std::size_t i) const {
  return moment1_[i] + sizes_[i] * tails_[i];
}

TruncatedMoments DiscreteDist::trunc_moments(double a) const {
  if (a <= 0.0) return {0.0, 0.0};
  const std::size_t k = count_at_most(a);
  const double surv = k == 0 ? 1.0 : tails_[k - 1];
  const double m1 = k == 0 ? 0.0 : moment1_[k - 1];
  const double m2 = k == 0 ? 0.0 : moment2_[k - 1];
  return {m1 + a * surv, m2 + a * a * surv};
}

double DiscreteDist::sample_at(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return sizes_.back();
  return sizes_[static_cast<std::size_t>(it - cdf_.begin())];
}

// ---------------------------------------------------------------------------
// Continuous families

namespace {

const boost::math::normal kStdNormal;

double std_cdf(double z) { return boost::math::cdf(kStdNormal, z); }
double std_pdf(double z) { return boost::math::pdf(kStdNormal, z); }

double exp_partial_mean(double rate, double x) {
  // int_0^x t rate e^{-rate t} dt
  const double rx = rate * x;
  return -std::expm1(-rx) / rate - x * std::exp(-rx);
}

double normal_mass_above_zero(const NormalComponent& c) { return std_cdf(c.mean / c.stddev); }

double mixture_norm(const NormalMixture& m) {
  double z = 0.0;
  for (const auto& c : m.components) z += c.weight * normal_mass_above_zero(c);
  return z;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double bisect_quantile(const ContinuousFamily& family, double u) {
  double lo = 0.0, hi = 1.0;
  while (family_cdf(family, hi) < u) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return hi;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (family_cdf(family, mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const ContinuousFamily& family) {
  auto check_weights = [](double sum, const char* what) {
    if (std::abs(sum - 1.0) > 1e-12)
      throw ParameterError(std::string(what) + " weights sum to " + describe(sum));
  };
  std::visit(
      Overloaded{
          [](const Exponential& e) {
            if (!(e.rate > 0.0)) throw ParameterError("exponential rate must be > 0");
          },
          [](const Pareto& p) {
            if (!(p.shape > 1.0)) throw ParameterError("pareto shape must be > 1");
            if (!(p.scale > 0.0)) throw ParameterError("pareto scale must be > 0");
          },
          [](const Uniform& u) {
            if (!(u.lo >= 0.0) || !(u.hi > u.lo))
              throw ParameterError("uniform needs 0 <= lo < hi");
          },
          [&](const HyperExponential& h) {
            if (h.branches.empty()) throw ParameterError("hyperexponential needs branches");
            double sum = 0.0;
            for (const auto& b : h.branches) {
              if (!(b.prob > 0.0) || !(b.rate > 0.0))
                throw ParameterError("hyperexponential branch needs prob > 0 and rate > 0");
              sum += b.prob;
            }
            check_weights(sum, "hyperexponential");
          },
          [&](const NormalMixture& m) {
            if (m.components.empty()) throw ParameterError("normal mixture needs components");
            double sum = 0.0;
            for (const auto& c : m.components) {
              if (!(c.weight > 0.0) || !(c.stddev > 0.0))
                throw ParameterError("normal component needs weight > 0 and stddev > 0");
              sum += c.weight;
            }
            check_weights(sum, "normal mixture");
            if (!(mixture_norm(m) > 0.0))
              throw ParameterError("normal mixture has no mass above zero");
          },
          [](const PointMass& p) {
            if (!(p.size > 0.0)) throw ParameterError("point mass size must be > 0");
          },
      },
      family);
}

double family_cdf(const ContinuousFamily& family, double x) {
  if (x <= 0.0) return 0.0;
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return -std::expm1(-e.rate * x); },
          [&](const Pareto& p) {
            return x <= p.scale ? 0.0 : 1.0 - std::pow(p.scale / x, p.shape);
          },
          [&](const Uniform& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
          [&](const HyperExponential& h) {
            double c = 0.0;
            for (const auto& b : h.branches) c += b.prob * -std::expm1(-b.rate * x);
            return c;
          },
          [&](const NormalMixture& m) {
            double c = 0.0;
            for (const auto& comp : m.components)
              c += comp.weight * (std_cdf((x - comp.mean) / comp.stddev) -
                                  std_cdf(-comp.mean / comp.stddev));
            return c / mixture_norm(m);
          },
          [&](const PointMass& p) { return x >= p.size ? 1.0 : 0.0; },
      },
      family);
}

double family_partial_mean(const ContinuousFamily& family, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return family_mean(family);
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return exp_partial_mean(e.rate, x); },
          [&](const Pareto& p) {
            if (x <= p.scale) return 0.0;
            return p.shape * p.scale / (p.shape - 1.0) *
                   -std::expm1((p.shape - 1.0) * std::log(p.scale / x));
          },
          [&](const Uniform& u) {
            const double c = std::clamp(x, u.lo, u.hi);
            return (c * c - u.lo * u.lo) / (2.0 * (u.hi - u.lo));
          },
          [&](const HyperExponential& h) {
            double s = 0.0;
            for (const auto& b : h.branches) s += b.prob * exp_partial_mean(b.rate, x);
            return s;
          },
          [&](const NormalMixture& m) {
            double s = 0.0;
            for (const auto& c : m.components) {
              const double z0 = -c.mean / c.stddev;
              const double z1 = (x - c.mean) / c.stddev;
              s += c.weight * (c.mean * (std_cdf(z1) - std_cdf(z0)) +
                               c.stddev * (std_pdf(z0) - std_pdf(z1)));
            }
            return s / mixture_norm(m);
          },
          [&](const PointMass& p) { return x >= p.size ? p.size : 0.0; },
      },
      family);
}

double family_mean(const ContinuousFamily& family) {
  return std::visit(
      Overloaded{
          [](const Exponential& e) { return 1.0 / e.rate; },
          [](const Pareto& p) { return p.shape * p.scale / (p.shape - 1.0); },
          [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
          [](const HyperExponential& h) {
            double s = 0.0;
            for (const auto& b : h.branches) s += b.prob / b.rate;
            return s;
          },
          [](const NormalMixture& m) {
            double s = 0.0;
            for (const auto& c : m.components) {
              const double z0 = -c.mean / c.stddev;
              s += c.weight * (c.mean * (1.0 - std_cdf(z0)) + c.stddev * std_pdf(z0));
            }
            return s / mixture_norm(m);
          },
          [](const PointMass& p) { return p.size; },
      },
      family);
}

double family_quantile(const ContinuousFamily& family, double u) {
  if (u <= 0.0) {
    if (const auto* p = std::get_if<Pareto>(&family)) return p->scale;
    if (const auto* un = std::get_if<Uniform>(&family)) return un->lo;
    if (const auto* pm = std::get_if<PointMass>(&family)) return pm->size;
    return 0.0;
  }
  if (u >= 1.0) {
    if (const auto* un = std::get_if<Uniform>(&family)) return un->hi;
    if (const auto* pm = std::get_if<PointMass>(&family)) return pm->size;
    return std::numeric_limits<double>::infinity();
  }
  if (const auto* e = std::get_if<Exponential>(&family)) return -std::log1p(-u) / e->rate;
  if (const auto* p = std::get_if<Pareto>(&family))
    return p->scale * std::exp(-std::log1p(-u) / p->shape);
  if (const auto* un = std::get_if<Uniform>(&family)) return un->lo + u * (un->hi - un->lo);
  if (const auto* pm = std::get_if<PointMass>(&family)) return pm->size;
  return bisect_quantile(family, u);
}

DiscreteDist quantize(const ContinuousSpec& spec) {
  validate(spec.family);
  if (const auto* pm = std::get_if<PointMass>(&spec.family)) return DiscreteDist::point_mass(pm->size);
  if (spec.points < 2) throw ParameterError("quantization needs at least 2 points");

  const int n = spec.points;
  const double prob = 1.0 / n;
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  double lo_q = family_quantile(spec.family, 0.0);
  double lo_pm = family_partial_mean(spec.family, lo_q);
  for (int k = 0; k < n; ++k) {
    const double hi_q =
        k + 1 == n ? std::numeric_limits<double>::infinity()
                   : family_quantile(spec.family, static_cast<double>(k + 1) / n);
    const double hi_pm = family_partial_mean(spec.family, hi_q);
    double x = (hi_pm - lo_pm) * n;
    x = std::clamp(x, lo_q, hi_q);
    if (!(x > 0.0)) x = std::max(lo_q, std::numeric_limits<double>::min());
    atoms.push_back({x, prob});
    lo_q = hi_q;
    lo_pm = hi_pm;
  }
  // Probabilities 1/n do not sum to exactly 1 in floating point; fold the
  // rounding residue into the last atom.
  double total = 0.0;
  for (const auto& a : atoms) total += a.prob;
  atoms.back().prob += 1.0 - total;
  return DiscreteDist(std::move(atoms));
}

DiscreteDist pathological(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError("pathological delta must lie in (0, 1), got " + describe(delta));
  const double d2 = delta * delta;
  return DiscreteDist({{1.0 - delta, 1.0 - delta}, {1.0, delta - d2}, {1.0 / delta + 1.0, d2}});
}

NormalMixture four_bell_mixture() {
  return NormalMixture{{{0.40, 2.0, 0.5}, {0.30, 6.0, 1.0}, {0.20, 12.0, 1.5}, {0.10, 20.0, 2.0}}};
}

MG1::MG1(DiscreteDist dist, double lambda) : dist_(std::move(dist)), lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("arrival rate must be >= 0, got " + describe(lambda));
  if (!(load() < 1.0))
    throw StabilityError("load " + describe(load()) + " is not below 1");
}

MG1 MG1::with_load(DiscreteDist dist, double rho) {
  if (!(rho >= 0.0)) throw ParameterError("load must be >= 0, got " + describe(rho));
  const double lambda = rho / dist.mean();
  return MG1(std::move(dist), lambda);
}

}  // namespace soapsched
