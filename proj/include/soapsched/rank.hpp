#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soapsched/dist.hpp"
#include "soapsched/pwl.hpp"

namespace soapsched {

enum class Policy { Gittins, SERPT, MSERPT, FB, FCFS, SRPT, PS, Custom };

/// A scheduling policy. SOAP policies carry (or can build) a rank function of
/// age; SRPT and PS are handled by the simulator and closed forms directly.
struct PolicySpec {
  Policy kind = Policy::FCFS;
  std::optional<PiecewiseLinearFn> custom;

  PolicySpec() = default;
  PolicySpec(Policy k) : kind(k) {}  // NOLINT(google-explicit-constructor)
  static PolicySpec custom_rank(PiecewiseLinearFn fn) {
    PolicySpec p(Policy::Custom);
    p.custom = std::move(fn);
    return p;
  }

  bool has_rank_function() const { return kind != Policy::SRPT && kind != Policy::PS; }
};

std::string policy_name(Policy p);
/// Accepts the lower-case names used by the CLI ("m-serpt" and "mserpt" both
/// work). Throws ParameterError on unknown names.
Policy parse_policy(std::string_view name);

/// Stopping decision behind one Gittins rank value.
struct GittinsEntry {
  double age;
  double rank;
  double stop;  // optimal stopping age b*(age) > age
};
using GittinsTable = std::vector<GittinsEntry>;

/// E[X - a | X > a], slope -1 between atoms.
PiecewiseLinearFn serpt_rank(const DiscreteDist& dist);

/// a -> max_{b <= a} f(b).
PiecewiseLinearFn increasing_envelope(const PiecewiseLinearFn& f);

PiecewiseLinearFn mserpt_rank(const DiscreteDist& dist);

/// int_a^b tail / (tail(a) - tail(b)). Throws DomainError unless
/// 0 <= a < b <= max size and some atom lies in (a, b].
double efficiency(const DiscreteDist& dist, double a, double b);

/// Gittins rank: at every age, the minimum efficiency over atoms beyond it.
/// Between atoms the function is the lower envelope of one line per candidate
/// stopping atom, so it is concave and decreasing on each inter-atom segment.
std::pair<PiecewiseLinearFn, GittinsTable> gittins_rank(const DiscreteDist& dist);

/// Rank function for any SOAP policy. FB is the identity, FCFS the constant
/// zero. Throws UnsupportedError for SRPT and PS.
PiecewiseLinearFn policy_rank(const PolicySpec& policy, const DiscreteDist& dist);

}  // namespace soapsched
