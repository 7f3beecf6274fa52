#include "soapsched/rank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "soapsched/error.hpp"

namespace soapsched {

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::Gittins: return "gittins";
    case Policy::SERPT: return "serpt";
    case Policy::MSERPT: return "mserpt";
    case Policy::FB: return "fb";
    case Policy::FCFS: return "fcfs";
    case Policy::SRPT: return "srpt";
    case Policy::PS: return "ps";
    case Policy::Custom: return "custom";
  }
  return "unknown";
}

Policy parse_policy(std::string_view name) {
  std::string key;
  for (char c : name)
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "gittins") return Policy::Gittins;
  if (key == "serpt") return Policy::SERPT;
  if (key == "mserpt") return Policy::MSERPT;
  if (key == "fb" || key == "las") return Policy::FB;
  if (key == "fcfs") return Policy::FCFS;
  if (key == "srpt") return Policy::SRPT;
  if (key == "ps") return Policy::PS;
  throw ParameterError("unknown policy '" + std::string(name) + "'");
}

namespace {

// Tail and integrated tail at the start of inter-atom segment k, where
// segment 0 is [0, x_0) and segment k is [x_{k-1}, x_k).
struct SegmentStart {
  double age;
  double tail;
  double integrated;
};

SegmentStart segment_start(const DiscreteDist& d, std::size_t k) {
  if (k == 0) return {0.0, 1.0, 0.0};
  return {d.sizes()[k - 1], d.tail_after(k - 1), d.integrated_tail_at(k - 1)};
}

struct Line {
  double value;  // at the segment start
  double slope;
  std::size_t stop;
};

double intersect(const Line& l, const Line& r) { return (r.value - l.value) / (l.slope - r.slope); }

}  // namespace

PiecewiseLinearFn serpt_rank(const DiscreteDist& dist) {
  std::vector<Breakpoint> pieces;
  pieces.reserve(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const SegmentStart s = segment_start(dist, k);
    pieces.push_back({s.age, (dist.mean() - s.integrated) / s.tail, -1.0});
  }
  return PiecewiseLinearFn(std::move(pieces), dist.max_size());
}

PiecewiseLinearFn increasing_envelope(const PiecewiseLinearFn& f) {
  std::vector<Breakpoint> out;
  out.reserve(f.piece_count());
  double running = -std::numeric_limits<double>::infinity();
  auto emit = [&](double age, double value, double slope) {
    if (!out.empty() && out.back().slope == 0.0 && slope == 0.0 && out.back().value == value)
      return;
    out.push_back({age, value, slope});
  };
  for (std::size_t i = 0; i < f.piece_count(); ++i) {
    const Breakpoint& b = f.pieces()[i];
    if (b.slope <= 0.0) {
      running = std::max(running, b.value);
      emit(b.age, running, 0.0);
      continue;
    }
    const double end_value = f.left_limit_at_end(i);
    if (b.value >= running) {
      emit(b.age, b.value, b.slope);
      running = end_value;
    } else if (end_value <= running) {
      emit(b.age, running, 0.0);
    } else {
      const double cross = b.age + (running - b.value) / b.slope;
      emit(b.age, running, 0.0);
      if (cross > out.back().age)
        out.push_back({cross, running, b.slope});
      else
        out.back().slope = b.slope;
      running = end_value;
    }
  }
  return PiecewiseLinearFn(std::move(out), f.end());
}

PiecewiseLinearFn mserpt_rank(const DiscreteDist& dist) {
  return increasing_envelope(serpt_rank(dist));
}

double efficiency(const DiscreteDist& dist, double a, double b) {
  if (!(a >= 0.0 && a < b && b <= dist.max_size()))
    throw DomainError("efficiency needs 0 <= a < b <= max size");
  const double drop = dist.tail(a) - dist.tail(b);
  if (!(drop > 0.0)) throw DomainError("efficiency undefined: no completion mass in (a, b]");
  return (dist.integrated_tail(b) - dist.integrated_tail(a)) / drop;
}

std::pair<PiecewiseLinearFn, GittinsTable> gittins_rank(const DiscreteDist& dist) {
  const std::size_t n = dist.size();
  const auto sizes = dist.sizes();
  std::vector<Breakpoint> pieces;
  GittinsTable table;
  table.reserve(n);
  std::vector<Line> lines;
  std::vector<Line> hull;
  lines.reserve(n);
  hull.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    const SegmentStart s = segment_start(dist, k);
    const double length = sizes[k] - s.age;

    lines.clear();
    std::size_t best = 0;
    for (std::size_t j = k; j < n; ++j) {
      const double drop = s.tail - dist.tail_after(j);
      lines.push_back({(dist.integrated_tail_at(j) - s.integrated) / drop, -s.tail / drop, j});
      if (lines.back().value < lines[best].value) best = lines.size() - 1;
    }
    table.push_back({s.age, lines[best].value, sizes[lines[best].stop]});

    // Lower envelope over t = age - start. Slopes increase with j, so walking
    // j downward visits lines in decreasing slope order.
    hull.clear();
    for (std::size_t idx = lines.size(); idx-- > 0;) {
      const Line& l = lines[idx];
      if (!hull.empty() && hull.back().slope == l.slope) {
        if (hull.back().value <= l.value) continue;
        hull.pop_back();
      }
      while (hull.size() >= 2 &&
             intersect(hull[hull.size() - 2], l) <= intersect(hull[hull.size() - 2], hull.back()))
        hull.pop_back();
      hull.push_back(l);
    }

    std::size_t h = 0;
    while (h + 1 < hull.size() && intersect(hull[h], hull[h + 1]) <= 0.0) ++h;
    pieces.push_back({s.age, lines[best].value, hull[h].slope});
    while (h + 1 < hull.size()) {
      const double t = intersect(hull[h], hull[h + 1]);
      if (!(t < length)) break;
      ++h;
      const double age = s.age + t;
      if (age > pieces.back().age && age < sizes[k])
        pieces.push_back({age, hull[h].value + hull[h].slope * t, hull[h].slope});
      else
        pieces.back().slope = hull[h].slope;
    }
  }
  return {PiecewiseLinearFn(std::move(pieces), dist.max_size()), std::move(table)};
}

PiecewiseLinearFn policy_rank(const PolicySpec& policy, const DiscreteDist& dist) {
  switch (policy.kind) {
    case Policy::Gittins: return gittins_rank(dist).first;
    case Policy::SERPT: return serpt_rank(dist);
    case Policy::MSERPT: return mserpt_rank(dist);
    case Policy::FB: return PiecewiseLinearFn::identity(dist.max_size());
    case Policy::FCFS: return PiecewiseLinearFn::constant(0.0, dist.max_size());
    case Policy::Custom:
      if (!policy.custom) throw ParameterError("custom policy without a rank function");
      return *policy.custom;
    case Policy::SRPT:
    case Policy::PS: break;
  }
  throw UnsupportedError("policy " + policy_name(policy.kind) + " has no rank function of age");
}

}  // namespace soapsched
