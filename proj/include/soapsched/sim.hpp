#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soapsched/dist.hpp"
#include "soapsched/pwl.hpp"
#include "soapsched/rank.hpp"

namespace soapsched {

struct SimConfig {
  MG1 mg1;
  PolicySpec policy;
  std::uint64_t jobs = 1'000'000;  // completions simulated, warmup included
  double warmup = 0.1;             // fraction of completions discarded
  std::uint64_t seed = 1;
  int batches = 20;
  std::string trace_path;  // optional CSV event log
};

struct SimResult {
  Policy policy = Policy::FCFS;
  double load = 0.0;
  double mean_response = 0.0;
  double ci_halfwidth = 0.0;  // 95% batch means
  std::uint64_t completions = 0;  // measured, after warmup
  std::uint64_t seed = 0;
  double busy_time = 0.0;
  double work_served = 0.0;  // completed sizes plus ages of unfinished jobs
};

struct JobState {
  std::uint64_t id;
  double size;
  double age;
  double arrival;
};

enum class EventKind { Completion, Breakpoint, RankCrossing, Arrival };

struct Event {
  EventKind kind;
  double delay;  // time from now until the event
};

/// Earliest event while `job` is served alone: its completion, the next
/// breakpoint of its rank, the moment its rank reaches `waiting_min_rank`,
/// or the next arrival. Crossing times are exact roots of a linear piece.
Event next_event(const JobState& job, double waiting_min_rank, const PiecewiseLinearFn& rank,
                 double time_to_arrival);

/// Preemptive single-server simulation.
///
/// SOAP policies serve the job of least rank at its current age, ties to the
/// earlier arrival. Jobs whose equal ranks are all rising share the server so
/// their ranks stay equal, which is the limit of the tie-break rule. SRPT
/// serves least remaining size. Throws StabilityError for unstable systems,
/// UnsupportedError for PS, and std::logic_error if work conservation fails.
SimResult simulate(const SimConfig& config);

/// Runs every policy on identical arrival and size streams.
std::vector<SimResult> compare_policies(const MG1& mg1, const std::vector<PolicySpec>& policies,
                                        const SimConfig& base);

/// Half-width of a 95% confidence interval for A/B from independent
/// half-widths (delta method, ignores positive correlation).
double ratio_ci(double a, double ci_a, double b, double ci_b);

}  // namespace soapsched
