#include "soapsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <queue>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "soapsched/error.hpp"
#include "soapsched/parallel.hpp"

namespace soapsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRankTol = 1e-12;
constexpr std::uint64_t kSizeStreamSalt = 0x9E3779B97F4A7C15ull;

double tol_at(double v) { return kRankTol * std::max(1.0, std::abs(v)); }

struct RankState {
  double rank;
  double slope;
  double next_bp;
};

// Rank of a job at its current age. SOAP policies look only at age; SRPT
// looks at remaining size.
class RankModel {
 public:
  explicit RankModel(const PiecewiseLinearFn* fn) : fn_(fn) {}

  const PiecewiseLinearFn* function() const { return fn_; }

  // `piece` caches the job's last piece; ages only grow, so lookups are
  // usually a step or two forward.
  RankState at(const JobState& j, std::size_t& piece) const {
    if (!fn_) return {j.size - j.age, -1.0, kInf};
    piece = fn_->piece_index(j.age, piece);
    return {fn_->value_in_piece(piece, j.age), fn_->pieces()[piece].slope, fn_->piece_end(piece)};
  }

 private:
  const PiecewiseLinearFn* fn_;
};

struct Entry {
  double rank;
  int rising;  // 1 if the rank increases with service
  std::uint64_t id;
  std::uint32_t slot;

  bool operator>(const Entry& o) const {
    if (rank != o.rank) return rank > o.rank;
    if (rising != o.rising) return rising > o.rising;
    return id > o.id;
  }
};

struct Member {
  std::uint32_t slot;
  double slope;
  double next_bp;
  double rate;
};

class Simulator {
 public:
  Simulator(const SimConfig& cfg, const PiecewiseLinearFn* rank)
      : cfg_(cfg),
        model_(rank),
        arrivals_(cfg.seed),
        sizes_(cfg.seed ^ kSizeStreamSalt),
        interarrival_(cfg.mg1.lambda() > 0.0 ? cfg.mg1.lambda() : 1.0) {
    if (!cfg.trace_path.empty()) {
      trace_ = std::make_unique<std::ofstream>(cfg.trace_path);
      if (!*trace_) throw std::runtime_error("cannot open trace file " + cfg.trace_path);
      *trace_ << "time,event,job_id,age,rank\n";
      trace_->precision(17);
    }
  }

  SimResult run();

 private:
  void admit();
  void select();
  void release_group();
  void complete(std::uint32_t slot);
  void trace(const char* event, const JobState& j, double rank) {
    if (trace_) *trace_ << now_ << ',' << event << ',' << j.id << ',' << j.age << ',' << rank << '\n';
  }
  RankState rank_of(std::uint32_t slot) { return model_.at(jobs_[slot], piece_[slot]); }
  void push_waiting(std::uint32_t slot) {
    const JobState& j = jobs_[slot];
    const RankState s = rank_of(slot);
    heap_.push({s.rank, s.slope > 0.0 ? 1 : 0, j.id, slot});
  }

  const SimConfig& cfg_;
  RankModel model_;
  std::mt19937_64 arrivals_;
  std::mt19937_64 sizes_;
  std::exponential_distribution<double> interarrival_;
  std::unique_ptr<std::ofstream> trace_;

  std::vector<JobState> jobs_;
  std::vector<std::size_t> piece_;
  std::vector<Entry> tied_;
  std::vector<Member> survivors_;
  std::vector<std::uint32_t> free_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
  std::vector<Member> group_;
  double group_rank_ = 0.0;
  bool group_rising_ = false;

  double now_ = 0.0;
  double next_arrival_ = kInf;
  std::uint64_t next_id_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t warm_ = 0;
  std::uint64_t batch_size_ = 1;
  std::vector<double> batch_sums_;
  double measured_sum_ = 0.0;
  double busy_ = 0.0;
  double done_work_ = 0.0;
};

void Simulator::admit() {
  const double size = cfg_.mg1.dist().sample(sizes_);
  std::uint32_t slot;
  if (!free_.empty()) {
    slot = free_.back();
    free_.pop_back();
    jobs_[slot] = {next_id_++, size, 0.0, now_};
    piece_[slot] = 0;
  } else {
    slot = static_cast<std::uint32_t>(jobs_.size());
    jobs_.push_back({next_id_++, size, 0.0, now_});
    piece_.push_back(0);
  }
  if (trace_) trace("arrival", jobs_[slot], rank_of(slot).rank);
  push_waiting(slot);
}

void Simulator::release_group() {
  for (const Member& m : group_) push_waiting(m.slot);
  group_.clear();
}

void Simulator::select() {
  std::vector<Entry>& tied = tied_;
  tied.clear();
  tied.push_back(heap_.top());
  heap_.pop();
  const Entry head = tied.front();
  if (head.rising) {
    while (!heap_.empty() && heap_.top().rank <= head.rank + tol_at(head.rank)) {
      tied.push_back(heap_.top());
      heap_.pop();
    }
    // A tied job whose rank does not rise keeps priority over rising ones.
    const Entry* flat = nullptr;
    for (const Entry& e : tied)
      if (!e.rising && (!flat || e.id < flat->id)) flat = &e;
    if (flat) {
      const Entry chosen = *flat;
      for (const Entry& e : tied)
        if (e.slot != chosen.slot) heap_.push(e);
      tied.assign(1, chosen);
    }
  }
  group_rank_ = tied.front().rank;
  group_rising_ = tied.front().rising != 0;
  double inverse_sum = 0.0;
  for (const Entry& e : tied) {
    const RankState s = rank_of(e.slot);
    group_.push_back({e.slot, s.slope, s.next_bp, 1.0});
    group_rank_ = std::min(group_rank_, e.rank);
    if (group_rising_) inverse_sum += 1.0 / s.slope;
  }
  if (group_.size() > 1)
    for (Member& m : group_) m.rate = (1.0 / m.slope) / inverse_sum;
  if (trace_)
    for (const Member& m : group_) trace("serve", jobs_[m.slot], group_rank_);
}

void Simulator::complete(std::uint32_t slot) {
  JobState& j = jobs_[slot];
  j.age = j.size;
  done_work_ += j.size;
  if (trace_) trace("completion", j, kInf);
  if (completed_ >= warm_) {
    const double response = now_ - j.arrival;
    measured_sum_ += response;
    const std::uint64_t b = (completed_ - warm_) / batch_size_;
    if (b < batch_sums_.size()) batch_sums_[b] += response;
  }
  ++completed_;
  free_.push_back(slot);
}

SimResult Simulator::run() {
  const double lambda = cfg_.mg1.lambda();
  warm_ = static_cast<std::uint64_t>(std::floor(cfg_.warmup * static_cast<double>(cfg_.jobs)));
  const std::uint64_t measured = cfg_.jobs - warm_;
  batch_size_ = std::max<std::uint64_t>(1, measured / static_cast<std::uint64_t>(cfg_.batches));
  batch_sums_.assign(static_cast<std::size_t>(std::min<std::uint64_t>(
                         static_cast<std::uint64_t>(cfg_.batches), measured / batch_size_)),
                     0.0);
  if (lambda > 0.0) next_arrival_ = interarrival_(arrivals_);

  while (completed_ < cfg_.jobs) {
    if (group_.empty()) {
      if (heap_.empty()) {
        if (lambda > 0.0) {
          now_ = next_arrival_;
          next_arrival_ = now_ + interarrival_(arrivals_);
        }
        admit();
      }
      select();
      continue;
    }

    const double to_arrival = next_arrival_ - now_;
    double to_done = kInf, to_bp = kInf, to_cross = kInf, to_rank = kInf;
    double rank_target = 0.0;
    for (const Member& m : group_) {
      const JobState& j = jobs_[m.slot];
      to_done = std::min(to_done, (j.size - j.age) / m.rate);
    }
    if (group_.size() == 1) {
      // A lone job keeps the server until its rank reaches the best waiting
      // rank, so intermediate breakpoints need no events.
      const PiecewiseLinearFn* fn = model_.function();
      if (fn && !heap_.empty()) {
        const std::uint32_t slot = group_.front().slot;
        const double w = heap_.top().rank;
        const bool tied = rank_of(slot).rank >= w - tol_at(w);
        rank_target = fn->first_reaching(jobs_[slot].age, piece_[slot], tied ? w + tol_at(w) : w, tied);
        if (rank_target < fn->end()) to_rank = rank_target - jobs_[slot].age;
      }
    } else {
      for (const Member& m : group_)
        to_bp = std::min(to_bp, (m.next_bp - jobs_[m.slot].age) / m.rate);
      if (!heap_.empty()) {
        double growth = 0.0;  // d(rank)/dt of the group
        for (const Member& m : group_) growth += 1.0 / m.slope;
        growth = 1.0 / growth;
        to_cross = std::max(0.0, heap_.top().rank - group_rank_) / growth;
      }
    }
    const double dt = std::min({to_arrival, to_done, to_bp, to_cross, to_rank});

    for (const Member& m : group_) jobs_[m.slot].age += m.rate * dt;
    if (dt == to_rank && to_rank < to_done) jobs_[group_.front().slot].age = rank_target;
    busy_ += dt;
    const bool arrival = to_arrival <= dt;
    now_ = arrival ? next_arrival_ : now_ + dt;

    const bool shared = group_.size() > 1;
    std::vector<Member>& survivors = survivors_;
    survivors.clear();
    for (const Member& m : group_) {
      JobState& j = jobs_[m.slot];
      if (j.size - j.age <= tol_at(j.size) ||
          (dt == to_done && (j.size - j.age) / m.rate <= 0.0)) {
        complete(m.slot);
        continue;
      }
      if (shared && std::isfinite(m.next_bp) && m.next_bp - j.age <= tol_at(m.next_bp)) j.age = m.next_bp;
      survivors.push_back(m);
    }
    group_.swap(survivors);
    if (dt == to_done && group_.size() == survivors.size()) {
      // Rounding left the finishing job just short of its size.
      std::size_t k = 0;
      for (std::size_t i = 1; i < group_.size(); ++i) {
        const JobState& a = jobs_[group_[i].slot];
        const JobState& b = jobs_[group_[k].slot];
        if ((a.size - a.age) / group_[i].rate < (b.size - b.age) / group_[k].rate) k = i;
      }
      complete(group_[k].slot);
      group_.erase(group_.begin() + static_cast<std::ptrdiff_t>(k));
    }

    if (arrival) {
      next_arrival_ = now_ + interarrival_(arrivals_);
      admit();
    }
    if (trace_)
      for (const Member& m : group_) trace("preempt", jobs_[m.slot], rank_of(m.slot).rank);
    release_group();
    if (heap_.empty()) continue;
    select();
  }

  // Work conservation: busy time equals completed work plus partial service.
  double partial = 0.0;
  for (std::size_t s = 0; s < jobs_.size(); ++s) partial += jobs_[s].age;
  for (std::uint32_t s : free_) partial -= jobs_[s].age;
  const double served = done_work_ + partial;
  if (std::abs(busy_ - served) > 1e-7 * std::max(1.0, busy_))
    throw std::logic_error("work conservation violated: busy " + std::to_string(busy_) +
                           " vs served " + std::to_string(served));

  SimResult r;
  r.policy = cfg_.policy.kind;
  r.load = cfg_.mg1.load();
  r.seed = cfg_.seed;
  r.completions = measured;
  r.mean_response = measured_sum_ / static_cast<double>(measured);
  r.busy_time = busy_;
  r.work_served = served;
  const std::size_t nb = batch_sums_.size();
  if (nb >= 2) {
    double mean = 0.0;
    for (double s : batch_sums_) mean += s / static_cast<double>(batch_size_);
    mean /= static_cast<double>(nb);
    double var = 0.0;
    for (double s : batch_sums_) {
      const double d = s / static_cast<double>(batch_size_) - mean;
      var += d * d;
    }
    var /= static_cast<double>(nb - 1);
    const boost::math::students_t t(static_cast<double>(nb - 1));
    r.ci_halfwidth = boost::math::quantile(boost::math::complement(t, 0.025)) *
                     std::sqrt(var / static_cast<double>(nb));
  }
  return r;
}

}  // namespace

Event next_event(const JobState& job, double waiting_min_rank, const PiecewiseLinearFn& rank,
                 double time_to_arrival) {
  Event e{EventKind::Completion, job.size - job.age};
  const std::size_t i = rank.piece_index(job.age);
  const double bp = rank.piece_end(i) - job.age;
  if (bp < e.delay) e = {EventKind::Breakpoint, bp};
  const double slope = rank.pieces()[i].slope;
  if (slope > 0.0 && std::isfinite(waiting_min_rank)) {
    const double cross = std::max(0.0, (waiting_min_rank - rank.value_in_piece(i, job.age)) / slope);
    if (cross < e.delay) e = {EventKind::RankCrossing, cross};
  }
  if (time_to_arrival < e.delay) e = {EventKind::Arrival, time_to_arrival};
  return e;
}

SimResult simulate(const SimConfig& config) {
  if (config.policy.kind == Policy::PS)
    throw UnsupportedError("PS is not simulated; use the closed form");
  if (!(config.mg1.load() < 1.0)) throw StabilityError("simulation needs load below 1");
  if (config.jobs == 0) throw ParameterError("simulation needs at least one job");
  if (!(config.warmup >= 0.0 && config.warmup < 1.0))
    throw ParameterError("warmup fraction must lie in [0, 1)");
  if (config.batches < 2) throw ParameterError("batch means needs at least 2 batches");

  std::unique_ptr<PiecewiseLinearFn> rank;
  if (config.policy.kind != Policy::SRPT)
    rank = std::make_unique<PiecewiseLinearFn>(policy_rank(config.policy, config.mg1.dist()));
  Simulator sim(config, rank.get());
  return sim.run();
}

std::vector<SimResult> compare_policies(const MG1& mg1, const std::vector<PolicySpec>& policies,
                                        const SimConfig& base) {
  return parallel_map<SimResult>(policies.size(), [&](std::size_t i) {
    SimConfig cfg = base;
    cfg.mg1 = mg1;
    cfg.policy = policies[i];
    cfg.trace_path.clear();
    return simulate(cfg);
  });
}

double ratio_ci(double a, double ci_a, double b, double ci_b) {
  const double r = a / b;
  return r * std::hypot(ci_a / a, ci_b / b);
}

}  // namespace soapsched
