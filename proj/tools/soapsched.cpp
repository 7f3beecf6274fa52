// soapsched: rank functions, exact mean response times and simulation for
// SOAP scheduling policies in the M/G/1 queue.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "soapsched/analytic.hpp"
#include "soapsched/dist_io.hpp"
#include "soapsched/error.hpp"
#include "soapsched/hillvalley.hpp"
#include "soapsched/parallel.hpp"
#include "soapsched/rank.hpp"
#include "soapsched/sim.hpp"
#include "soapsched/verify.hpp"

#ifndef SOAPSCHED_VERSION
#define SOAPSCHED_VERSION "dev"
#endif

using nlohmann::json;
using namespace soapsched;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitInput = 2;

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ParameterError("not a number: '" + item + "'");
    }
    if (used != item.size()) throw ParameterError("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError("empty list");
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Output goes to --out when given, stdout otherwise. Every output carries a
// manifest of the command line so it can be regenerated.
class Output {
 public:
  Output(std::string command, const std::string& path) : command_(std::move(command)) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output file " + path);
      out_ = &file_;
    }
  }

  json& params() { return params_; }

  json manifest() const {
    return {{"command", command_},
            {"params", params_},
            {"version", SOAPSCHED_VERSION},
            {"runtime_s", std::chrono::duration<double>(Clock::now() - start_).count()}};
  }

  void write_json(json body) {
    body["manifest"] = manifest();
    *out_ << body.dump(2) << '\n';
  }

  // CSV with the manifest as a leading comment line.
  void write_csv(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    *out_ << "# manifest " << manifest().dump() << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) *out_ << (i ? "," : "") << header[i];
    *out_ << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) *out_ << (i ? "," : "") << row[i];
      *out_ << '\n';
    }
  }

 private:
  std::string command_;
  json params_ = json::object();
  std::ofstream file_;
  std::ostream* out_ = &std::cout;
  Clock::time_point start_ = Clock::now();
};

struct LoadArgs {
  std::optional<double> lambda;
  std::optional<double> rho;

  void add(CLI::App* cmd) {
    auto* l = cmd->add_option("--lambda", lambda, "Arrival rate");
    auto* r = cmd->add_option("--rho", rho, "Load; sets lambda = rho / E[X]");
    l->excludes(r);
  }

  MG1 build(const DiscreteDist& d, json& params) const {
    if (rho) {
      params["rho"] = *rho;
      return MG1::with_load(d, *rho);
    }
    if (!lambda) throw ParameterError("one of --lambda or --rho is required");
    params["lambda"] = *lambda;
    return MG1(d, *lambda);
  }
};

struct SimArgs {
  std::uint64_t jobs = 1'000'000;
  std::uint64_t seed = 42;
  double warmup = 0.1;
  int batches = 20;

  void add(CLI::App* cmd) {
    cmd->add_option("--jobs", jobs, "Completions simulated, warmup included")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--warmup", warmup, "Fraction of completions discarded")->capture_default_str();
    cmd->add_option("--batches", batches, "Batch count for the confidence interval")
        ->capture_default_str();
  }

  SimConfig config(const MG1& mg1, json& params) const {
    params["jobs"] = jobs;
    params["seed"] = seed;
    params["warmup"] = warmup;
    params["batches"] = batches;
    SimConfig c{mg1, Policy::FCFS, jobs, warmup, seed, batches, {}};
    return c;
  }
};

json sim_json(const SimResult& r) {
  return {{"policy", policy_name(r.policy)}, {"rho", r.load},
          {"mean_response", r.mean_response}, {"ci_halfwidth", r.ci_halfwidth},
          {"completions", r.completions}, {"seed", r.seed}};
}

// rank-dump: the three rank functions at every atom plus evenly spaced ages
// inside each gap.
int cmd_rank_dump(const std::string& dist_path, int midpoints, const std::string& format,
                  const std::string& out_path) {
  if (midpoints < 0) throw ParameterError("--midpoints must be non-negative");
  Output out("rank-dump", out_path);
  out.params()["dist"] = dist_path;
  out.params()["midpoints"] = midpoints;
  const DiscreteDist d = load_distribution(dist_path);
  const auto [gittins, table] = gittins_rank(d);
  const PiecewiseLinearFn serpt = serpt_rank(d);
  const PiecewiseLinearFn mserpt = mserpt_rank(d);

  std::vector<double> ages;
  double lo = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double hi = d.atom(i).size;
    ages.push_back(lo);
    for (int k = 1; k <= midpoints; ++k) ages.push_back(lo + (hi - lo) * k / (midpoints + 1));
    lo = hi;
  }

  if (format == "json") {
    json rows = json::array();
    for (double a : ages)
      rows.push_back({{"age", a}, {"rank_gittins", gittins(a)}, {"rank_serpt", serpt(a)},
                      {"rank_mserpt", mserpt(a)}});
    out.write_json({{"rows", rows},
                    {"hills_gittins", to_json(decompose(gittins))},
                    {"hills_mserpt", to_json(decompose(mserpt))}});
  } else {
    std::vector<std::vector<std::string>> rows;
    for (double a : ages) rows.push_back({num(a), num(gittins(a)), num(serpt(a)), num(mserpt(a))});
    out.write_csv({"age", "rank_gittins", "rank_serpt", "rank_mserpt"}, rows);
  }
  return kExitOk;
}

int cmd_analyze(const std::string& dist_path, const LoadArgs& load, const std::string& policy,
                bool per_size, const std::string& format, const std::string& out_path) {
  Output out("analyze", out_path);
  out.params()["dist"] = dist_path;
  out.params()["policy"] = policy;
  const DiscreteDist d = load_distribution(dist_path);
  const MG1 mg1 = load.build(d, out.params());
  const AnalyticResult r = mean_response(mg1, parse_policy(policy));

  if (format == "csv") {
    std::vector<std::vector<std::string>> rows;
    for (const SizeResponse& s : r.per_size)
      rows.push_back({num(s.size), num(s.prob), num(s.waiting), num(s.residence), num(s.response)});
    rows.push_back({"mean", "1", num(r.mean_waiting), num(r.mean_residence), num(r.mean_response)});
    out.write_csv({"size", "prob", "waiting", "residence", "response"}, rows);
    return kExitOk;
  }
  json body = {{"policy", policy_name(r.policy)}, {"rho", r.load},
               {"lambda", mg1.lambda()}, {"mean_waiting", r.mean_waiting},
               {"mean_residence", r.mean_residence}, {"mean_response", r.mean_response},
               {"exact", r.exact}};
  if (per_size) {
    json rows = json::array();
    for (const SizeResponse& s : r.per_size)
      rows.push_back({{"size", s.size}, {"prob", s.prob}, {"waiting", s.waiting},
                      {"residence", s.residence}, {"response", s.response}});
    body["per_size"] = rows;
  }
  out.write_json(body);
  return kExitOk;
}

int cmd_simulate(const std::string& dist_path, const LoadArgs& load, const SimArgs& sim,
                 const std::string& policy, const std::string& trace, const std::string& format,
                 const std::string& out_path) {
  Output out("simulate", out_path);
  out.params()["dist"] = dist_path;
  out.params()["policy"] = policy;
  const DiscreteDist d = load_distribution(dist_path);
  const MG1 mg1 = load.build(d, out.params());
  SimConfig cfg = sim.config(mg1, out.params());
  cfg.policy = parse_policy(policy);
  cfg.trace_path = trace;
  if (!trace.empty()) out.params()["trace"] = trace;
  const SimResult r = simulate(cfg);
  if (format == "csv") {
    out.write_csv({"policy", "rho", "mean_response", "ci_halfwidth", "completions", "seed"},
                  {{policy_name(r.policy), num(r.load), num(r.mean_response), num(r.ci_halfwidth),
                    std::to_string(r.completions), std::to_string(r.seed)}});
  } else {
    out.write_json(sim_json(r));
  }
  return kExitOk;
}

// compare: simulated means on common random numbers next to the analytic
// value (exact or lower bound) for each policy. PS is analytic only.
int cmd_compare(const std::string& dist_path, const LoadArgs& load, const SimArgs& sim,
                const std::string& policies, const std::string& format,
                const std::string& out_path) {
  Output out("compare", out_path);
  out.params()["dist"] = dist_path;
  out.params()["policies"] = policies;
  const DiscreteDist d = load_distribution(dist_path);
  const MG1 mg1 = load.build(d, out.params());
  const SimConfig base = sim.config(mg1, out.params());

  std::vector<Policy> kinds;
  for (const std::string& name : split_names(policies)) kinds.push_back(parse_policy(name));
  if (kinds.empty()) throw ParameterError("--policies is empty");
  std::vector<PolicySpec> simulated;
  for (Policy p : kinds)
    if (p != Policy::PS) simulated.push_back(p);
  const std::vector<SimResult> results = compare_policies(mg1, simulated, base);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  json rows = json::array();
  std::vector<std::vector<std::string>> csv;
  std::size_t next = 0;
  for (Policy p : kinds) {
    double mean = nan, ci = nan, analytic = nan;
    std::string mode = "none";
    if (p != Policy::PS) {
      mean = results[next].mean_response;
      ci = results[next].ci_halfwidth;
      ++next;
    }
    if (p == Policy::SRPT) {
      analytic = srpt_lower_bound(mg1);
      mode = "lower-bound";
    } else {
      const AnalyticResult a = mean_response(mg1, p);
      analytic = a.mean_response;
      mode = a.exact ? "exact" : "lower-bound";
    }
    json row = {{"policy", policy_name(p)}, {"analytic", analytic}, {"analytic_mode", mode}};
    row["mean_response"] = std::isnan(mean) ? json(nullptr) : json(mean);
    row["ci_halfwidth"] = std::isnan(ci) ? json(nullptr) : json(ci);
    rows.push_back(row);
    csv.push_back({policy_name(p), num(mean), num(ci), num(analytic), mode});
  }
  if (format == "csv")
    out.write_csv({"policy", "mean_response", "ci_halfwidth", "analytic", "analytic_mode"}, csv);
  else
    out.write_json({{"rho", mg1.load()}, {"results", rows}});
  return kExitOk;
}

int cmd_ratio_curve(const std::string& grid, int points, const std::string& out_path) {
  Output out("ratio-curve", out_path);
  std::vector<double> rhos;
  if (!grid.empty()) {
    rhos = parse_list(grid);
    out.params()["grid"] = grid;
  } else {
    if (points < 2) throw ParameterError("--points must be at least 2");
    out.params()["points"] = points;
    for (int i = 0; i < points; ++i) rhos.push_back(0.999 * i / (points - 1));
  }
  for (double r : rhos)
    if (!(r >= 0.0 && r < 1.0)) throw ParameterError("load " + num(r) + " outside [0, 1)");
  const auto [t1, t2] = ratio_bound_thresholds();
  rhos.push_back(t1);
  rhos.push_back(t2);
  std::sort(rhos.begin(), rhos.end());
  rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());
  std::vector<std::vector<std::string>> rows;
  for (double r : rhos) rows.push_back({num(r), num(ratio_bound(r))});
  out.write_csv({"rho", "bound"}, rows);
  return kExitOk;
}

// A simulated M-SERPT/Gittins ratio at load 1 - eps needs roughly 1/eps^2
// completions before the batch means settle.
bool sweep_sim_feasible(double epsilon, std::uint64_t jobs) {
  return jobs > 0 && static_cast<double>(jobs) >= 10.0 / (epsilon * epsilon);
}

int cmd_pathological_sweep(const std::string& deltas_text, std::uint64_t sim_jobs,
                           std::uint64_t seed, const std::string& out_path) {
  Output out("pathological-sweep", out_path);
  out.params()["deltas"] = deltas_text;
  out.params()["sim_jobs"] = sim_jobs;
  out.params()["seed"] = seed;
  const std::vector<double> deltas = parse_list(deltas_text);
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw ParameterError("delta " + num(d) + " outside (0, 1)");

  struct Row {
    PathologicalPoint p;
    double sim_ratio = std::numeric_limits<double>::quiet_NaN();
    double sim_ci = std::numeric_limits<double>::quiet_NaN();
    std::string flag = "off";
  };
  const std::vector<Row> rows = parallel_map<Row>(deltas.size(), [&](std::size_t i) {
    Row row{pathological_point(deltas[i])};
    if (sim_jobs == 0) return row;
    if (!sweep_sim_feasible(row.p.epsilon, sim_jobs)) {
      row.flag = "skipped-budget";
      return row;
    }
    const MG1 mg1 = MG1::with_load(pathological(deltas[i]), 1.0 - row.p.epsilon);
    SimConfig cfg{mg1, Policy::MSERPT, sim_jobs, 0.1, seed, 20, {}};
    const SimResult m = simulate(cfg);
    cfg.policy = Policy::Gittins;
    const SimResult g = simulate(cfg);
    row.sim_ratio = m.mean_response / g.mean_response;
    row.sim_ci = ratio_ci(m.mean_response, m.ci_halfwidth, g.mean_response, g.ci_halfwidth);
    row.flag = "ok";
    return row;
  });

  std::vector<std::vector<std::string>> csv;
  for (const Row& r : rows)
    csv.push_back({num(r.p.delta), num(r.p.epsilon), num(1.0 - r.p.epsilon), num(r.p.closed_form),
                   num(r.p.mserpt_response), num(r.p.gittins_response), num(r.p.quasi_ratio),
                   num(r.sim_ratio), num(r.sim_ci), r.flag});
  out.write_csv({"delta", "epsilon", "rho", "closed_form", "mserpt_response", "gittins_response",
                 "quasi_ratio", "sim_ratio", "sim_ratio_ci", "sim"},
                csv);
  return kExitOk;
}

int cmd_verify(int cases, std::uint64_t seed, bool with_sim, const std::string& format,
               const std::string& out_path) {
  if (cases < 1) throw ParameterError("--cases must be at least 1");
  Output out("verify", out_path);
  out.params()["cases"] = cases;
  out.params()["seed"] = seed;
  out.params()["with_sim"] = with_sim;
  VerifyOptions opt;
  opt.cases = cases;
  opt.seed = seed;
  opt.with_sim = with_sim;
  const VerifyReport rep = run_verify(opt);
  if (format == "json") {
    out.write_json({{"cases", rep.cases}, {"checks", rep.checks}, {"failures", rep.failures},
                    {"failing_seeds", rep.failing_seeds}, {"ok", rep.ok()}});
  } else {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"cases", std::to_string(rep.cases)});
    rows.push_back({"checks", std::to_string(rep.checks)});
    rows.push_back({"failures", std::to_string(rep.failures.size())});
    for (std::uint64_t s : rep.failing_seeds) rows.push_back({"failing_seed", std::to_string(s)});
    out.write_csv({"item", "value"}, rows);
    for (const std::string& f : rep.failures) std::cerr << "FAIL " << f << '\n';
  }
  return rep.ok() ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soapsched: SOAP scheduling rank functions, analysis and simulation"};
  app.set_version_flag("--version", SOAPSCHED_VERSION);
  app.require_subcommand(1);

  std::string dist, policy = "mserpt", out, trace, grid, deltas = "0.1,0.01,0.001";
  std::string policies = "gittins,serpt,mserpt,fb,fcfs";
  int midpoints = 4, points = 101, cases = 200;
  bool per_size = false, with_sim = false;
  std::uint64_t verify_seed = 7, sweep_jobs = 0, sweep_seed = 42;
  LoadArgs load;
  SimArgs sim;

  auto formats = CLI::IsMember({"csv", "json"});
  std::string rank_format = "csv", analyze_format = "json", sim_format = "json",
              compare_format = "csv", verify_format = "csv";

  auto* rank_dump = app.add_subcommand("rank-dump", "Gittins, SERPT and M-SERPT ranks as CSV");
  rank_dump->add_option("--dist", dist, "Distribution spec (JSON file)")->required();
  rank_dump->add_option("--midpoints", midpoints, "Ages per gap between atoms")->capture_default_str();
  rank_dump->add_option("--format", rank_format, "csv or json")->capture_default_str()->check(formats);
  rank_dump->add_option("--out", out, "Output file (default stdout)");

  auto* analyze = app.add_subcommand("analyze", "Exact or lower-bound mean response time");
  analyze->add_option("--dist", dist, "Distribution spec (JSON file)")->required();
  load.add(analyze);
  analyze->add_option("--policy", policy, "gittins|serpt|mserpt|fb|fcfs|ps")->capture_default_str();
  analyze->add_flag("--per-size", per_size, "Include per-size rows");
  analyze->add_option("--format", analyze_format, "csv or json")->capture_default_str()->check(formats);
  analyze->add_option("--out", out, "Output file (default stdout)");

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one policy");
  simulate_cmd->add_option("--dist", dist, "Distribution spec (JSON file)")->required();
  load.add(simulate_cmd);
  sim.add(simulate_cmd);
  simulate_cmd->add_option("--policy", policy, "gittins|serpt|mserpt|fb|fcfs|srpt")
      ->capture_default_str();
  simulate_cmd->add_option("--trace", trace, "Write an event log CSV");
  simulate_cmd->add_option("--format", sim_format, "csv or json")->capture_default_str()->check(formats);
  simulate_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* compare = app.add_subcommand("compare", "Simulate several policies on common random numbers");
  compare->add_option("--dist", dist, "Distribution spec (JSON file)")->required();
  load.add(compare);
  sim.add(compare);
  compare->add_option("--policies", policies, "Comma-separated policy list")->capture_default_str();
  compare->add_option("--format", compare_format, "csv or json")->capture_default_str()->check(formats);
  compare->add_option("--out", out, "Output file (default stdout)");

  auto* ratio = app.add_subcommand("ratio-curve", "M-SERPT/Gittins ratio bound against load");
  ratio->add_option("--grid", grid, "Comma-separated loads in [0, 1)");
  ratio->add_option("--points", points, "Evenly spaced loads on [0, 0.999]")->capture_default_str();
  ratio->add_option("--out", out, "Output file (default stdout)");

  auto* sweep = app.add_subcommand("pathological-sweep", "Ratio on the three-atom distribution");
  sweep->add_option("--deltas", deltas, "Comma-separated deltas in (0, 1)")->capture_default_str();
  sweep->add_option("--sim-jobs", sweep_jobs, "Completions per simulated policy; 0 disables")
      ->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "Random seed")->capture_default_str();
  sweep->add_option("--out", out, "Output file (default stdout)");

  auto* verify = app.add_subcommand("verify", "Randomized structural property suite");
  verify->add_option("--cases", cases, "Random distributions")->capture_default_str();
  verify->add_option("--seed", verify_seed, "Random seed")->capture_default_str();
  verify->add_flag("--with-sim", with_sim, "Also check simulator reproducibility");
  verify->add_option("--format", verify_format, "csv or json")->capture_default_str()->check(formats);
  verify->add_option("--out", out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*rank_dump) return cmd_rank_dump(dist, midpoints, rank_format, out);
    if (*analyze) return cmd_analyze(dist, load, policy, per_size, analyze_format, out);
    if (*simulate_cmd) return cmd_simulate(dist, load, sim, policy, trace, sim_format, out);
    if (*compare) return cmd_compare(dist, load, sim, policies, compare_format, out);
    if (*ratio) return cmd_ratio_curve(grid, points, out);
    if (*sweep) return cmd_pathological_sweep(deltas, sweep_jobs, sweep_seed, out);
    if (*verify) return cmd_verify(cases, verify_seed, with_sim, verify_format, out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "soapsched: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "soapsched: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::logic_error& e) {
    std::cerr << "soapsched: invariant failure: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "soapsched: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}
