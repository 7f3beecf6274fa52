#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "soapsched/dist.hpp"

namespace soapsched {

struct VerifyOptions {
  int cases = 200;
  std::uint64_t seed = 7;
  std::vector<double> loads = {0.3, 0.6, 0.9};
  int midpoints = 4;  // extra ages per inter-atom segment
  bool with_sim = false;
  std::uint64_t sim_jobs = 20'000;
};

struct VerifyReport {
  int cases = 0;
  std::uint64_t checks = 0;
  std::vector<std::string> failures;
  std::vector<std::uint64_t> failing_seeds;

  bool ok() const { return failures.empty(); }
};

/// Random discrete distribution with 2-8 atoms, log-uniform sizes spanning at
/// most four orders of magnitude and Dirichlet(1) probabilities.
DiscreteDist random_discrete(std::mt19937_64& rng, int min_atoms = 2, int max_atoms = 8);

/// Gittins rank at age a by direct enumeration over stopping atoms, without
/// the cached prefix sums.
double brute_force_gittins(const DiscreteDist& dist, double a);

/// Runs the structural property suite on the fixed fixtures and on `cases`
/// random distributions.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace soapsched
