#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "hysim/stability.hpp"

namespace hysim {

struct SamplerConfig {
  Eigen::VectorXd x0_lo, x0_hi;        // initial-condition box
  Eigen::VectorXd level_lo, level_hi;  // input level box (ignored for 0-UGAS)
  int min_switches = 0;
  int max_switches = 3;
  int trials = 16;
  std::uint64_t seed = 0;
  int refine_rounds = 3;
  double refine_shrink = 0.5;
  int threads = 0;  // 0 = hardware concurrency
};

struct Witness {
  Eigen::VectorXd x0;
  InputSpec input;
};

struct FalsificationReport {
  bool violation_found = false;
  CheckReport best;  // most-violating check over all trials + refinement
  Witness witness;
  int witness_trial = -1;
  std::uint64_t seed = 0;
  long trials_run = 0;
  long trials_failed = 0;  // per-trial simulation errors, recorded not fatal
  std::vector<double> histogram_edges;
  std::vector<long> histogram_counts;  // per-trial max residuals
  std::string note;  // never claims the property holds
};

/// Randomized falsification: `trials` independent simulations with
/// per-trial seed = seed + trial index, then `refine_rounds` of
/// coordinate perturbation around the worst witness with shrinking
/// radius. Deterministic given (cfg, opts) regardless of thread count.
/// Pointwise (grid) estimate kinds are rejected.
FalsificationReport falsify(const HybridSystem& sys, const EstimateSpec& spec,
                            const SamplerConfig& cfg, const SimOptions& opts,
                            const CheckOptions& check_opts = {});

struct RefineResult {
  CheckReport report;
  Witness witness;
};

/// Coordinate-wise keep-if-worse perturbation of (x0, input levels,
/// switch offsets); the best residual is monotone nondecreasing in the
/// round count. rounds = 0 returns the witness check unchanged.
RefineResult refine(const HybridSystem& sys, const EstimateSpec& spec, const Witness& witness,
                    int rounds, double shrink, const SamplerConfig& cfg, const SimOptions& opts,
                    const CheckOptions& check_opts = {});

}  // namespace hysim
