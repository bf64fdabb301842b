#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hysim/falsifier.hpp"
#include "hysim/stability.hpp"

namespace hysim {

/// One candidate of the 0-UGAS falsification grid beta = C s e^{-lambda t}.
struct UgasGridEntry {
  double C = 0.0;
  double lambda = 0.0;
  bool violated = false;
  double max_residual = 0.0;
  ResidualSample witness;
};

struct BadExampleDemoResult {
  // Unforced run from x0 = 2 over T = 100.
  double x_at_100 = 0.0;
  bool x100_in_bounds = false;  // comparison-principle interval
  SolutionPair unforced_sol;

  // 0-UGAS candidate grid over a shared zero-input trajectory batch.
  std::vector<UgasGridEntry> ugas_grid;
  int ugas_violated = 0;
  double ugas_min_max_residual = 0.0;  // min over candidates of max residual
  double elapsed_ugas_s = 0.0;

  // Pointwise dissipation of the certificate chain on a grid.
  PointwiseReport pointwise;
  double elapsed_pointwise_s = 0.0;

  // Practical iISS certificate under random trajectories.
  FalsificationReport practical;
  double elapsed_practical_s = 0.0;

  // Local iISS certificate under in-gate trajectories.
  CheckReport local;
  double local_max_abs_x = 0.0;  // max |x(t)| over the in-gate batch
  double r_star = 0.0;           // sqrt((l^2+1)/2)
  double elapsed_local_s = 0.0;

  bool all_expected() const {
    return x100_in_bounds && ugas_violated == static_cast<int>(ugas_grid.size()) &&
           !pointwise.violated && !practical.violation_found && !local.violated;
  }
};

struct BadExampleDemoOptions {
  std::uint64_t seed = 0;
  int ugas_batch = 10;          // zero-input trajectories shared by the grid
  double ugas_horizon = 500.0;
  int practical_trials = 200;
  double practical_horizon = 20.0;
  int local_trials = 200;
  double local_horizon = 10.0;
  double local_l = 0.5;
  double cert_tol = 1e-4;  // residual tolerance for certificate checks
  int threads = 0;
};

/// Reproduces the counterexample study end to end: not 0-UGAS (every grid
/// candidate falsified), yet practically iISS (p = 1) and locally iISS
/// (l = 0.5), plus the pointwise dissipation grid check.
BadExampleDemoResult run_bad_example_demo(const BadExampleDemoOptions& opts);

struct JumpDemoResult {
  SolutionPair sol;
  std::vector<double> jump_flow_times;  // t of each jump instant
};

/// decay_jump_demo() from x0 = 1 with a 3-jump budget; inter-jump flow
/// time is ln 2.
JumpDemoResult run_jump_demo();

/// Random input scaled so its total gamma-energy over [0, horizon] hits a
/// target (bisection on the level scale; exact for linear gamma).
InputSpec sample_input_with_energy(std::uint64_t seed, int input_dim, const ScalarFn& gamma,
                                   double horizon, double energy_target);

}  // namespace hysim
