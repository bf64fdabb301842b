#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "hysim/system.hpp"

namespace hysim {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Priority { jump_first, flow_first };
std::string to_string(Priority p);

struct SimOptions {
  double step = 1e-3;        // fixed RK4 macro-step, seconds
  double event_tol = 1e-9;   // on guard value
  double horizon_t = 10.0;   // seconds of flow
  int horizon_j = 1000;      // jump budget
  int zeno_cap = 100;        // consecutive zero-length phases before truncation
  Priority priority = Priority::jump_first;
  int record_stride = 1;     // keep every k-th accepted step (events always kept)
  double blowup_norm = 1e12;
};

/// Classic RK4 step with input held constant over the step.
Eigen::VectorXd rk4_step(const HybridSystem& sys, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double h);

enum class GuardKind { flow_exit, jump_entry };

struct LocatedEvent {
  double dt = 0.0;           // offset into the bracketing step
  Eigen::VectorXd state;     // RK4 solution at the event
  int bisections = 0;
};

class BracketLostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bisects the guard along the RK4 solution over [0, step]. flow_exit
/// expects c <= tol at 0 and c > tol at step; jump_entry expects d > tol
/// at 0 and d <= tol at step. At most 64 bisections; the returned point
/// satisfies |guard| <= event_tol (or lands on the feasible side of the
/// final bracket). Throws BracketLostError when the stated sign pattern
/// does not hold.
LocatedEvent locate_event(const HybridSystem& sys, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u, double step, GuardKind which,
                          double event_tol = 1e-9);

/// Integrates the flow while (x, u) is in C, applies jumps while in D
/// (selection per opts.priority), and terminates per the horizon, the
/// maximal-solution semantics, the Zeno cap, or the blow-up guard.
/// Throws SimulationError if (x0, u(0,0)) lies in neither C nor D, or if
/// the state turns non-finite.
SolutionPair simulate(const HybridSystem& sys, const Eigen::VectorXd& x0,
                      const InputSpec& input, const SimOptions& opts);

}  // namespace hysim
