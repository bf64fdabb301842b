#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hysim/hybrid_time.hpp"

namespace hysim {

class SystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euclidean distance to a compact target set A (point, interval or box).
/// omega(x) = 0 iff x in A, and omega grows unboundedly, so it is a proper
/// indicator for A on R^n.
class ProperIndicator {
 public:
  ProperIndicator() = default;

  static ProperIndicator point(const Eigen::VectorXd& at);
  static ProperIndicator box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static ProperIndicator interval(double lo, double hi);  // 1-D box

  double operator()(const Eigen::VectorXd& x) const;
  /// B(A, r) membership: omega(x) <= r.
  bool in_ball(const Eigen::VectorXd& x, double r) const { return (*this)(x) <= r; }

  int dim() const { return static_cast<int>(lo_.size()); }
  const std::string& repr() const { return repr_; }

 private:
  Eigen::VectorXd lo_, hi_;  // point: lo == hi
  std::string repr_;
};

inline double omega(const ProperIndicator& ind, const Eigen::VectorXd& x) { return ind(x); }

/// Textual system description (the scenario's system block).
struct SystemSpec {
  int n = 0;
  int m = 0;
  std::vector<std::string> flow;   // n expressions over x1..xn, u1..um
  std::vector<std::string> jump;   // n expressions; empty means identity
  std::string flow_guard = "-1";   // c(x,u); C = {c <= 0}
  std::string jump_guard = "1";    // d(x,u); D = {d <= 0}
};

/// H(C, D, f, g) with single-valued flow/jump selections and sets encoded
/// as sublevel sets of continuous guards (so events can be bisected).
/// Immutable after construction; safe to share across threads.
class HybridSystem {
 public:
  using ScalarField = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
  using VectorField =
      std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd&)>;

  HybridSystem() = default;
  HybridSystem(int n, int m, ScalarField flow_guard, ScalarField jump_guard, VectorField flow,
               VectorField jump, ProperIndicator indicator, SystemSpec spec = {});

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }

  double flow_guard(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  double jump_guard(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  bool in_C(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double tol = 0.0) const {
    return flow_guard(x, u) <= tol;
  }
  bool in_D(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double tol = 0.0) const {
    return jump_guard(x, u) <= tol;
  }

  void eval_flow(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  void eval_jump(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  Eigen::VectorXd eval_flow(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::VectorXd eval_jump(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  const ProperIndicator& indicator() const { return indicator_; }
  const SystemSpec& spec() const { return spec_; }

 private:
  void check_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  int n_ = 0, m_ = 0;
  ScalarField flow_guard_, jump_guard_;
  VectorField flow_, jump_;
  ProperIndicator indicator_;
  SystemSpec spec_;
};

/// Builds a system from expression text; throws SystemError (with the
/// offending field) on dimension mismatches or parse failures.
HybridSystem make_system(const SystemSpec& spec, ProperIndicator indicator);

/// Continuity probe for the guards: samples a box and flags guard jumps
/// far beyond the local Lipschitz trend. Returns the largest observed
/// difference ratio.
double probe_guard_continuity(const HybridSystem& sys, const Eigen::VectorXd& x_lo,
                              const Eigen::VectorXd& x_hi, const Eigen::VectorXd& u_lo,
                              const Eigen::VectorXd& u_hi, int samples_per_dim = 32);

/// The one-dimensional pure-flow counterexample
///   xdot = -x (x - 1)^2 + u,   C = R x R,  D = empty,
/// with indicator A = {0}. Not 0-UGAS (x = 1 is an unstable equilibrium
/// separating the basins), yet locally and practically iISS.
HybridSystem bad_example();

/// Jump exerciser: flow xdot = x on {x <= 1}, jump x+ = x/2 on {x >= 1},
/// indicator A = {0}. From x0 = 1 the inter-jump flow time is ln 2.
HybridSystem decay_jump_demo();

enum class Termination { horizon_reached, left_C_and_D, zeno_suspected, flow_blowup };
std::string to_string(Termination t);

struct SimStats {
  long steps = 0;
  int events_located = 0;
  double max_guard_residual = 0.0;
  std::string priority;  // selection rule used for this run
};

/// A simulated (x, u) pair on one shared domain, with the cause of
/// termination.
struct SolutionPair {
  HybridArc arc;
  HybridInput input;
  Termination termination = Termination::horizon_reached;
  SimStats stats;
};

}  // namespace hysim
