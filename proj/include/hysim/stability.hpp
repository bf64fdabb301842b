#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hysim/comparison.hpp"
#include "hysim/simulator.hpp"
#include "hysim/system.hpp"

namespace hysim {

/// Hybrid input energy up to (t, j):
///   integral of gamma(|u(s, i(s))|) ds over [0, t]
///   + sum of gamma(|u(t', j')|) over jumps with (0,0) <= (t', j') <= (t, j)
/// under the sum ordering. Exact for piecewise-constant schedules.
/// Throws HybridTimeError if `upto` is outside dom u.
double energy(const HybridInput& u, const ScalarFn& gamma, const HybridPoint& upto);

struct ResidualSample {
  double t = 0.0;
  int j = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // lhs - rhs
  int trajectory = 0;
};

struct CheckOptions {
  double check_tol = 1e-6;            // absolute, on residuals
  std::size_t max_kept_samples = 100000;  // decimation cap for the report
};

struct CheckReport {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<ResidualSample> samples;  // decimated when beyond the cap
  long n_samples = 0;                   // total residuals evaluated
  double max_residual = 0.0;
  bool violated = false;
  double check_tol = 1e-6;
  ResidualSample witness;
  long skipped_infinite = 0;  // rhs = +inf (extended-valued bounds)
  long out_of_gate = 0;       // local check gating
};

/// Scalar certificate field V(x) with an optional exact gradient;
/// finite differences otherwise.
struct StateField {
  std::function<double(const Eigen::VectorXd&)> fn;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // may be empty
  std::string repr;

  static StateField from_expr(std::string_view text, int state_dim);
  static StateField from_callable(std::function<double(const Eigen::VectorXd&)> fn,
                                  std::string repr);
  double operator()(const Eigen::VectorXd& x) const { return fn(x); }
};

/// Central finite-difference gradient, h = 1e-5 relative per coordinate.
Eigen::VectorXd fd_gradient(const StateField& V, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Estimate checks along solution pairs. All residuals use the convention
// residual = lhs - rhs, so a positive residual beyond check_tol violates
// the estimate. Samples where the bound evaluates to +inf are skipped.
// ---------------------------------------------------------------------------

/// omega(x(t,j)) <= beta(omega(x0), t, j) + chi(||u||^gamma).
CheckReport check_iiss(const SolutionPair& sol, const KLLFn& beta, const ScalarFn& chi,
                       const ScalarFn& gamma, const ProperIndicator& omega,
                       const CheckOptions& opts = {});

/// omega(x(t,j)) <= beta(omega(x0), t, j) for a batch of zero-input
/// solutions. Throws ValidationError if any input is not identically zero.
CheckReport check_0ugas(std::span<const SolutionPair> sols, const KLLFn& beta,
                        const ProperIndicator& omega, const CheckOptions& opts = {});

/// alpha(omega(x)) <= kappa(omega(x0)) + ||u||^gamma + c.
CheckReport check_ubebs(const SolutionPair& sol, const ScalarFn& alpha, const ScalarFn& kappa,
                        const ScalarFn& gamma, double c, const ProperIndicator& omega,
                        const CheckOptions& opts = {});

/// alpha1(omega(x)) <= alpha2(omega(x0)) + alpha3(||u||^gamma_hat).
CheckReport check_ubebs_alpha123(const SolutionPair& sol, const ScalarFn& alpha1,
                                 const ScalarFn& alpha2, const ScalarFn& alpha3,
                                 const ScalarFn& gamma_hat, const ProperIndicator& omega,
                                 const CheckOptions& opts = {});

struct UbebsPair {
  ScalarFn alpha;
  ScalarFn kappa;
};

/// alpha(r) = alpha3^{-1}(alpha1(r)/2), kappa = alpha3^{-1} o alpha2.
/// Any trajectory satisfying the alpha123 estimate satisfies the derived
/// UBEBS estimate with c = 0.
UbebsPair derive_ubebs_from_a(const ScalarFn& alpha1, const ScalarFn& alpha2,
                              const ScalarFn& alpha3);

/// The iISS estimate gated to omega(x0) <= l and u in L_gamma(l); samples
/// from out-of-gate solutions are excluded and counted.
CheckReport check_local_iiss(std::span<const SolutionPair> sols, const KLLFn& beta,
                             const ScalarFn& chi, const ScalarFn& gamma, double l,
                             const ProperIndicator& omega, const CheckOptions& opts = {});

/// omega(x(t,j)) <= beta(omega(x0), t, j) + chi(||u||^gamma) + p.
/// With p = 0 this is exactly check_iiss, sample for sample.
CheckReport check_practical_iiss(const SolutionPair& sol, const KLLFn& beta, const ScalarFn& chi,
                                 const ScalarFn& gamma, double p, const ProperIndicator& omega,
                                 const CheckOptions& opts = {});

struct TrajDissipationReport {
  CheckReport sandwich;      // max(a1(omega) - V, V - a2(omega)) per sample
  CheckReport accumulation;  // V(x(t,j)) - V(x0) + int rho + sum rho - ||u||^gamma_bar
  bool violated() const { return sandwich.violated || accumulation.violated; }
};

/// Non-smooth characterization along one trajectory: the sandwich
/// a1(omega) <= V <= a2(omega) and the accumulated decrease with the
/// integral by trapezoid over stored samples.
TrajDissipationReport check_traj_dissipation(const SolutionPair& sol, const StateField& V,
                                             const ScalarFn& alpha1_bar,
                                             const ScalarFn& alpha2_bar, const ScalarFn& rho,
                                             const ScalarFn& gamma_bar,
                                             const ProperIndicator& omega,
                                             const CheckOptions& opts = {});

struct GridSpec {
  Eigen::VectorXd x_lo, x_hi;
  int x_points_per_dim = 11;
  Eigen::VectorXd u_lo, u_hi;
  int u_points_per_dim = 11;
  double guard_tol = 1e-9;  // membership tolerance for C and D
};

struct PointwiseSample {
  Eigen::VectorXd x, u;
  double residual = 0.0;
  bool jump_stream = false;
};

struct PointwiseReport {
  double max_flow_residual = 0.0;
  double max_jump_residual = 0.0;
  long n_flow_points = 0;
  long n_jump_points = 0;
  bool violated = false;
  double check_tol = 1e-6;
  PointwiseSample witness;
  std::vector<PointwiseSample> worst;  // a few worst offenders per stream
  double max_residual() const { return std::max(max_flow_residual, max_jump_residual); }
};

/// Pointwise dissipation on a grid: <grad V, f> + rho(omega) - lambda(|u|)
/// on C, and V(g) - V(x) + rho(omega) - lambda(|u|) on D. Gradient by
/// central differences unless V carries an exact one.
PointwiseReport check_pointwise_dissipation(const HybridSystem& sys, const StateField& V,
                                            const ScalarFn& rho, const ScalarFn& lambda,
                                            const ProperIndicator& omega, const GridSpec& grid,
                                            const CheckOptions& opts = {});

struct V2Options {
  SimOptions sim;
  Eigen::VectorXd level_lo, level_hi;  // random input level box; empty = zero input only
  int max_switches = 4;
};

struct V2Result {
  double lower_bound = 0.0;
  int witness_trial = 0;
  HybridPoint witness_point;
  InputSpec witness_input;
};

/// Sampled lower bound on V2(x0) = sup {alpha(omega(x(t,j))) - ||u||^gamma}
/// over random inputs plus the u = 0, (t,j) = (0,0) baseline; never less
/// than alpha(omega(x0)) and nondecreasing in budget for a fixed seed.
V2Result empirical_V2(const HybridSystem& sys, const ScalarFn& alpha, const ScalarFn& gamma,
                      const Eigen::VectorXd& x0, int budget, const V2Options& opts,
                      std::uint64_t seed);

/// T*(s): 0 when bt1(s, 0) <= level, otherwise the solution of
/// bt1(s, T*) = level on the nonincreasing t-slice (bracket + bisection).
double t_star(const KLFn& bt1, double s, double level, double tol = 1e-10);

/// The 3) => 2) construction: from a practical KL bound bt1 (offset p) and
/// a local KL bound bt2 (gate l), with l > p, builds
///   btilde(s,t) = (bt2(l,0)/l) (bt1(s,t) + p) + 1/t       for t <  T*(s)
///   btilde(s,t) = bt2(l, max{t - T*(s) - 1, 0}) + 1/t     for t >= T*(s),
/// continuous at t = T*(s) and extended-valued at t = 0.
/// Throws ValidationError when l <= p (the counterexample regime).
KLFn construct_0ugas_beta(const KLFn& bt1, double p, const KLFn& bt2, double l);

struct PracticalCert {
  KLFn beta;
  ScalarFn chi;
  ScalarFn gamma;
  double p = 1.0;
};

/// Closed-form practical-iISS certificate for bad_example() with respect
/// to the origin: gamma(s) = s^2 + 2s, chi = identity, p = 1 and
/// beta(s,t) = btilde(max{s-1,0}, t) + s/t with btilde(s,t) = s/(1+st)
/// obtained from the comparison principle for the interval dynamics.
PracticalCert bad_example_practical_cert();

struct LocalCert {
  KLFn beta;
  ScalarFn chi;
  ScalarFn gamma;
  double l = 0.5;
};

/// Closed-form l-local iISS certificate for bad_example(), 0 < l < 1:
/// gamma(r) = 4 l^2 r / (1 - l^2), r* = sqrt((l^2+1)/2),
/// beta(s,t) = sqrt(2) e^{-(1-r*)^2 t} s, chi(s) = sqrt(1-l^2)/l sqrt(s).
LocalCert bad_example_local_cert(double l);

// ---------------------------------------------------------------------------
// Estimate specifications (scenario-facing) and generic dispatch.
// ---------------------------------------------------------------------------

enum class EstimateKind {
  iISS,
  zero_UGAS,
  UBEBS,
  UBEBS_alpha123,
  UBEBS_c0,
  local_iISS,
  practical_iISS,
  traj_dissipation,
  pointwise_dissipation,
};

std::string to_string(EstimateKind k);

struct EstimateSpec {
  EstimateKind kind = EstimateKind::iISS;
  KLLFn beta;
  ScalarFn chi, gamma;
  ScalarFn alpha, kappa;
  double c = 0.0;
  ScalarFn alpha1, alpha2, alpha3;
  double l = 0.0;
  double p = 0.0;
  StateField V;
  ScalarFn rho, lambda, alpha1_bar, alpha2_bar, gamma_bar;
  GridSpec grid;

  /// Class-validates every required parameter for its declared class.
  /// Throws ValidationError naming the offending parameter.
  void validate() const;
  std::vector<std::pair<std::string, std::string>> parameter_reprs() const;
};

/// Runs the spec's check over a batch (pointwise kinds ignore the batch
/// and use the grid). Batch kinds (0-UGAS, local) consume all solutions;
/// per-trajectory kinds merge reports over the batch deterministically.
CheckReport run_check(const EstimateSpec& spec, const HybridSystem& sys,
                      std::span<const SolutionPair> sols, const ProperIndicator& omega,
                      const CheckOptions& opts = {});

}  // namespace hysim
