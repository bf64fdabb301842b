#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hysim/expression.hpp"

namespace hysim {

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FnClass { PD, K, Kinf, L, Unclassified };

std::string to_string(FnClass c);

/// One-argument comparison function on [0, inf). Closed-form certificates
/// come in as expression trees; constructions (numeric inverses, majorized
/// envelopes) come in as callables with a printable form. Immutable after
/// construction, evaluation is pure.
class ScalarFn {
 public:
  ScalarFn() = default;

  static ScalarFn from_expr(std::string_view text, FnClass claimed);
  static ScalarFn from_expr(ExprPtr tree, FnClass claimed);
  static ScalarFn from_callable(std::function<double(double)> fn, std::string repr,
                                FnClass claimed);
  static ScalarFn identity();
  static ScalarFn zero();

  /// Raw evaluation; may return non-finite values.
  double operator()(double s) const { return fn_(s); }

  FnClass claimed_class() const { return claimed_; }
  const std::string& repr() const { return repr_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  std::function<double(double)> fn_;
  std::string repr_;
  FnClass claimed_ = FnClass::Unclassified;
};

/// Checked evaluation: throws DomainError if s < 0 or the value is not
/// finite.
double eval(const ScalarFn& fn, double s);

struct ClassCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // worst margin observed (sign convention per check)
};

struct ClassReport {
  FnClass checked_class = FnClass::Unclassified;
  std::vector<ClassCheck> checks;
  bool passed() const;
};

struct ValidationOptions {
  double zero_tol = 1e-12;          // |fn(0)| bound for PD/K/Kinf
  double unbounded_threshold = 1e9; // K-inf probe must exceed this
  double decay_threshold = 1e-7;    // L probe must fall below this
  double doubling_cap = 1152921504606846976.0;  // 2^60
};

/// Numeric class validation on a sample grid (ascending, grid[0] == 0
/// expected for the zero-at-zero check). Failures are report entries,
/// never exceptions.
ClassReport validate_class(const ScalarFn& fn, const std::vector<double>& grid,
                           const ValidationOptions& opts = {});

/// Default grid: 0 plus a log-spaced sweep of [1e-6, 1e3].
std::vector<double> default_validation_grid();

/// Solves fn(s) = y for a strictly increasing fn by bracket doubling from
/// [0, 1] followed by bisection, to |fn(s) - y| <= tol * max(1, y).
/// Throws RangeError if the doubling cap is reached without bracketing y
/// (class-K functions bounded below y).
double invert(const ScalarFn& fn, double y, double tol = 1e-10);

/// The inverse as a function object (numeric at evaluation).
ScalarFn inverse_fn(const ScalarFn& fn, double tol = 1e-10);

/// f after g, i.e. s -> f(g(s)). Claimed class is K (resp. Kinf) when both
/// operands are, else Unclassified.
ScalarFn compose(const ScalarFn& f, const ScalarFn& g);

enum class CombineKind { Max, Min, Sum };
ScalarFn pointwise_combine(CombineKind kind, const ScalarFn& f, const ScalarFn& g);

/// Majorizes a nondecreasing h with h(0) = 0 to a class-Kinf function:
///   hhat(s) = s + (1/s) * integral of h over [s, 2s]   (hhat(0) = 0),
/// integral by adaptive Simpson quadrature. Throws ValidationError if h
/// decreases on the sample grid beyond `tol`.
ScalarFn majorize_to_kinf(const ScalarFn& h,
                          const std::vector<double>& grid = default_validation_grid(),
                          double tol = 1e-12);

/// Class-KL bound beta(s, t): class K in s for fixed t, decreasing to 0 in
/// t for fixed s. May be extended-valued (+inf) at t = 0; consumers skip
/// such points.
class KLFn {
 public:
  KLFn() = default;
  /// Expression over variables {s, t} or {s, z}; the second name binds the
  /// decay argument.
  static KLFn from_expr(std::string_view text);
  static KLFn from_callable(std::function<double(double, double)> fn, std::string repr,
                            bool extended_valued = false);

  double operator()(double s, double t) const { return fn_(s, t); }
  const std::string& repr() const { return repr_; }
  bool extended_valued() const { return extended_valued_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  std::function<double(double, double)> fn_;
  std::string repr_;
  bool extended_valued_ = false;
};

/// Class-KLL bound beta(s, t, j): KL in (s, t) for fixed j and KL in
/// (s, j) for fixed t.
class KLLFn {
 public:
  KLLFn() = default;
  static KLLFn from_expr(std::string_view text);  // variables {s, t, j}
  static KLLFn from_callable(std::function<double(double, double, double)> fn,
                             std::string repr, bool extended_valued = false);

  double operator()(double s, double t, double j) const { return fn_(s, t, j); }
  const std::string& repr() const { return repr_; }
  bool extended_valued() const { return extended_valued_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  std::function<double(double, double, double)> fn_;
  std::string repr_;
  bool extended_valued_ = false;
};

/// beta(s, t, j) := bt(s, t + j); the equality is exact.
KLLFn kl_to_kll(const KLFn& bt);

/// btilde(s, z) := b(s, z/2, 0) + b(s, 0, z/2); dominates b in the sense
/// b(s, t, j) <= btilde(s, t + j).
KLFn kll_to_kl(const KLLFn& b);

/// Sampled validation of a KL bound: class-K slices in s, decreasing
/// slices in t. Points where the bound is +inf are skipped.
ClassReport validate_kl(const KLFn& bt, const std::vector<double>& s_grid,
                        const std::vector<double>& t_grid);
ClassReport validate_kll(const KLLFn& b, const std::vector<double>& s_grid,
                         const std::vector<double>& t_grid,
                         const std::vector<double>& j_grid);

}  // namespace hysim
