#include "hysim/comparison.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace hysim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(FnClass c) {
  switch (c) {
    case FnClass::PD:
      return "PD";
    case FnClass::K:
      return "K";
    case FnClass::Kinf:
      return "Kinf";
    case FnClass::L:
      return "L";
    case FnClass::Unclassified:
      return "Unclassified";
  }
  return "Unclassified";
}

ScalarFn ScalarFn::from_expr(std::string_view text, FnClass claimed) {
  return from_expr(parse_expression(text), claimed);
}

ScalarFn ScalarFn::from_expr(ExprPtr tree, FnClass claimed) {
  for (const auto& v : variables_of(*tree))
    if (v != "s")
      throw std::invalid_argument("scalar comparison function may only use variable 's', got '" +
                                  v + "'");
  static const std::array<std::string, 1> vars = {"s"};
  CompiledExpr ce = CompiledExpr::compile(tree, vars);
  ScalarFn fn;
  fn.repr_ = ce.text();
  fn.fn_ = [ce = std::move(ce)](double s) {
    const double v[1] = {s};
    return ce.eval(v);
  };
  fn.claimed_ = claimed;
  return fn;
}

ScalarFn ScalarFn::from_callable(std::function<double(double)> fn, std::string repr,
                                 FnClass claimed) {
  ScalarFn out;
  out.fn_ = std::move(fn);
  out.repr_ = std::move(repr);
  out.claimed_ = claimed;
  return out;
}

ScalarFn ScalarFn::identity() {
  return from_callable([](double s) { return s; }, "s", FnClass::Kinf);
}

ScalarFn ScalarFn::zero() {
  return from_callable([](double) { return 0.0; }, "0", FnClass::Unclassified);
}

double eval(const ScalarFn& fn, double s) {
  if (s < 0.0) throw DomainError("comparison function evaluated at negative argument");
  const double v = fn(s);
  if (!std::isfinite(v))
    throw DomainError("expression undefined at s = " + std::to_string(s) + " for '" +
                      fn.repr() + "'");
  return v;
}

bool ClassReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ClassCheck& c) { return c.pass; });
}

std::vector<double> default_validation_grid() {
  std::vector<double> g{0.0};
  const double lo = 1e-6, hi = 1e3;
  const int n = 60;
  for (int i = 0; i <= n; ++i) g.push_back(lo * std::pow(hi / lo, double(i) / n));
  return g;
}

ClassReport validate_class(const ScalarFn& fn, const std::vector<double>& grid,
                           const ValidationOptions& opts) {
  ClassReport rep;
  rep.checked_class = fn.claimed_class();
  const FnClass c = fn.claimed_class();
  if (c == FnClass::Unclassified) return rep;

  auto finite_at = [&](double s) {
    const double v = fn(s);
    return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
  };

  if (c == FnClass::PD || c == FnClass::K || c == FnClass::Kinf) {
    const double v0 = finite_at(0.0);
    rep.checks.push_back({"zero_at_zero", std::fabs(v0) <= opts.zero_tol, std::fabs(v0)});
    double worst = kInf;
    for (double s : grid)
      if (s > 0.0) worst = std::min(worst, finite_at(s));
    rep.checks.push_back({"positive_for_positive", worst > 0.0, worst});
  }
  if (c == FnClass::K || c == FnClass::Kinf) {
    double worst = kInf;
    for (std::size_t i = 1; i < grid.size(); ++i)
      worst = std::min(worst, finite_at(grid[i]) - finite_at(grid[i - 1]));
    rep.checks.push_back({"strictly_increasing", worst > 0.0, worst});
  }
  if (c == FnClass::Kinf) {
    double s = std::max(1.0, grid.empty() ? 1.0 : grid.back());
    double v = finite_at(s);
    while (!(v > opts.unbounded_threshold) && s < opts.doubling_cap) {
      s *= 2.0;
      v = finite_at(s);
    }
    rep.checks.push_back({"unbounded_probe", v > opts.unbounded_threshold, v});
  }
  if (c == FnClass::L) {
    double worst = -kInf;
    for (std::size_t i = 1; i < grid.size(); ++i)
      worst = std::max(worst, finite_at(grid[i]) - finite_at(grid[i - 1]));
    rep.checks.push_back({"nonincreasing", worst <= 0.0, worst});
    double s = std::max(1.0, grid.empty() ? 1.0 : grid.back());
    double v = finite_at(s);
    while (!(v < opts.decay_threshold) && s < opts.doubling_cap) {
      s *= 2.0;
      v = finite_at(s);
    }
    rep.checks.push_back({"decays_to_zero", v < opts.decay_threshold, v});
  }
  return rep;
}

double invert(const ScalarFn& fn, double y, double tol) {
  if (y < 0.0) throw DomainError("invert: target below fn(0) = 0");
  if (y == 0.0) return 0.0;
  const double target_tol = tol * std::max(1.0, y);
  // Bracket by doubling from [0, 1].
  double lo = 0.0, hi = 1.0;
  const double cap = 1.8446744073709552e19;  // 2^64
  while (fn(hi) < y) {
    if (hi >= cap)
      throw RangeError("invert: value " + std::to_string(y) + " not reached by '" + fn.repr() +
                       "' below doubling cap (function may be bounded)");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = fn(mid);
    if (std::fabs(v - y) <= target_tol) return mid;
    if (v < y)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= tol * std::max(1.0, std::fabs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

ScalarFn inverse_fn(const ScalarFn& fn, double tol) {
  FnClass cls = fn.claimed_class() == FnClass::Kinf ? FnClass::Kinf
                : fn.claimed_class() == FnClass::K  ? FnClass::K
                                                    : FnClass::Unclassified;
  return ScalarFn::from_callable([fn, tol](double y) { return invert(fn, y, tol); },
                                 "inverse(" + fn.repr() + ")", cls);
}

ScalarFn compose(const ScalarFn& f, const ScalarFn& g) {
  FnClass cls = FnClass::Unclassified;
  if (f.claimed_class() == FnClass::Kinf && g.claimed_class() == FnClass::Kinf)
    cls = FnClass::Kinf;
  else if ((f.claimed_class() == FnClass::K || f.claimed_class() == FnClass::Kinf) &&
           (g.claimed_class() == FnClass::K || g.claimed_class() == FnClass::Kinf))
    cls = FnClass::K;
  return ScalarFn::from_callable([f, g](double s) { return f(g(s)); },
                                 "(" + f.repr() + ") o (" + g.repr() + ")", cls);
}

ScalarFn pointwise_combine(CombineKind kind, const ScalarFn& f, const ScalarFn& g) {
  auto both = [&](FnClass c) { return f.claimed_class() == c && g.claimed_class() == c; };
  FnClass cls = FnClass::Unclassified;
  if (both(FnClass::Kinf))
    cls = FnClass::Kinf;
  else if ((f.claimed_class() == FnClass::K || f.claimed_class() == FnClass::Kinf) &&
           (g.claimed_class() == FnClass::K || g.claimed_class() == FnClass::Kinf))
    cls = FnClass::K;
  switch (kind) {
    case CombineKind::Max:
      return ScalarFn::from_callable([f, g](double s) { return std::fmax(f(s), g(s)); },
                                     "max(" + f.repr() + ", " + g.repr() + ")", cls);
    case CombineKind::Min:
      return ScalarFn::from_callable([f, g](double s) { return std::fmin(f(s), g(s)); },
                                     "min(" + f.repr() + ", " + g.repr() + ")", cls);
    case CombineKind::Sum:
      return ScalarFn::from_callable([f, g](double s) { return f(s) + g(s); },
                                     "(" + f.repr() + ") + (" + g.repr() + ")", cls);
  }
  return ScalarFn();
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

ScalarFn majorize_to_kinf(const ScalarFn& h, const std::vector<double>& grid, double tol) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (h(grid[i]) - h(grid[i - 1]) < -tol)
      throw ValidationError("majorize_to_kinf: input decreases on the sample grid near s = " +
                            std::to_string(grid[i]));
  }
  if (std::fabs(h(0.0)) > 1e-12)
    throw ValidationError("majorize_to_kinf: input must vanish at 0");
  auto hf = [h](double s) { return h(s); };
  auto fn = [hf](double s) {
    if (s == 0.0) return 0.0;
    const double integral = integrate(hf, s, 2.0 * s, 1e-12 * std::max(1.0, s));
    return s + integral / s;
  };
  return ScalarFn::from_callable(fn, "majorize(" + h.repr() + ")", FnClass::Kinf);
}

KLFn KLFn::from_expr(std::string_view text) {
  ExprPtr tree = parse_expression(text);
  bool uses_t = false, uses_z = false;
  for (const auto& v : variables_of(*tree)) {
    if (v == "s") continue;
    if (v == "t") {
      uses_t = true;
      continue;
    }
    if (v == "z") {
      uses_z = true;
      continue;
    }
    throw std::invalid_argument("KL expression may only use variables s and t (or z), got '" +
                                v + "'");
  }
  if (uses_t && uses_z)
    throw std::invalid_argument("KL expression must use either t or z, not both");
  const std::array<std::string, 2> vars = {"s", uses_z ? "z" : "t"};
  CompiledExpr ce = CompiledExpr::compile(tree, vars);
  KLFn out;
  out.repr_ = ce.text();
  out.fn_ = [ce = std::move(ce)](double s, double t) {
    const double v[2] = {s, t};
    return ce.eval(v);
  };
  return out;
}

KLFn KLFn::from_callable(std::function<double(double, double)> fn, std::string repr,
                         bool extended_valued) {
  KLFn out;
  out.fn_ = std::move(fn);
  out.repr_ = std::move(repr);
  out.extended_valued_ = extended_valued;
  return out;
}

KLLFn KLLFn::from_expr(std::string_view text) {
  ExprPtr tree = parse_expression(text);
  for (const auto& v : variables_of(*tree))
    if (v != "s" && v != "t" && v != "j")
      throw std::invalid_argument("KLL expression may only use variables s, t, j; got '" + v +
                                  "'");
  static const std::array<std::string, 3> vars = {"s", "t", "j"};
  CompiledExpr ce = CompiledExpr::compile(tree, vars);
  KLLFn out;
  out.repr_ = ce.text();
  out.fn_ = [ce = std::move(ce)](double s, double t, double j) {
    const double v[3] = {s, t, j};
    return ce.eval(v);
  };
  return out;
}

KLLFn KLLFn::from_callable(std::function<double(double, double, double)> fn, std::string repr,
                           bool extended_valued) {
  KLLFn out;
  out.fn_ = std::move(fn);
  out.repr_ = std::move(repr);
  out.extended_valued_ = extended_valued;
  return out;
}

KLLFn kl_to_kll(const KLFn& bt) {
  return KLLFn::from_callable([bt](double s, double t, double j) { return bt(s, t + j); },
                              "(" + bt.repr() + ") at t+j", bt.extended_valued());
}

KLFn kll_to_kl(const KLLFn& b) {
  return KLFn::from_callable(
      [b](double s, double z) { return b(s, 0.5 * z, 0.0) + b(s, 0.0, 0.5 * z); },
      "(" + b.repr() + ") at (z/2,0) + (0,z/2)", b.extended_valued());
}

namespace {

void slice_checks(ClassReport& rep, const std::string& prefix,
                  const std::function<double(double, double)>& f,
                  const std::vector<double>& s_grid, const std::vector<double>& t_grid) {
  // Class-K behavior in s at each fixed t; nonincreasing in t at each fixed s.
  double worst_inc = kInf, worst_zero = 0.0, worst_dec = -kInf;
  for (double t : t_grid) {
    double prev = f(s_grid.front(), t);
    if (std::isfinite(prev) && s_grid.front() == 0.0)
      worst_zero = std::max(worst_zero, std::fabs(prev));
    for (std::size_t i = 1; i < s_grid.size(); ++i) {
      const double v = f(s_grid[i], t);
      if (std::isfinite(v) && std::isfinite(prev)) worst_inc = std::min(worst_inc, v - prev);
      prev = v;
    }
  }
  for (double s : s_grid) {
    double prev = f(s, t_grid.front());
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
      const double v = f(s, t_grid[i]);
      if (std::isfinite(v) && std::isfinite(prev)) worst_dec = std::max(worst_dec, v - prev);
      prev = v;
    }
  }
  rep.checks.push_back({prefix + "zero_at_zero", worst_zero <= 1e-12, worst_zero});
  rep.checks.push_back({prefix + "increasing_in_s", worst_inc > 0.0, worst_inc});
  rep.checks.push_back({prefix + "nonincreasing_in_decay_arg", worst_dec <= 1e-12, worst_dec});
}

}  // namespace

ClassReport validate_kl(const KLFn& bt, const std::vector<double>& s_grid,
                        const std::vector<double>& t_grid) {
  ClassReport rep;
  std::vector<double> tg = t_grid;
  if (bt.extended_valued())  // envelope defined for t > 0 only
    std::erase_if(tg, [](double t) { return t <= 0.0; });
  slice_checks(rep, "kl_", [&bt](double s, double t) { return bt(s, t); }, s_grid, tg);
  return rep;
}

ClassReport validate_kll(const KLLFn& b, const std::vector<double>& s_grid,
                         const std::vector<double>& t_grid, const std::vector<double>& j_grid) {
  ClassReport rep;
  for (double j : j_grid) {
    std::vector<double> tg = t_grid;
    if (b.extended_valued() && j <= 0.0)
      std::erase_if(tg, [](double t) { return t <= 0.0; });
    slice_checks(rep, "kll_j" + std::to_string(j) + "_",
                 [&b, j](double s, double t) { return b(s, t, j); }, s_grid, tg);
  }
  for (double t : t_grid) {
    std::vector<double> jg = j_grid;
    if (b.extended_valued() && t <= 0.0)
      std::erase_if(jg, [](double j) { return j <= 0.0; });
    slice_checks(rep, "kll_t" + std::to_string(t) + "_",
                 [&b, t](double s, double j) { return b(s, t, j); }, s_grid, jg);
  }
  return rep;
}

}  // namespace hysim
