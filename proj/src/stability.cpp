#include "hysim/stability.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "hysim/random.hpp"

namespace hysim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_exact(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double norm_of(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.norm(); }

/// Integral of gamma(|u|) over [phase interval] intersect [0, upto_abs].
double phase_flow_energy(const HybridInput& u, const ScalarFn& gamma, int j, double upto_abs) {
  const auto& ph = u.domain().phase(j);
  const double lo = ph.t_start;
  const double hi = std::min(ph.t_end, upto_abs);
  if (hi <= lo) return 0.0;
  const auto& sched = u.schedule(j);
  double E = 0.0;
  double seg_start = 0.0;  // offsets from phase start
  const double span = hi - lo;
  for (std::size_t k = 0; k <= sched.switch_offsets.size(); ++k) {
    const double seg_end =
        k < sched.switch_offsets.size() ? std::min(sched.switch_offsets[k], span) : span;
    if (seg_end > seg_start) E += gamma(norm_of(sched.levels[k])) * (seg_end - seg_start);
    seg_start = seg_end;
    if (seg_start >= span) break;
  }
  return E;
}

struct JumpTerm {
  double order_sum;  // t' + j'
  double t;
  int j;
  double gamma_value;  // gamma(|u(t', j')|)
};

std::vector<JumpTerm> jump_terms(const HybridInput& u, const ScalarFn& gamma) {
  std::vector<JumpTerm> terms;
  for (const auto& p : jump_times(u.domain())) {
    JumpTerm jt;
    jt.order_sum = p.t + p.j;
    jt.t = p.t;
    jt.j = p.j;
    jt.gamma_value = gamma(norm_of(u.value_at_jump(p.j)));
    terms.push_back(jt);
  }
  return terms;
}

}  // namespace

double energy(const HybridInput& u, const ScalarFn& gamma, const HybridPoint& upto) {
  if (!u.domain().contains(upto))
    throw HybridTimeError("energy: point (t=" + std::to_string(upto.t) +
                          ", j=" + std::to_string(upto.j) + ") outside dom u");
  double E = 0.0;
  for (int j = 0; j < u.domain().num_phases(); ++j) E += phase_flow_energy(u, gamma, j, upto.t);
  const double order = upto.t + upto.j;
  for (const auto& jt : jump_terms(u, gamma))
    if (jt.order_sum <= order) E += jt.gamma_value;
  return E;
}

StateField StateField::from_expr(std::string_view text, int state_dim) {
  std::vector<std::string> vars;
  for (int i = 1; i <= state_dim; ++i) vars.push_back("x" + std::to_string(i));
  CompiledExpr ce = CompiledExpr::compile(parse_expression(text), vars);
  StateField f;
  f.repr = ce.text();
  f.fn = [ce = std::move(ce)](const Eigen::VectorXd& x) {
    return ce.eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  };
  return f;
}

StateField StateField::from_callable(std::function<double(const Eigen::VectorXd&)> fn,
                                     std::string repr) {
  StateField f;
  f.fn = std::move(fn);
  f.repr = std::move(repr);
  return f;
}

Eigen::VectorXd fd_gradient(const StateField& V, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const double vp = V(xp), vm = V(xm);
    if (!std::isfinite(vp) || !std::isfinite(vm))
      throw DomainError("gradient failure: V non-finite near grid point");
    g[i] = (vp - vm) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

namespace {

/// Accumulates residual samples with deterministic decimation (stride
/// doubling once the cap is hit) and exact witness tracking.
struct ReportBuilder {
  CheckReport rep;
  std::size_t cap;
  std::uint64_t stride = 1;
  std::uint64_t counter = 0;
  bool have_any = false;

  explicit ReportBuilder(std::string kind, const CheckOptions& opts) : cap(opts.max_kept_samples) {
    rep.kind = std::move(kind);
    rep.check_tol = opts.check_tol;
    rep.max_residual = -kInf;
  }

  void add(double t, int j, double lhs, double rhs, int traj) {
    if (!std::isfinite(rhs)) {
      ++rep.skipped_infinite;
      return;
    }
    ResidualSample s{t, j, lhs, rhs, lhs - rhs, traj};
    ++rep.n_samples;
    if (!have_any || s.residual > rep.max_residual) {
      rep.max_residual = s.residual;
      rep.witness = s;
      have_any = true;
    }
    if (counter++ % stride == 0) {
      rep.samples.push_back(s);
      if (rep.samples.size() > cap && cap > 0) {
        std::vector<ResidualSample> kept;
        kept.reserve(rep.samples.size() / 2 + 1);
        for (std::size_t i = 0; i < rep.samples.size(); i += 2) kept.push_back(rep.samples[i]);
        rep.samples = std::move(kept);
        stride *= 2;
      }
    }
  }

  CheckReport finish() {
    if (!have_any) rep.max_residual = 0.0;  // vacuous: zero evaluated samples
    rep.violated = have_any && rep.max_residual > rep.check_tol;
    return std::move(rep);
  }
};

/// Walks every stored sample of a solution in order, carrying the running
/// gamma-energy. Calls fn(t, j, x, E).
template <typename F>
void walk_samples(const SolutionPair& sol, const ScalarFn& gamma, F&& fn) {
  const auto terms = jump_terms(sol.input, gamma);
  std::size_t jumps_counted = 0;
  double jump_sum = 0.0;
  double flow_base = 0.0;  // integral over completed phases
  for (int j = 0; j < sol.arc.domain().num_phases(); ++j) {
    const auto& ph = sol.arc.domain().phase(j);
    double prev_t = ph.t_start;
    double phase_acc = 0.0;
    for (int k = 0; k < sol.arc.num_samples(j); ++k) {
      const double t = sol.arc.sample_time(j, k);
      if (t > prev_t) {
        phase_acc = phase_flow_energy(sol.input, gamma, j, t);
        prev_t = t;
      }
      const double order = t + j;
      while (jumps_counted < terms.size() && terms[jumps_counted].order_sum <= order) {
        jump_sum += terms[jumps_counted].gamma_value;
        ++jumps_counted;
      }
      fn(t, j, sol.arc.sample_state(j, k), flow_base + phase_acc + jump_sum);
    }
    flow_base += phase_flow_energy(sol.input, gamma, j, ph.t_end);
  }
}

double omega_at_start(const SolutionPair& sol, const ProperIndicator& om) {
  return om(sol.arc.sample_state(0, 0));
}

void practical_iiss_into(ReportBuilder& rb, const SolutionPair& sol, const KLLFn& beta,
                         const ScalarFn& chi, const ScalarFn& gamma, double p,
                         const ProperIndicator& om, int traj) {
  const double w0 = omega_at_start(sol, om);
  walk_samples(sol, gamma, [&](double t, int j, const Eigen::VectorXd& x, double E) {
    const double rhs = beta(w0, t, j) + chi(E) + p;
    rb.add(t, j, om(x), rhs, traj);
  });
}

}  // namespace

CheckReport check_practical_iiss(const SolutionPair& sol, const KLLFn& beta, const ScalarFn& chi,
                                 const ScalarFn& gamma, double p, const ProperIndicator& omega,
                                 const CheckOptions& opts) {
  if (p < 0.0) throw ValidationError("practical iISS requires p >= 0");
  ReportBuilder rb("practical_iISS", opts);
  rb.rep.parameters = {{"beta", beta.repr()}, {"chi", chi.repr()}, {"gamma", gamma.repr()},
                       {"p", std::to_string(p)}};
  practical_iiss_into(rb, sol, beta, chi, gamma, p, omega, 0);
  return rb.finish();
}

CheckReport check_iiss(const SolutionPair& sol, const KLLFn& beta, const ScalarFn& chi,
                       const ScalarFn& gamma, const ProperIndicator& omega,
                       const CheckOptions& opts) {
  ReportBuilder rb("iISS", opts);
  rb.rep.parameters = {{"beta", beta.repr()}, {"chi", chi.repr()}, {"gamma", gamma.repr()}};
  practical_iiss_into(rb, sol, beta, chi, gamma, 0.0, omega, 0);
  return rb.finish();
}

CheckReport check_0ugas(std::span<const SolutionPair> sols, const KLLFn& beta,
                        const ProperIndicator& omega, const CheckOptions& opts) {
  ReportBuilder rb("zero_UGAS", opts);
  rb.rep.parameters = {{"beta", beta.repr()}};
  const ScalarFn zero = ScalarFn::zero();
  int traj = 0;
  for (const auto& sol : sols) {
    if (!sol.input.identically_zero())
      throw ValidationError("check_0ugas: input of trajectory " + std::to_string(traj) +
                            " is not identically zero");
    const double w0 = omega_at_start(sol, omega);
    walk_samples(sol, zero, [&](double t, int j, const Eigen::VectorXd& x, double) {
      rb.add(t, j, omega(x), beta(w0, t, j), traj);
    });
    ++traj;
  }
  return rb.finish();
}

CheckReport check_ubebs(const SolutionPair& sol, const ScalarFn& alpha, const ScalarFn& kappa,
                        const ScalarFn& gamma, double c, const ProperIndicator& omega,
                        const CheckOptions& opts) {
  if (c < 0.0) throw ValidationError("UBEBS requires c >= 0");
  ReportBuilder rb(c == 0.0 ? "UBEBS_c0" : "UBEBS", opts);
  rb.rep.parameters = {{"alpha", alpha.repr()}, {"kappa", kappa.repr()},
                       {"gamma", gamma.repr()}, {"c", std::to_string(c)}};
  const double w0 = omega_at_start(sol, omega);
  walk_samples(sol, gamma, [&](double t, int j, const Eigen::VectorXd& x, double E) {
    rb.add(t, j, alpha(omega(x)), kappa(w0) + E + c, 0);
  });
  return rb.finish();
}

CheckReport check_ubebs_alpha123(const SolutionPair& sol, const ScalarFn& alpha1,
                                 const ScalarFn& alpha2, const ScalarFn& alpha3,
                                 const ScalarFn& gamma_hat, const ProperIndicator& omega,
                                 const CheckOptions& opts) {
  ReportBuilder rb("UBEBS_alpha123", opts);
  rb.rep.parameters = {{"alpha1", alpha1.repr()}, {"alpha2", alpha2.repr()},
                       {"alpha3", alpha3.repr()}, {"gamma_hat", gamma_hat.repr()}};
  const double w0 = omega_at_start(sol, omega);
  walk_samples(sol, gamma_hat, [&](double t, int j, const Eigen::VectorXd& x, double E) {
    rb.add(t, j, alpha1(omega(x)), alpha2(w0) + alpha3(E), 0);
  });
  return rb.finish();
}

UbebsPair derive_ubebs_from_a(const ScalarFn& alpha1, const ScalarFn& alpha2,
                              const ScalarFn& alpha3) {
  for (const auto* a : {&alpha1, &alpha2, &alpha3}) {
    if (a->claimed_class() != FnClass::Kinf)
      throw ValidationError("derive_ubebs_from_a: all three functions must be class Kinf");
    const auto rep = validate_class(*a, default_validation_grid());
    if (!rep.passed())
      throw ValidationError("derive_ubebs_from_a: class validation failed for '" + a->repr() +
                            "'");
  }
  UbebsPair out;
  out.alpha = ScalarFn::from_callable(
      [alpha1, alpha3](double r) { return invert(alpha3, 0.5 * alpha1(r)); },
      "inverse(" + alpha3.repr() + ")(0.5*(" + alpha1.repr() + "))", FnClass::Kinf);
  out.kappa = compose(inverse_fn(alpha3), alpha2);
  return out;
}

CheckReport check_local_iiss(std::span<const SolutionPair> sols, const KLLFn& beta,
                             const ScalarFn& chi, const ScalarFn& gamma, double l,
                             const ProperIndicator& omega, const CheckOptions& opts) {
  if (!(l > 0.0)) throw ValidationError("local iISS requires l > 0");
  ReportBuilder rb("local_iISS", opts);
  rb.rep.parameters = {{"beta", beta.repr()}, {"chi", chi.repr()}, {"gamma", gamma.repr()},
                       {"l", std::to_string(l)}};
  int traj = 0;
  for (const auto& sol : sols) {
    long count = 0;
    for (int j = 0; j < sol.arc.domain().num_phases(); ++j) count += sol.arc.num_samples(j);
    const double w0 = omega_at_start(sol, omega);
    const double total_energy = energy(sol.input, gamma, sol.arc.domain().terminal());
    if (w0 > l || total_energy > l) {
      rb.rep.out_of_gate += count;
      ++traj;
      continue;
    }
    practical_iiss_into(rb, sol, beta, chi, gamma, 0.0, omega, traj);
    ++traj;
  }
  return rb.finish();
}

TrajDissipationReport check_traj_dissipation(const SolutionPair& sol, const StateField& V,
                                             const ScalarFn& alpha1_bar,
                                             const ScalarFn& alpha2_bar, const ScalarFn& rho,
                                             const ScalarFn& gamma_bar,
                                             const ProperIndicator& omega,
                                             const CheckOptions& opts) {
  ReportBuilder sandwich("traj_dissipation_sandwich", opts);
  ReportBuilder accum("traj_dissipation_accumulation", opts);
  const auto params = std::vector<std::pair<std::string, std::string>>{
      {"V", V.repr},           {"alpha1_bar", alpha1_bar.repr()},
      {"alpha2_bar", alpha2_bar.repr()}, {"rho", rho.repr()},
      {"gamma_bar", gamma_bar.repr()}};
  sandwich.rep.parameters = params;
  accum.rep.parameters = params;

  const double V0 = V(sol.arc.sample_state(0, 0));

  // rho terms at jump points, ordered by t' + j' (same rule as the energy
  // jump sum).
  struct RhoJump {
    double order_sum;
    double value;
  };
  std::vector<RhoJump> rho_jumps;
  for (const auto& p : jump_times(sol.arc.domain())) {
    const int k_last = sol.arc.num_samples(p.j) - 1;
    rho_jumps.push_back({p.t + p.j, rho(omega(sol.arc.sample_state(p.j, k_last)))});
  }

  double rho_integral = 0.0;  // trapezoid over stored samples
  double rho_jump_sum = 0.0;
  std::size_t jumps_counted = 0;
  double prev_t = 0.0;
  double prev_rho = 0.0;
  bool first = true;

  walk_samples(sol, gamma_bar, [&](double t, int j, const Eigen::VectorXd& x, double E) {
    const double w = omega(x);
    const double v = V(x);
    const double rho_here = rho(w);
    if (first) {
      first = false;
    } else if (t > prev_t) {
      rho_integral += 0.5 * (prev_rho + rho_here) * (t - prev_t);
    }
    prev_t = t;
    prev_rho = rho_here;
    const double order = t + j;
    while (jumps_counted < rho_jumps.size() && rho_jumps[jumps_counted].order_sum <= order) {
      rho_jump_sum += rho_jumps[jumps_counted].value;
      ++jumps_counted;
    }
    sandwich.add(t, j, std::max(alpha1_bar(w) - v, v - alpha2_bar(w)), 0.0, 0);
    accum.add(t, j, v, V0 - rho_integral - rho_jump_sum + E, 0);
  });

  TrajDissipationReport out;
  out.sandwich = sandwich.finish();
  out.accumulation = accum.finish();
  return out;
}

PointwiseReport check_pointwise_dissipation(const HybridSystem& sys, const StateField& V,
                                            const ScalarFn& rho, const ScalarFn& lambda,
                                            const ProperIndicator& omega, const GridSpec& grid,
                                            const CheckOptions& opts) {
  if (grid.x_lo.size() != sys.state_dim() || grid.x_hi.size() != sys.state_dim())
    throw ValidationError("grid x bounds must match the state dimension");
  if (grid.u_lo.size() != sys.input_dim() || grid.u_hi.size() != sys.input_dim())
    throw ValidationError("grid u bounds must match the input dimension");

  PointwiseReport rep;
  rep.check_tol = opts.check_tol;
  rep.max_flow_residual = -kInf;
  rep.max_jump_residual = -kInf;

  auto grad = [&](const Eigen::VectorXd& x) {
    return V.gradient ? V.gradient(x) : fd_gradient(V, x);
  };

  const int nx = sys.state_dim(), nu = sys.input_dim();
  std::vector<int> idx(static_cast<std::size_t>(nx + nu), 0);
  Eigen::VectorXd x(nx), u(nu);
  auto coord = [](double lo, double hi, int k, int pts) {
    return pts <= 1 ? lo : lo + (hi - lo) * k / (pts - 1);
  };
  bool more = true;
  double best = -kInf;
  auto note = [&](const Eigen::VectorXd& px, const Eigen::VectorXd& pu, double r, bool jump) {
    auto& mx = jump ? rep.max_jump_residual : rep.max_flow_residual;
    mx = std::max(mx, r);
    if (r > best) {
      best = r;
      rep.witness = {px, pu, r, jump};
    }
    if (rep.worst.size() < 16 || r > rep.worst.back().residual) {
      rep.worst.push_back({px, pu, r, jump});
      std::sort(rep.worst.begin(), rep.worst.end(),
                [](const PointwiseSample& a, const PointwiseSample& b) {
                  return a.residual > b.residual;
                });
      if (rep.worst.size() > 16) rep.worst.resize(16);
    }
  };
  while (more) {
    for (int i = 0; i < nx; ++i)
      x[i] = coord(grid.x_lo[i], grid.x_hi[i], idx[static_cast<std::size_t>(i)],
                   grid.x_points_per_dim);
    for (int i = 0; i < nu; ++i)
      u[i] = coord(grid.u_lo[i], grid.u_hi[i], idx[static_cast<std::size_t>(nx + i)],
                   grid.u_points_per_dim);

    const double lam = lambda(norm_of(u));
    const double rho_w = rho(omega(x));
    if (sys.in_C(x, u, grid.guard_tol)) {
      const double r = grad(x).dot(sys.eval_flow(x, u)) + rho_w - lam;
      ++rep.n_flow_points;
      note(x, u, r, false);
    }
    if (sys.in_D(x, u, grid.guard_tol)) {
      const double r = V(sys.eval_jump(x, u)) - V(x) + rho_w - lam;
      ++rep.n_jump_points;
      note(x, u, r, true);
    }

    // odometer increment
    more = false;
    for (std::size_t d = idx.size(); d-- > 0;) {
      const int pts = d < static_cast<std::size_t>(nx) ? grid.x_points_per_dim
                                                       : grid.u_points_per_dim;
      if (++idx[d] < pts) {
        more = true;
        break;
      }
      idx[d] = 0;
    }
  }
  if (rep.n_flow_points == 0) rep.max_flow_residual = 0.0;
  if (rep.n_jump_points == 0) rep.max_jump_residual = 0.0;
  rep.violated = (rep.n_flow_points + rep.n_jump_points > 0) &&
                 std::max(rep.max_flow_residual, rep.max_jump_residual) > opts.check_tol;
  return rep;
}

V2Result empirical_V2(const HybridSystem& sys, const ScalarFn& alpha, const ScalarFn& gamma,
                      const Eigen::VectorXd& x0, int budget, const V2Options& opts,
                      std::uint64_t seed) {
  if (budget < 1) throw ValidationError("empirical_V2: budget must be >= 1");
  const ProperIndicator& om = sys.indicator();
  V2Result best;
  best.lower_bound = -kInf;
  for (int trial = 0; trial < budget; ++trial) {
    InputSpec ispec;
    if (trial == 0 || opts.level_lo.size() == 0) {
      ispec = InputSpec::zero(sys.input_dim());
    } else {
      Rng rng(seed + static_cast<std::uint64_t>(trial));
      ispec = sample_input_spec(rng, opts.level_lo, opts.level_hi, 0, opts.max_switches,
                                opts.sim.horizon_t);
    }
    SolutionPair sol = simulate(sys, x0, ispec, opts.sim);
    walk_samples(sol, gamma, [&](double t, int j, const Eigen::VectorXd& x, double E) {
      const double candidate = alpha(om(x)) - E;
      if (candidate > best.lower_bound) {
        best.lower_bound = candidate;
        best.witness_trial = trial;
        best.witness_point = {t, j};
        best.witness_input = ispec;
      }
    });
  }
  return best;
}

double t_star(const KLFn& bt1, double s, double level, double tol) {
  if (bt1(s, 0.0) <= level) return 0.0;
  double lo = 0.0, hi = 1.0;
  const double cap = 1.8446744073709552e19;
  while (bt1(s, hi) > level) {
    if (hi >= cap)
      throw RangeError("t_star: KL bound does not fall to the requested level");
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (bt1(s, mid) > level)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

KLFn construct_0ugas_beta(const KLFn& bt1, double p, const KLFn& bt2, double l) {
  if (!(l > p) || p < 0.0)
    throw ValidationError("construct_0ugas_beta: requires l > p >= 0 (with l <= p the "
                          "combination need not imply iISS)");
  const double level = l - p;
  auto fn = [bt1, bt2, p, l, level](double s, double t) {
    const double ts = t_star(bt1, s, level);
    const double inv_t = t > 0.0 ? 1.0 / t : kInf;
    if (t < ts) return (bt2(l, 0.0) / l) * (bt1(s, t) + p) + inv_t;
    return bt2(l, std::max(t - ts - 1.0, 0.0)) + inv_t;
  };
  return KLFn::from_callable(fn,
                             "piecewise 0-UGAS envelope from (" + bt1.repr() + ", p=" +
                                 std::to_string(p) + ") and (" + bt2.repr() + ", l=" +
                                 std::to_string(l) + ")",
                             /*extended_valued=*/true);
}

PracticalCert bad_example_practical_cert() {
  PracticalCert cert;
  cert.p = 1.0;
  cert.chi = ScalarFn::identity();
  cert.gamma = ScalarFn::from_expr("s^2 + 2*s", FnClass::K);
  // Comparison principle on the interval distance: w' <= -(1+w) w^2 + |u|
  // and |u| <= gamma(|u|)/2 give w(t) <= w0/(1 + w0 t) + ||u||^gamma / 2,
  // hence |x(t)| <= btilde(max{|x0|-1,0}, t) + ||u||^gamma + 1 with
  // btilde(s,t) = s/(1+st). The s/t term makes beta class K in s.
  cert.beta = KLFn::from_callable(
      [](double s, double t) {
        const double m = std::max(s - 1.0, 0.0);
        const double head = m / (1.0 + m * t);
        if (s == 0.0) return head;
        return t > 0.0 ? head + s / t : kInf;
      },
      "max(s - 1, 0)/(1 + max(s - 1, 0)*t) + s/t", /*extended_valued=*/true);
  return cert;
}

LocalCert bad_example_local_cert(double l) {
  if (!(l > 0.0 && l < 1.0))
    throw DomainError("bad_example_local_cert: l must lie in (0, 1)");
  LocalCert cert;
  cert.l = l;
  const double r = std::sqrt((l * l + 1.0) / 2.0);
  const double rate = (1.0 - r) * (1.0 - r);
  const double chi_c = std::sqrt(1.0 - l * l) / l;
  const double gamma_c = 4.0 * l * l / (1.0 - l * l);
  cert.gamma = ScalarFn::from_expr(fmt_exact(gamma_c) + "*s", FnClass::K);
  cert.chi = ScalarFn::from_callable([chi_c](double s) { return chi_c * std::sqrt(s); },
                                     fmt_exact(chi_c) + "*sqrt(s)", FnClass::Kinf);
  cert.beta = KLFn::from_callable(
      [rate](double s, double t) { return std::sqrt(2.0) * std::exp(-rate * t) * s; },
      "sqrt(2)*exp(-" + fmt_exact(rate) + "*t)*s");
  return cert;
}

std::string to_string(EstimateKind k) {
  switch (k) {
    case EstimateKind::iISS:
      return "iISS";
    case EstimateKind::zero_UGAS:
      return "zero_UGAS";
    case EstimateKind::UBEBS:
      return "UBEBS";
    case EstimateKind::UBEBS_alpha123:
      return "UBEBS_alpha123";
    case EstimateKind::UBEBS_c0:
      return "UBEBS_c0";
    case EstimateKind::local_iISS:
      return "local_iISS";
    case EstimateKind::practical_iISS:
      return "practical_iISS";
    case EstimateKind::traj_dissipation:
      return "traj_dissipation";
    case EstimateKind::pointwise_dissipation:
      return "pointwise_dissipation";
  }
  return "unknown";
}

namespace {

void require_class(const ScalarFn& fn, std::initializer_list<FnClass> allowed,
                   const std::string& name) {
  if (!fn.valid()) throw ValidationError("estimate parameter '" + name + "' missing");
  bool ok = false;
  for (FnClass c : allowed)
    if (fn.claimed_class() == c) ok = true;
  if (!ok)
    throw ValidationError("estimate parameter '" + name + "' has class " +
                          to_string(fn.claimed_class()) + ", not accepted here");
  const auto rep = validate_class(fn, default_validation_grid());
  if (!rep.passed())
    throw ValidationError("estimate parameter '" + name + "' failed class validation for " +
                          to_string(fn.claimed_class()));
}

void require_kll(const KLLFn& b, const std::string& name) {
  if (!b.valid()) throw ValidationError("estimate parameter '" + name + "' missing");
  const std::vector<double> sg{0.0, 0.25, 1.0, 3.0};
  const std::vector<double> tg{0.0, 0.5, 1.0, 2.0, 4.0};
  const std::vector<double> jg{0.0, 1.0, 2.0};
  const auto rep = validate_kll(b, sg, tg, jg);
  if (!rep.passed())
    throw ValidationError("estimate parameter '" + name + "' failed sampled KLL validation");
}

}  // namespace

void EstimateSpec::validate() const {
  switch (kind) {
    case EstimateKind::iISS:
      require_kll(beta, "beta");
      require_class(chi, {FnClass::Kinf}, "chi");
      require_class(gamma, {FnClass::K, FnClass::Kinf}, "gamma");
      break;
    case EstimateKind::zero_UGAS:
      require_kll(beta, "beta");
      break;
    case EstimateKind::UBEBS:
    case EstimateKind::UBEBS_c0:
      require_class(alpha, {FnClass::Kinf}, "alpha");
      require_class(kappa, {FnClass::Kinf}, "kappa");
      require_class(gamma, {FnClass::K, FnClass::Kinf}, "gamma");
      if (kind == EstimateKind::UBEBS_c0 && c != 0.0)
        throw ValidationError("UBEBS_c0 requires c = 0");
      if (c < 0.0) throw ValidationError("UBEBS requires c >= 0");
      break;
    case EstimateKind::UBEBS_alpha123:
      require_class(alpha1, {FnClass::Kinf}, "alpha1");
      require_class(alpha2, {FnClass::Kinf}, "alpha2");
      require_class(alpha3, {FnClass::Kinf}, "alpha3");
      require_class(gamma, {FnClass::K, FnClass::Kinf}, "gamma");
      break;
    case EstimateKind::local_iISS:
      require_kll(beta, "beta");
      require_class(chi, {FnClass::Kinf}, "chi");
      require_class(gamma, {FnClass::K, FnClass::Kinf}, "gamma");
      if (!(l > 0.0)) throw ValidationError("local iISS requires l > 0");
      break;
    case EstimateKind::practical_iISS:
      require_kll(beta, "beta");
      require_class(chi, {FnClass::Kinf}, "chi");
      require_class(gamma, {FnClass::K, FnClass::Kinf}, "gamma");
      if (p < 0.0) throw ValidationError("practical iISS requires p >= 0");
      break;
    case EstimateKind::traj_dissipation:
      if (!V.fn) throw ValidationError("estimate parameter 'V' missing");
      require_class(alpha1_bar, {FnClass::Kinf}, "alpha1_bar");
      require_class(alpha2_bar, {FnClass::Kinf}, "alpha2_bar");
      require_class(rho, {FnClass::PD, FnClass::K, FnClass::Kinf}, "rho");
      require_class(gamma_bar, {FnClass::K, FnClass::Kinf}, "gamma_bar");
      break;
    case EstimateKind::pointwise_dissipation:
      if (!V.fn) throw ValidationError("estimate parameter 'V' missing");
      require_class(rho, {FnClass::PD, FnClass::K, FnClass::Kinf}, "rho");
      require_class(lambda, {FnClass::K, FnClass::Kinf}, "lambda");
      break;
  }
}

std::vector<std::pair<std::string, std::string>> EstimateSpec::parameter_reprs() const {
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](const std::string& n, const std::string& r) {
    if (!r.empty()) out.push_back({n, r});
  };
  switch (kind) {
    case EstimateKind::iISS:
      put("beta", beta.valid() ? beta.repr() : "");
      put("chi", chi.valid() ? chi.repr() : "");
      put("gamma", gamma.valid() ? gamma.repr() : "");
      break;
    case EstimateKind::zero_UGAS:
      put("beta", beta.valid() ? beta.repr() : "");
      break;
    case EstimateKind::UBEBS:
    case EstimateKind::UBEBS_c0:
      put("alpha", alpha.valid() ? alpha.repr() : "");
      put("kappa", kappa.valid() ? kappa.repr() : "");
      put("gamma", gamma.valid() ? gamma.repr() : "");
      put("c", std::to_string(c));
      break;
    case EstimateKind::UBEBS_alpha123:
      put("alpha1", alpha1.valid() ? alpha1.repr() : "");
      put("alpha2", alpha2.valid() ? alpha2.repr() : "");
      put("alpha3", alpha3.valid() ? alpha3.repr() : "");
      put("gamma_hat", gamma.valid() ? gamma.repr() : "");
      break;
    case EstimateKind::local_iISS:
      put("beta", beta.valid() ? beta.repr() : "");
      put("chi", chi.valid() ? chi.repr() : "");
      put("gamma", gamma.valid() ? gamma.repr() : "");
      put("l", std::to_string(l));
      break;
    case EstimateKind::practical_iISS:
      put("beta", beta.valid() ? beta.repr() : "");
      put("chi", chi.valid() ? chi.repr() : "");
      put("gamma", gamma.valid() ? gamma.repr() : "");
      put("p", std::to_string(p));
      break;
    case EstimateKind::traj_dissipation:
      put("V", V.repr);
      put("alpha1_bar", alpha1_bar.valid() ? alpha1_bar.repr() : "");
      put("alpha2_bar", alpha2_bar.valid() ? alpha2_bar.repr() : "");
      put("rho", rho.valid() ? rho.repr() : "");
      put("gamma_bar", gamma_bar.valid() ? gamma_bar.repr() : "");
      break;
    case EstimateKind::pointwise_dissipation:
      put("V", V.repr);
      put("rho", rho.valid() ? rho.repr() : "");
      put("lambda", lambda.valid() ? lambda.repr() : "");
      break;
  }
  return out;
}

CheckReport run_check(const EstimateSpec& spec, const HybridSystem& sys,
                      std::span<const SolutionPair> sols, const ProperIndicator& omega,
                      const CheckOptions& opts) {
  switch (spec.kind) {
    case EstimateKind::zero_UGAS:
      return check_0ugas(sols, spec.beta, omega, opts);
    case EstimateKind::local_iISS:
      return check_local_iiss(sols, spec.beta, spec.chi, spec.gamma, spec.l, omega, opts);
    case EstimateKind::pointwise_dissipation: {
      PointwiseReport pr =
          check_pointwise_dissipation(sys, spec.V, spec.rho, spec.lambda, omega, spec.grid, opts);
      CheckReport rep;
      rep.kind = to_string(spec.kind);
      rep.parameters = spec.parameter_reprs();
      rep.check_tol = opts.check_tol;
      rep.n_samples = pr.n_flow_points + pr.n_jump_points;
      rep.max_residual = rep.n_samples > 0 ? pr.max_residual() : 0.0;
      rep.violated = pr.violated;
      if (pr.witness.x.size() > 0) {
        rep.witness.residual = pr.witness.residual;
        rep.witness.lhs = pr.witness.residual;
        rep.witness.t = pr.witness.x[0];
        rep.witness.j = pr.witness.jump_stream ? 1 : 0;
      }
      return rep;
    }
    default:
      break;
  }

  // Per-trajectory kinds merged over the batch in trajectory order.
  ReportBuilder rb(to_string(spec.kind), opts);
  rb.rep.parameters = spec.parameter_reprs();
  int traj = 0;
  for (const auto& sol : sols) {
    switch (spec.kind) {
      case EstimateKind::iISS:
        practical_iiss_into(rb, sol, spec.beta, spec.chi, spec.gamma, 0.0, omega, traj);
        break;
      case EstimateKind::practical_iISS:
        practical_iiss_into(rb, sol, spec.beta, spec.chi, spec.gamma, spec.p, omega, traj);
        break;
      case EstimateKind::UBEBS:
      case EstimateKind::UBEBS_c0: {
        const double w0 = omega_at_start(sol, omega);
        walk_samples(sol, spec.gamma, [&](double t, int j, const Eigen::VectorXd& x, double E) {
          rb.add(t, j, spec.alpha(omega(x)), spec.kappa(w0) + E + spec.c, traj);
        });
        break;
      }
      case EstimateKind::UBEBS_alpha123: {
        const double w0 = omega_at_start(sol, omega);
        walk_samples(sol, spec.gamma, [&](double t, int j, const Eigen::VectorXd& x, double E) {
          rb.add(t, j, spec.alpha1(omega(x)), spec.alpha2(w0) + spec.alpha3(E), traj);
        });
        break;
      }
      case EstimateKind::traj_dissipation: {
        TrajDissipationReport tr = check_traj_dissipation(
            sol, spec.V, spec.alpha1_bar, spec.alpha2_bar, spec.rho, spec.gamma_bar, omega, opts);
        for (const auto* part : {&tr.sandwich, &tr.accumulation}) {
          rb.rep.n_samples += part->n_samples;
          if (part->n_samples > 0 && part->max_residual > rb.rep.max_residual) {
            rb.rep.max_residual = part->max_residual;
            rb.rep.witness = part->witness;
            rb.rep.witness.trajectory = traj;
            rb.have_any = true;
          }
        }
        break;
      }
      default:
        throw ValidationError("run_check: unsupported estimate kind here");
    }
    ++traj;
  }
  return rb.finish();
}

}  // namespace hysim
