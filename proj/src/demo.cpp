#include "hysim/demo.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>

#include "hysim/random.hpp"

namespace hysim {

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double total_energy(const InputSpec& spec, const ScalarFn& gamma, double horizon,
                    double scale) {
  const auto& sched = spec.phase(0);
  double E = 0.0;
  double seg_start = 0.0;
  for (std::size_t k = 0; k <= sched.switch_offsets.size(); ++k) {
    const double seg_end =
        k < sched.switch_offsets.size() ? std::min(sched.switch_offsets[k], horizon) : horizon;
    if (seg_end > seg_start)
      E += gamma(scale * sched.levels[k].norm()) * (seg_end - seg_start);
    seg_start = seg_end;
  }
  return E;
}

}  // namespace

InputSpec sample_input_with_energy(std::uint64_t seed, int input_dim, const ScalarFn& gamma,
                                   double horizon, double energy_target) {
  Rng rng(seed);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(input_dim, -1.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(input_dim, 1.0);
  InputSpec spec = sample_input_spec(rng, lo, hi, 0, 3, horizon);
  if (energy_target <= 0.0) return InputSpec::zero(input_dim);
  const double base = total_energy(spec, gamma, horizon, 1.0);
  if (base <= 0.0) return spec;

  double s_lo = 0.0, s_hi = 1.0;
  while (total_energy(spec, gamma, horizon, s_hi) < energy_target && s_hi < 1e9) s_hi *= 2.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (total_energy(spec, gamma, horizon, mid) < energy_target)
      s_lo = mid;
    else
      s_hi = mid;
  }
  const double scale = s_lo;  // stay at or below the target
  for (auto& ph : spec.phases)
    for (auto& lv : ph.levels) lv *= scale;
  return spec;
}

BadExampleDemoResult run_bad_example_demo(const BadExampleDemoOptions& o) {
  BadExampleDemoResult res;
  const HybridSystem sys = bad_example();
  const ProperIndicator origin = sys.indicator();
  const ProperIndicator interval = ProperIndicator::interval(-1.0, 1.0);

  // --- unforced run from x0 = 2 ---------------------------------------
  {
    SimOptions sim;
    sim.step = 1e-3;
    sim.horizon_t = 100.0;
    Eigen::VectorXd x0(1);
    x0 << 2.0;
    res.unforced_sol = simulate(sys, x0, InputSpec::zero(1), sim);
    const auto term = res.unforced_sol.arc.domain().terminal();
    res.x_at_100 = res.unforced_sol.arc.value(term)[0];
    res.x100_in_bounds = res.x_at_100 >= 1.00497 && res.x_at_100 <= 1.00991;
  }

  // --- 0-UGAS falsification grid ---------------------------------------
  {
    const double t0 = now_s();
    SimOptions sim;
    sim.step = 1e-3;
    sim.horizon_t = o.ugas_horizon;
    sim.record_stride = 100;
    std::vector<SolutionPair> batch;
    for (int i = 0; i < o.ugas_batch; ++i) {
      Rng rng(o.seed + static_cast<std::uint64_t>(i));
      Eigen::VectorXd x0(1);
      x0 << rng.uniform(1.5, 3.0);
      batch.push_back(simulate(sys, x0, InputSpec::zero(1), sim));
    }
    CheckOptions copts;
    copts.check_tol = 1e-6;
    copts.max_kept_samples = 64;
    res.ugas_min_max_residual = std::numeric_limits<double>::infinity();
    for (int ci = 1; ci <= 10; ++ci) {
      for (int li = 0; li < 10; ++li) {
        const double C = ci;
        const double lambda = 0.01 + li * (0.99 / 9.0);
        const KLLFn beta =
            KLLFn::from_expr(fmt(C) + "*s*exp(-" + fmt(lambda) + "*t)");
        CheckReport rep = check_0ugas(batch, beta, origin, copts);
        UgasGridEntry e;
        e.C = C;
        e.lambda = lambda;
        e.violated = rep.violated;
        e.max_residual = rep.max_residual;
        e.witness = rep.witness;
        if (e.violated) ++res.ugas_violated;
        res.ugas_min_max_residual = std::min(res.ugas_min_max_residual, e.max_residual);
        res.ugas_grid.push_back(e);
      }
    }
    res.elapsed_ugas_s = now_s() - t0;
  }

  // --- pointwise dissipation of the certificate chain ------------------
  // V(x) = x^2 (the squared indicator for {0}) satisfies
  // <dV, f> <= -alpha(omega(x)) + sigma(|u|) with omega = dist to [-1, 1].
  {
    const double t0 = now_s();
    StateField V = StateField::from_expr("x1^2", 1);
    ScalarFn alpha = ScalarFn::from_expr("2*s^4 + 4*s^3 + s^2", FnClass::Kinf);
    ScalarFn sigma = ScalarFn::from_expr("s^2 + 2*s", FnClass::Kinf);
    GridSpec grid;
    grid.x_lo = Eigen::VectorXd::Constant(1, -5.0);
    grid.x_hi = Eigen::VectorXd::Constant(1, 5.0);
    grid.x_points_per_dim = 101;
    grid.u_lo = Eigen::VectorXd::Constant(1, -5.0);
    grid.u_hi = Eigen::VectorXd::Constant(1, 5.0);
    grid.u_points_per_dim = 101;
    res.pointwise = check_pointwise_dissipation(sys, V, alpha, sigma, interval, grid, {});
    res.elapsed_pointwise_s = now_s() - t0;
  }

  // --- practical iISS certificate, random trajectories -----------------
  {
    const double t0 = now_s();
    const PracticalCert cert = bad_example_practical_cert();
    EstimateSpec spec;
    spec.kind = EstimateKind::practical_iISS;
    spec.beta = kl_to_kll(cert.beta);
    spec.chi = cert.chi;
    spec.gamma = cert.gamma;
    spec.p = cert.p;
    SamplerConfig cfg;
    cfg.x0_lo = Eigen::VectorXd::Constant(1, -5.0);
    cfg.x0_hi = Eigen::VectorXd::Constant(1, 5.0);
    cfg.level_lo = Eigen::VectorXd::Constant(1, -2.0);
    cfg.level_hi = Eigen::VectorXd::Constant(1, 2.0);
    cfg.min_switches = 0;
    cfg.max_switches = 5;
    cfg.trials = o.practical_trials;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    SimOptions sim;
    sim.step = 1e-3;
    sim.horizon_t = o.practical_horizon;
    CheckOptions copts;
    copts.check_tol = o.cert_tol;
    copts.max_kept_samples = 256;
    res.practical = falsify(sys, spec, cfg, sim, copts);
    res.elapsed_practical_s = now_s() - t0;
  }

  // --- local iISS certificate, in-gate trajectories --------------------
  {
    const double t0 = now_s();
    const LocalCert cert = bad_example_local_cert(o.local_l);
    res.r_star = std::sqrt((o.local_l * o.local_l + 1.0) / 2.0);
    SimOptions sim;
    sim.step = 1e-3;
    sim.horizon_t = o.local_horizon;
    std::vector<SolutionPair> batch;
    for (int i = 0; i < o.local_trials; ++i) {
      Rng rng(o.seed + 1000003ull * static_cast<std::uint64_t>(i + 1));
      Eigen::VectorXd x0(1);
      x0 << rng.uniform(-o.local_l, o.local_l);
      const double target = rng.uniform(0.0, 0.95 * o.local_l);
      InputSpec ispec = sample_input_with_energy(rng.next_u64(), 1, cert.gamma,
                                                 o.local_horizon, target);
      batch.push_back(simulate(sys, x0, ispec, sim));
    }
    for (const auto& sol : batch) {
      for (int j = 0; j < sol.arc.domain().num_phases(); ++j)
        for (int k = 0; k < sol.arc.num_samples(j); ++k)
          res.local_max_abs_x =
              std::max(res.local_max_abs_x, std::fabs(sol.arc.sample_state(j, k)[0]));
    }
    CheckOptions copts;
    copts.check_tol = o.cert_tol;
    copts.max_kept_samples = 256;
    res.local = check_local_iiss(batch, kl_to_kll(cert.beta), cert.chi, cert.gamma, o.local_l,
                                 origin, copts);
    res.elapsed_local_s = now_s() - t0;
  }

  return res;
}

JumpDemoResult run_jump_demo() {
  JumpDemoResult res;
  const HybridSystem sys = decay_jump_demo();
  SimOptions sim;
  sim.step = 1e-3;
  sim.horizon_t = 3.0;
  sim.horizon_j = 3;
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  res.sol = simulate(sys, x0, InputSpec::zero(0), sim);
  for (const auto& p : jump_times(res.sol.arc.domain())) res.jump_flow_times.push_back(p.t);
  return res;
}

}  // namespace hysim
