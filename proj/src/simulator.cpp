#include "hysim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hysim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Priority p) {
  return p == Priority::jump_first ? "jump_first" : "flow_first";
}

Eigen::VectorXd rk4_step(const HybridSystem& sys, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double h) {
  Eigen::VectorXd k1 = sys.eval_flow(x, u);
  Eigen::VectorXd k2 = sys.eval_flow(x + 0.5 * h * k1, u);
  Eigen::VectorXd k3 = sys.eval_flow(x + 0.5 * h * k2, u);
  Eigen::VectorXd k4 = sys.eval_flow(x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

LocatedEvent locate_event(const HybridSystem& sys, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u, double step, GuardKind which,
                          double event_tol) {
  auto guard = [&](const Eigen::VectorXd& s) {
    return which == GuardKind::flow_exit ? sys.flow_guard(s, u) : sys.jump_guard(s, u);
  };
  // flow_exit: crossing from g <= tol to g > tol; jump_entry: the reverse.
  auto feasible = [&](double g) {
    return which == GuardKind::flow_exit ? g <= event_tol : g > event_tol;
  };
  const double g0 = guard(x);
  Eigen::VectorXd x_end = rk4_step(sys, x, u, step);
  const double g1 = guard(x_end);
  if (!feasible(g0) || feasible(g1))
    throw BracketLostError("locate_event: guard does not change side across the step");

  double lo = 0.0, hi = step;
  Eigen::VectorXd x_lo = x, x_hi = std::move(x_end);
  LocatedEvent ev;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    Eigen::VectorXd x_mid = rk4_step(sys, x, u, mid);
    const double g = guard(x_mid);
    ev.bisections = i + 1;
    if (std::fabs(g) <= event_tol) {
      ev.dt = mid;
      ev.state = std::move(x_mid);
      return ev;
    }
    if (feasible(g)) {
      lo = mid;
      x_lo = std::move(x_mid);
    } else {
      hi = mid;
      x_hi = std::move(x_mid);
    }
    if (hi - lo <= 1e-16 * std::max(1.0, step)) break;
  }
  // Tolerance not met within the budget: return the side that keeps the
  // accepted trajectory feasible (on/inside the boundary).
  if (which == GuardKind::flow_exit) {
    ev.dt = lo;
    ev.state = std::move(x_lo);
  } else {
    ev.dt = hi;
    ev.state = std::move(x_hi);
  }
  return ev;
}

namespace {

/// Incremental builder keeping the domain, arc and materialized input
/// consistent while phases are produced.
struct TrajectoryBuilder {
  int n, m;
  const InputSpec& ispec;
  std::vector<HybridTimeDomain::Phase> phases;
  struct PhaseRec {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    double t_start = 0.0;
    double t_end = 0.0;
    std::optional<Eigen::VectorXd> jump_value;
  };
  std::vector<PhaseRec> recs;

  TrajectoryBuilder(int n_, int m_, const InputSpec& is) : n(n_), m(m_), ispec(is) {}

  PhaseRec& current() { return recs.back(); }

  void open_phase(double t, const Eigen::VectorXd& x) {
    PhaseRec r;
    r.t_start = t;
    r.t_end = t;
    r.times.push_back(t);
    r.states.push_back(x);
    recs.push_back(std::move(r));
  }

  void record(double t, const Eigen::VectorXd& x) {
    auto& r = current();
    if (!r.times.empty() && r.times.back() == t) {
      r.states.back() = x;
      return;
    }
    r.times.push_back(t);
    r.states.push_back(x);
  }

  void close_phase(double t, const Eigen::VectorXd& x, bool jumping) {
    record(t, x);
    auto& r = current();
    r.t_end = t;
    if (jumping) {
      const int j = static_cast<int>(recs.size()) - 1;
      r.jump_value = ispec.value(j, t - r.t_start);
    }
  }

  SolutionPair finish(Termination term, SimStats stats) {
    std::vector<HybridTimeDomain::Phase> dom_phases;
    for (const auto& r : recs) dom_phases.push_back({r.t_start, r.t_end});
    HybridTimeDomain domain(dom_phases);

    HybridArc arc(domain, n);
    for (std::size_t j = 0; j < recs.size(); ++j)
      for (std::size_t k = 0; k < recs[j].times.size(); ++k)
        arc.append_sample(static_cast<int>(j), recs[j].times[k], recs[j].states[k]);

    HybridInput input(domain, m);
    for (std::size_t j = 0; j < recs.size(); ++j) {
      const auto& proto = ispec.phase(static_cast<int>(j));
      HybridInput::PhaseSchedule sched;
      const double len = recs[j].t_end - recs[j].t_start;
      sched.levels.push_back(proto.levels.front());
      for (std::size_t k = 0; k < proto.switch_offsets.size(); ++k) {
        if (proto.switch_offsets[k] <= 0.0 || proto.switch_offsets[k] >= len) continue;
        sched.switch_offsets.push_back(proto.switch_offsets[k]);
        sched.levels.push_back(proto.levels[k + 1]);
      }
      sched.jump_value = recs[j].jump_value;
      input.set_phase_schedule(static_cast<int>(j), std::move(sched));
    }

    SolutionPair sol;
    sol.arc = std::move(arc);
    sol.input = std::move(input);
    sol.termination = term;
    sol.stats = std::move(stats);
    return sol;
  }
};

}  // namespace

SolutionPair simulate(const HybridSystem& sys, const Eigen::VectorXd& x0,
                      const InputSpec& input, const SimOptions& opts) {
  if (opts.step <= 0.0) throw SimulationError("step must be positive");
  if (opts.horizon_t < 0.0 || opts.horizon_j < 0) throw SimulationError("horizons must be >= 0");
  if (x0.size() != sys.state_dim()) throw SimulationError("x0 dimension mismatch");

  TrajectoryBuilder tb(sys.state_dim(), sys.input_dim(), input);
  SimStats stats;
  stats.priority = to_string(opts.priority);

  Eigen::VectorXd x = x0;
  double t = 0.0;
  int j = 0;
  double phase_t0 = 0.0;
  int consecutive_zero = 0;
  int since_record = 0;

  Eigen::VectorXd u = input.value(0, 0.0);
  if (!sys.in_C(x, u, opts.event_tol) && !sys.in_D(x, u, opts.event_tol))
    throw SimulationError("initial condition (x0, u(0,0)) lies in neither C nor D");

  tb.open_phase(0.0, x);

  auto guard_residual = [&](double g) {
    stats.max_guard_residual = std::max(stats.max_guard_residual, std::max(g, 0.0));
  };

  const bool jump_first = opts.priority == Priority::jump_first;
  Termination term = Termination::horizon_reached;

  for (;;) {
    u = input.value(j, t - phase_t0);
    const double d_here = sys.jump_guard(x, u);
    const double c_here = sys.flow_guard(x, u);

    const bool want_jump =
        d_here <= opts.event_tol && (jump_first || c_here > opts.event_tol);

    if (want_jump) {
      if (j >= opts.horizon_j) {
        term = Termination::horizon_reached;
        tb.close_phase(t, x, false);
        break;
      }
      const double phase_len = t - phase_t0;
      if (phase_len == 0.0) {
        if (consecutive_zero >= opts.zeno_cap) {
          term = Termination::zeno_suspected;
          tb.close_phase(t, x, false);
          break;
        }
        ++consecutive_zero;
      } else {
        consecutive_zero = 0;
      }
      guard_residual(d_here);
      Eigen::VectorXd x_plus = sys.eval_jump(x, u);
      if (!x_plus.allFinite()) throw SimulationError("jump map produced a non-finite state");
      tb.close_phase(t, x, true);
      ++j;
      phase_t0 = t;
      x = std::move(x_plus);
      tb.open_phase(t, x);
      since_record = 0;
      u = input.value(j, 0.0);
      if (!sys.in_C(x, u, opts.event_tol) && !sys.in_D(x, u, opts.event_tol)) {
        term = Termination::left_C_and_D;
        tb.close_phase(t, x, false);
        break;
      }
      continue;
    }

    if (c_here > opts.event_tol) {
      term = Termination::left_C_and_D;
      tb.close_phase(t, x, false);
      break;
    }
    guard_residual(c_here);

    if (t >= opts.horizon_t) {
      term = Termination::horizon_reached;
      tb.close_phase(t, x, false);
      break;
    }

    // One flow step, split at input switches and the horizon.
    const double next_switch = input.next_switch_after(j, t - phase_t0);
    double h = std::min(opts.step, opts.horizon_t - t);
    double t_target = t + h;
    if (phase_t0 + next_switch < t_target) {
      t_target = phase_t0 + next_switch;
      h = t_target - t;
    } else if (opts.horizon_t - t <= opts.step) {
      t_target = opts.horizon_t;
    }
    if (h <= 0.0) throw SimulationError("flow step collapsed to zero");

    double step_h = h;
    for (int retry = 0;; ++retry) {
      Eigen::VectorXd x_end = rk4_step(sys, x, u, step_h);
      if (!x_end.allFinite()) throw SimulationError("flow produced a non-finite state");
      ++stats.steps;
      const double c_end = sys.flow_guard(x_end, u);
      const double d_end = jump_first ? sys.jump_guard(x_end, u) : 1.0;

      double ev_dt = kInf;
      bool ev_is_jump = false;
      Eigen::VectorXd ev_state;
      try {
        if (jump_first && d_here > opts.event_tol && d_end <= opts.event_tol) {
          LocatedEvent ev = locate_event(sys, x, u, step_h, GuardKind::jump_entry, opts.event_tol);
          ev_dt = ev.dt;
          ev_is_jump = true;
          ev_state = std::move(ev.state);
        }
        if (c_end > opts.event_tol) {
          LocatedEvent ev = locate_event(sys, x, u, step_h, GuardKind::flow_exit, opts.event_tol);
          if (ev.dt < ev_dt) {
            ev_dt = ev.dt;
            ev_is_jump = false;
            ev_state = std::move(ev.state);
          }
        }
      } catch (const BracketLostError&) {
        if (retry < 8) {
          step_h *= 0.5;  // non-monotone interpolation; halve and retry
          continue;
        }
        throw;
      }

      if (std::isfinite(ev_dt)) {
        ++stats.events_located;
        t += ev_dt;
        x = std::move(ev_state);
        tb.record(t, x);
        since_record = 0;
        if (!ev_is_jump) {
          // On the C boundary; jump if possible, otherwise maximal.
          const double d_b = sys.jump_guard(x, u);
          if (!(d_b <= opts.event_tol)) {
            term = Termination::left_C_and_D;
            tb.close_phase(t, x, false);
            return tb.finish(term, stats);
          }
        }
        break;  // next loop iteration decides (jump or terminal)
      }

      // Whole step accepted.
      t = (step_h == h) ? t_target : t + step_h;
      x = std::move(x_end);
      if (++since_record >= opts.record_stride) {
        tb.record(t, x);
        since_record = 0;
      }
      if (x.norm() > opts.blowup_norm) {
        term = Termination::flow_blowup;
        tb.close_phase(t, x, false);
        return tb.finish(term, stats);
      }
      break;
    }
  }

  return tb.finish(term, stats);
}

}  // namespace hysim
