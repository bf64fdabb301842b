#include "hysim/falsifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "hysim/random.hpp"

namespace hysim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TrialOutcome {
  bool failed = false;
  std::string error;
  double max_residual = kNegInf;
  CheckReport report;
  Witness witness;
};

CheckReport check_witness(const HybridSystem& sys, const EstimateSpec& spec, const Witness& w,
                          const SimOptions& opts, const CheckOptions& check_opts) {
  SolutionPair sol = simulate(sys, w.x0, w.input, opts);
  return run_check(spec, sys, std::span<const SolutionPair>(&sol, 1), sys.indicator(),
                   check_opts);
}

Witness sample_witness(const HybridSystem& sys, const EstimateSpec& spec,
                       const SamplerConfig& cfg, const SimOptions& opts, std::uint64_t seed) {
  Rng rng(seed);
  Witness w;
  w.x0 = rng.uniform_vector(cfg.x0_lo, cfg.x0_hi);
  const bool zero_input = spec.kind == EstimateKind::zero_UGAS || sys.input_dim() == 0 ||
                          cfg.level_lo.size() == 0;
  if (zero_input)
    w.input = InputSpec::zero(sys.input_dim());
  else
    w.input = sample_input_spec(rng, cfg.level_lo, cfg.level_hi, cfg.min_switches,
                                cfg.max_switches, opts.horizon_t);
  return w;
}

void run_trials(const HybridSystem& sys, const EstimateSpec& spec, const SamplerConfig& cfg,
                const SimOptions& opts, const CheckOptions& check_opts,
                std::vector<TrialOutcome>& outcomes) {
  auto work = [&](int trial) {
    TrialOutcome& out = outcomes[static_cast<std::size_t>(trial)];
    out.witness = sample_witness(sys, spec, cfg, opts,
                                 cfg.seed + static_cast<std::uint64_t>(trial));
    try {
      out.report = check_witness(sys, spec, out.witness, opts, check_opts);
      out.max_residual = out.report.n_samples > 0 ? out.report.max_residual : kNegInf;
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, cfg.trials));
  if (threads == 1) {
    for (int i = 0; i < cfg.trials; ++i) work(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= cfg.trials) return;
        work(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

RefineResult refine(const HybridSystem& sys, const EstimateSpec& spec, const Witness& witness,
                    int rounds, double shrink, const SamplerConfig& cfg, const SimOptions& opts,
                    const CheckOptions& check_opts) {
  RefineResult best;
  best.witness = witness;
  best.report = check_witness(sys, spec, witness, opts, check_opts);

  auto try_candidate = [&](const Witness& w) {
    try {
      CheckReport rep = check_witness(sys, spec, w, opts, check_opts);
      if (rep.n_samples > 0 && rep.max_residual > best.report.max_residual) {
        best.report = std::move(rep);
        best.witness = w;
      }
    } catch (const std::exception&) {
      // infeasible perturbation; keep the current best
    }
  };

  double scale = 1.0;
  for (int round = 0; round < rounds; ++round, scale *= shrink) {
    // x0 coordinates
    for (Eigen::Index i = 0; i < best.witness.x0.size(); ++i) {
      const double radius =
          0.5 * scale * (cfg.x0_hi.size() > i ? cfg.x0_hi[i] - cfg.x0_lo[i] : 1.0);
      for (double dir : {+1.0, -1.0}) {
        Witness w = best.witness;
        w.x0[i] = w.x0[i] + dir * radius;
        if (cfg.x0_hi.size() > i) w.x0[i] = std::clamp(w.x0[i], cfg.x0_lo[i], cfg.x0_hi[i]);
        try_candidate(w);
      }
    }
    // input levels and switch offsets
    for (std::size_t ph = 0; ph < best.witness.input.phases.size(); ++ph) {
      const auto& sched = best.witness.input.phases[ph];
      for (std::size_t li = 0; li < sched.levels.size(); ++li) {
        for (Eigen::Index d = 0; d < sched.levels[li].size(); ++d) {
          const double radius =
              0.5 * scale *
              (cfg.level_hi.size() > d ? cfg.level_hi[d] - cfg.level_lo[d] : 1.0);
          for (double dir : {+1.0, -1.0}) {
            Witness w = best.witness;
            auto& lv = w.input.phases[ph].levels[li];
            lv[d] = lv[d] + dir * radius;
            if (cfg.level_hi.size() > d) lv[d] = std::clamp(lv[d], cfg.level_lo[d], cfg.level_hi[d]);
            try_candidate(w);
          }
        }
      }
      for (std::size_t si = 0; si < sched.switch_offsets.size(); ++si) {
        const double radius = 0.25 * scale * opts.horizon_t;
        for (double dir : {+1.0, -1.0}) {
          Witness w = best.witness;
          auto& offs = w.input.phases[ph].switch_offsets;
          offs[si] = std::clamp(offs[si] + dir * radius, 0.0, opts.horizon_t);
          std::sort(offs.begin(), offs.end());
          try_candidate(w);
        }
      }
    }
  }
  return best;
}

FalsificationReport falsify(const HybridSystem& sys, const EstimateSpec& spec,
                            const SamplerConfig& cfg, const SimOptions& opts,
                            const CheckOptions& check_opts) {
  if (spec.kind == EstimateKind::pointwise_dissipation)
    throw ValidationError("falsify: pointwise (grid) estimates are checked directly, not "
                          "falsified by trajectory sampling");
  if (cfg.trials < 1) throw ValidationError("falsify: trial count must be >= 1");
  if (cfg.x0_lo.size() != sys.state_dim() || cfg.x0_hi.size() != sys.state_dim())
    throw ValidationError("falsify: x0 box must match the state dimension");
  spec.validate();

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
  run_trials(sys, spec, cfg, opts, check_opts, outcomes);

  FalsificationReport rep;
  rep.seed = cfg.seed;
  rep.trials_run = cfg.trials;
  rep.histogram_edges = {-1e9, -1.0, -0.1, -0.01, -1e-4, 0.0, 1e-4, 0.01, 0.1, 1.0, 1e9};
  rep.histogram_counts.assign(rep.histogram_edges.size() - 1, 0);

  int best_trial = -1;
  double best_residual = kNegInf;
  for (int i = 0; i < cfg.trials; ++i) {
    const auto& out = outcomes[static_cast<std::size_t>(i)];
    if (out.failed) {
      ++rep.trials_failed;
      continue;
    }
    const double r = out.max_residual;
    if (std::isfinite(r)) {
      auto it = std::upper_bound(rep.histogram_edges.begin(), rep.histogram_edges.end(), r);
      std::size_t bin = static_cast<std::size_t>(
          std::clamp<std::ptrdiff_t>(it - rep.histogram_edges.begin() - 1, 0,
                                     static_cast<std::ptrdiff_t>(rep.histogram_counts.size()) - 1));
      ++rep.histogram_counts[bin];
    }
    if (r > best_residual) {
      best_residual = r;
      best_trial = i;
    }
  }

  if (best_trial < 0) {
    rep.note = "all trials failed to simulate; no violation found in budget";
    return rep;
  }

  const auto& best_out = outcomes[static_cast<std::size_t>(best_trial)];
  RefineResult refined = refine(sys, spec, best_out.witness, cfg.refine_rounds,
                                cfg.refine_shrink, cfg, opts, check_opts);
  rep.best = std::move(refined.report);
  rep.witness = std::move(refined.witness);
  rep.witness_trial = best_trial;
  rep.violation_found = rep.best.violated;
  rep.note = rep.violation_found
                 ? "violation found; witness replays deterministically"
                 : "no violation found within budget (this is not a proof of the property)";
  return rep;
}

}  // namespace hysim
