#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "hysim/demo.hpp"
#include "hysim/io.hpp"
#include "hysim/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::string> priority;
  std::optional<int> trials;
  std::optional<double> horizon_t;
  std::optional<int> horizon_j;
};

void apply_overrides(const CommonArgs& a, hysim::Scenario& sc) {
  if (a.seed) sc.sampler.seed = *a.seed;
  if (a.trials) sc.sampler.trials = *a.trials;
  if (a.horizon_t) sc.sim.horizon_t = *a.horizon_t;
  if (a.horizon_j) sc.sim.horizon_j = *a.horizon_j;
  if (a.priority) {
    if (*a.priority == "jump")
      sc.sim.priority = hysim::Priority::jump_first;
    else if (*a.priority == "flow")
      sc.sim.priority = hysim::Priority::flow_first;
    else
      throw hysim::ScenarioError("--priority must be 'jump' or 'flow'", 0, 0);
  }
}

fs::path out_file(const CommonArgs& a, const std::string& name) {
  fs::create_directories(a.out_dir);
  return fs::path(a.out_dir) / name;
}

void write_json(const fs::path& p, const json& j) {
  hysim::write_text_file(p.string(), j.dump(2) + "\n");
}

int cmd_simulate(const CommonArgs& a) {
  hysim::Scenario sc = hysim::parse_scenario_file(a.scenario_path);
  apply_overrides(a, sc);
  const hysim::HybridSystem sys = sc.build_system();
  if (sc.x0.size() != sys.state_dim()) {
    std::cerr << "error: simulation block needs x0 with n entries\n";
    return kExitUsage;
  }
  hysim::SolutionPair sol = hysim::simulate(sys, sc.x0, sc.input, sc.sim);
  hysim::write_trajectory_csv(sol, sys.indicator(), out_file(a, "trajectory.csv").string());
  write_json(out_file(a, "sim_stats.json"), hysim::sim_stats_json(sol));
  std::cout << "simulate: " << to_string(sol.termination) << ", "
            << sol.arc.domain().num_phases() << " phase(s), sup_t = "
            << hysim::sup_t(sol.arc.domain()) << "\n";
  return kExitOk;
}

int cmd_check(const CommonArgs& a) {
  hysim::Scenario sc = hysim::parse_scenario_file(a.scenario_path);
  apply_overrides(a, sc);
  const hysim::HybridSystem sys = sc.build_system();
  if (sc.estimates.empty()) {
    std::cerr << "error: scenario has no estimate blocks\n";
    return kExitUsage;
  }
  hysim::CheckOptions copts;
  if (a.tol) copts.check_tol = *a.tol;

  std::vector<hysim::SolutionPair> sols;
  const bool needs_trajectory = std::any_of(
      sc.estimates.begin(), sc.estimates.end(), [](const auto& e) {
        return e.second.kind != hysim::EstimateKind::pointwise_dissipation;
      });
  if (needs_trajectory) {
    if (sc.x0.size() != sys.state_dim()) {
      std::cerr << "error: simulation block needs x0 with n entries\n";
      return kExitUsage;
    }
    sols.push_back(hysim::simulate(sys, sc.x0, sc.input, sc.sim));
  }

  bool any_violated = false;
  for (const auto& [name, spec] : sc.estimates) {
    spec.validate();
    hysim::CheckReport rep = hysim::run_check(spec, sys, sols, sys.indicator(), copts);
    write_json(out_file(a, "check_" + name + ".json"), hysim::check_report_json(rep));
    std::cout << "check " << name << " (" << rep.kind << "): "
              << (rep.violated ? "VIOLATED" : "pass") << ", max residual " << rep.max_residual
              << "\n";
    any_violated = any_violated || rep.violated;
  }
  return any_violated ? kExitViolation : kExitOk;
}

int cmd_falsify(const CommonArgs& a) {
  hysim::Scenario sc = hysim::parse_scenario_file(a.scenario_path);
  apply_overrides(a, sc);
  const hysim::HybridSystem sys = sc.build_system();
  if (sc.estimates.empty()) {
    std::cerr << "error: scenario has no estimate blocks\n";
    return kExitUsage;
  }
  if (!sc.has_sampler) {
    std::cerr << "error: scenario has no falsifier block\n";
    return kExitUsage;
  }
  hysim::CheckOptions copts;
  if (a.tol) copts.check_tol = *a.tol;

  bool any_violation = false;
  for (const auto& [name, spec] : sc.estimates) {
    hysim::FalsificationReport rep = hysim::falsify(sys, spec, sc.sampler, sc.sim, copts);
    write_json(out_file(a, "falsify_" + name + ".json"),
               hysim::falsification_report_json(rep));
    hysim::write_text_file(out_file(a, "witness_" + name + ".scenario").string(),
                           hysim::witness_scenario_snippet(sc, rep.witness, rep.seed));
    std::cout << "falsify " << name << " (" << to_string(spec.kind) << "): "
              << (rep.violation_found ? "VIOLATION FOUND" : "no violation in budget")
              << ", best residual " << rep.best.max_residual << "\n";
    any_violation = any_violation || rep.violation_found;
  }
  return any_violation ? kExitViolation : kExitOk;
}

int cmd_convert(const CommonArgs& a) {
  hysim::Scenario sc = hysim::parse_scenario_file(a.scenario_path);
  if (!sc.convert) {
    std::cerr << "error: scenario has no convert block\n";
    return kExitUsage;
  }
  const auto& cv = *sc.convert;
  auto grid_or = [](const std::vector<double>& g, std::initializer_list<double> dflt) {
    return g.empty() ? std::vector<double>(dflt) : g;
  };
  std::string csv;
  if (!cv.kl.empty()) {
    const hysim::KLFn bt = hysim::KLFn::from_expr(cv.kl);
    const hysim::KLLFn b = hysim::kl_to_kll(bt);
    csv = "s,t,j,beta\n";
    for (double s : grid_or(cv.s, {0.0, 0.5, 1.0, 2.0, 4.0}))
      for (double t : grid_or(cv.t, {0.0, 0.5, 1.0, 2.0, 4.0}))
        for (double j : grid_or(cv.j, {0.0, 1.0, 2.0})) {
          char buf[128];
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s, t, j, b(s, t, j));
          csv += buf;
        }
  } else {
    const hysim::KLLFn b = hysim::KLLFn::from_expr(cv.kll);
    const hysim::KLFn bt = hysim::kll_to_kl(b);
    csv = "s,z,beta_tilde\n";
    for (double s : grid_or(cv.s, {0.0, 0.5, 1.0, 2.0, 4.0}))
      for (double z : grid_or(cv.z, {0.0, 0.5, 1.0, 2.0, 4.0})) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s, z, bt(s, z));
        csv += buf;
      }
  }
  const fs::path p = out_file(a, "convert.csv");
  hysim::write_text_file(p.string(), csv);
  std::cout << "convert: wrote " << p.string() << "\n";
  return kExitOk;
}

int cmd_demo_bad_example(const CommonArgs& a) {
  hysim::BadExampleDemoOptions opts;
  if (a.seed) opts.seed = *a.seed;
  if (a.tol) opts.cert_tol = *a.tol;
  if (a.trials) {
    opts.practical_trials = *a.trials;
    opts.local_trials = *a.trials;
  }
  const hysim::BadExampleDemoResult res = hysim::run_bad_example_demo(opts);

  const hysim::HybridSystem sys = hysim::bad_example();
  hysim::write_trajectory_csv(res.unforced_sol, sys.indicator(),
                              out_file(a, "demo_bad_example_x2_u0.csv").string());

  json grid = json::array();
  for (const auto& e : res.ugas_grid) {
    json g;
    g["C"] = e.C;
    g["lambda"] = e.lambda;
    g["violated"] = e.violated;
    g["max_residual"] = e.max_residual;
    g["witness_t"] = e.witness.t;
    g["witness_j"] = e.witness.j;
    grid.push_back(g);
  }
  json summary;
  summary["x_at_100"] = res.x_at_100;
  summary["x100_in_bounds"] = res.x100_in_bounds;
  summary["ugas_candidates"] = res.ugas_grid.size();
  summary["ugas_violated"] = res.ugas_violated;
  summary["ugas_min_max_residual"] = res.ugas_min_max_residual;
  summary["pointwise_max_residual"] =
      std::max(res.pointwise.max_flow_residual, res.pointwise.max_jump_residual);
  summary["pointwise_violated"] = res.pointwise.violated;
  summary["practical_violation_found"] = res.practical.violation_found;
  summary["practical_best_residual"] = res.practical.best.max_residual;
  summary["local_violated"] = res.local.violated;
  summary["local_max_residual"] = res.local.max_residual;
  summary["local_max_abs_x"] = res.local_max_abs_x;
  summary["r_star"] = res.r_star;
  summary["seed"] = opts.seed;

  write_json(out_file(a, "demo_0ugas_grid.json"), grid);
  write_json(out_file(a, "demo_pointwise.json"), hysim::pointwise_report_json(res.pointwise));
  write_json(out_file(a, "demo_practical_falsification.json"),
             hysim::falsification_report_json(res.practical));
  write_json(out_file(a, "demo_local_check.json"), hysim::check_report_json(res.local));
  write_json(out_file(a, "demo_bad_example_summary.json"), summary);

  std::cout << "bad-example demo (seed " << opts.seed << ")\n"
            << "  x(100) from x0=2, u=0:    " << res.x_at_100 << "  (expected in [1.00497, 1.00991]: "
            << (res.x100_in_bounds ? "yes" : "NO") << ")\n"
            << "  0-UGAS grid:              " << res.ugas_violated << "/" << res.ugas_grid.size()
            << " candidates violated, min max-residual " << res.ugas_min_max_residual << "  ["
            << res.elapsed_ugas_s << " s]\n"
            << "  pointwise dissipation:    max residual "
            << std::max(res.pointwise.max_flow_residual, res.pointwise.max_jump_residual)
            << (res.pointwise.violated ? "  VIOLATED" : "  pass") << "  ["
            << res.elapsed_pointwise_s << " s]\n"
            << "  practical iISS (p=1):     "
            << (res.practical.violation_found ? "VIOLATED" : "pass") << ", best residual "
            << res.practical.best.max_residual << "  [" << res.elapsed_practical_s << " s]\n"
            << "  local iISS (l=0.5):       " << (res.local.violated ? "VIOLATED" : "pass")
            << ", max residual " << res.local.max_residual << ", max |x| "
            << res.local_max_abs_x << " (r* = " << res.r_star << ")  ["
            << res.elapsed_local_s << " s]\n";
  return kExitOk;
}

int cmd_demo_jump(const CommonArgs& a) {
  const hysim::JumpDemoResult res = hysim::run_jump_demo();
  const hysim::HybridSystem sys = hysim::decay_jump_demo();
  hysim::write_trajectory_csv(res.sol, sys.indicator(),
                              out_file(a, "demo_jump.csv").string());
  write_json(out_file(a, "demo_jump_stats.json"), hysim::sim_stats_json(res.sol));
  std::cout << "jump demo: " << res.sol.arc.domain().num_phases() << " phases, jumps at t =";
  for (double t : res.jump_flow_times) std::cout << " " << t;
  std::cout << "  (inter-jump flow time ln 2 = 0.693147...)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid system simulation and stability-estimate checking"};
  app.require_subcommand(1);

  CommonArgs a;
  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    if (needs_scenario)
      cmd->add_option("--scenario", a.scenario_path, "scenario file")->required();
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--seed", a.seed, "seed for all randomness");
    cmd->add_option("--tol", a.tol, "residual tolerance override");
    cmd->add_option("--priority", a.priority, "jump|flow");
    cmd->add_option("--trials", a.trials, "falsifier trial count override");
    cmd->add_option("--horizon-t", a.horizon_t, "flow horizon override");
    cmd->add_option("--horizon-j", a.horizon_j, "jump horizon override");
  };

  auto* c_sim = app.add_subcommand("simulate", "simulate a scenario; write CSV + stats");
  add_common(c_sim, true);
  auto* c_check = app.add_subcommand("check", "simulate and check estimates");
  add_common(c_check, true);
  auto* c_fals = app.add_subcommand("falsify", "randomized falsification of estimates");
  add_common(c_fals, true);
  auto* c_conv = app.add_subcommand("convert", "tabulate KL<->KLL conversions");
  add_common(c_conv, true);
  auto* c_demo = app.add_subcommand("demo-bad-example", "reproduce the counterexample study");
  add_common(c_demo, false);
  auto* c_jump = app.add_subcommand("demo-jump", "simulate the decay-jump system");
  add_common(c_jump, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(a);
    if (c_check->parsed()) return cmd_check(a);
    if (c_fals->parsed()) return cmd_falsify(a);
    if (c_conv->parsed()) return cmd_convert(a);
    if (c_demo->parsed()) return cmd_demo_bad_example(a);
    if (c_jump->parsed()) return cmd_demo_jump(a);
  } catch (const hysim::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hysim::ParseError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
