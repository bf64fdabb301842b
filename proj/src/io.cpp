#include "hysim/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hysim {

namespace {

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double json_safe(double v) {
  // nlohmann::json serializes non-finite numbers as null; keep reports
  // numeric by clamping to huge sentinels.
  if (std::isnan(v)) return 0.0;
  if (std::isinf(v)) return v > 0 ? 1e308 : -1e308;
  return v;
}

}  // namespace

void write_trajectory_csv(const SolutionPair& sol, const ProperIndicator& omega,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const int n = sol.arc.state_dim();
  const int m = sol.input.input_dim();
  out << "t,j";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",omega\n";
  for (int j = 0; j < sol.arc.domain().num_phases(); ++j) {
    for (int k = 0; k < sol.arc.num_samples(j); ++k) {
      const double t = sol.arc.sample_time(j, k);
      const Eigen::VectorXd x = sol.arc.sample_state(j, k);
      const Eigen::VectorXd u = sol.input.value({t, j});
      out << fmt(t) << ',' << j;
      for (int i = 0; i < n; ++i) out << ',' << fmt(x[i]);
      for (int i = 0; i < m; ++i) out << ',' << fmt(u[i]);
      out << ',' << fmt(omega(x)) << '\n';
    }
  }
}

LoadedTrajectory read_trajectory_csv(const std::string& path, int n, int m) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file");

  struct Row {
    double t;
    int j;
    Eigen::VectorXd x, u;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Row r;
    r.x.resize(n);
    r.u.resize(m);
    std::getline(ss, cell, ',');
    r.t = std::stod(cell);
    std::getline(ss, cell, ',');
    r.j = std::stoi(cell);
    for (int i = 0; i < n; ++i) {
      std::getline(ss, cell, ',');
      r.x[i] = std::stod(cell);
    }
    for (int i = 0; i < m; ++i) {
      std::getline(ss, cell, ',');
      r.u[i] = std::stod(cell);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("trajectory file has no samples");

  const int num_phases = rows.back().j + 1;
  std::vector<HybridTimeDomain::Phase> phases(static_cast<std::size_t>(num_phases));
  for (int j = 0; j < num_phases; ++j) {
    bool seen = false;
    for (const auto& r : rows) {
      if (r.j != j) continue;
      if (!seen) {
        phases[static_cast<std::size_t>(j)].t_start = r.t;
        seen = true;
      }
      phases[static_cast<std::size_t>(j)].t_end = r.t;
    }
    if (!seen) throw std::runtime_error("trajectory file misses phase " + std::to_string(j));
  }
  HybridTimeDomain domain(phases);

  LoadedTrajectory out{HybridArc(domain, n), HybridInput(domain, m)};
  for (const auto& r : rows) out.arc.append_sample(r.j, r.t, r.x);

  for (int j = 0; j < num_phases; ++j) {
    HybridInput::PhaseSchedule sched;
    const double t0 = phases[static_cast<std::size_t>(j)].t_start;
    bool first = true;
    Eigen::VectorXd last;
    for (const auto& r : rows) {
      if (r.j != j) continue;
      if (first) {
        sched.levels.push_back(r.u);
        last = r.u;
        first = false;
      } else if ((r.u - last).lpNorm<Eigen::Infinity>() > 0.0) {
        sched.switch_offsets.push_back(r.t - t0);
        sched.levels.push_back(r.u);
        last = r.u;
      }
    }
    out.input.set_phase_schedule(j, std::move(sched));
  }
  return out;
}

nlohmann::json sim_stats_json(const SolutionPair& sol) {
  nlohmann::json j;
  j["termination"] = to_string(sol.termination);
  j["steps"] = sol.stats.steps;
  j["events_located"] = sol.stats.events_located;
  j["max_guard_residual"] = json_safe(sol.stats.max_guard_residual);
  j["priority"] = sol.stats.priority;
  j["phases"] = sol.arc.domain().num_phases();
  j["sup_t"] = json_safe(sup_t(sol.arc.domain()));
  j["sup_j"] = json_safe(sup_j(sol.arc.domain()));
  j["length"] = json_safe(length(sol.arc.domain()));
  return j;
}

namespace {

nlohmann::json sample_json(const ResidualSample& s) {
  nlohmann::json j;
  j["t"] = json_safe(s.t);
  j["j"] = s.j;
  j["lhs"] = json_safe(s.lhs);
  j["rhs"] = json_safe(s.rhs);
  j["residual"] = json_safe(s.residual);
  j["trajectory"] = s.trajectory;
  return j;
}

}  // namespace

nlohmann::json check_report_json(const CheckReport& rep) {
  nlohmann::json j;
  j["kind"] = rep.kind;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : rep.parameters) params[k] = v;
  j["parameters"] = params;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : rep.samples) samples.push_back(sample_json(s));
  j["samples"] = samples;
  j["n_samples"] = rep.n_samples;
  j["max_residual"] = json_safe(rep.max_residual);
  j["violated"] = rep.violated;
  j["check_tol"] = rep.check_tol;
  j["witness"] = sample_json(rep.witness);
  j["skipped_infinite"] = rep.skipped_infinite;
  j["out_of_gate"] = rep.out_of_gate;
  return j;
}

nlohmann::json pointwise_report_json(const PointwiseReport& rep) {
  nlohmann::json j;
  j["kind"] = "pointwise_dissipation";
  j["max_flow_residual"] = json_safe(rep.max_flow_residual);
  j["max_jump_residual"] = json_safe(rep.max_jump_residual);
  j["n_flow_points"] = rep.n_flow_points;
  j["n_jump_points"] = rep.n_jump_points;
  j["violated"] = rep.violated;
  j["check_tol"] = rep.check_tol;
  auto point_json = [](const PointwiseSample& s) {
    nlohmann::json p;
    p["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    p["u"] = std::vector<double>(s.u.data(), s.u.data() + s.u.size());
    p["residual"] = json_safe(s.residual);
    p["stream"] = s.jump_stream ? "jump" : "flow";
    return p;
  };
  if (rep.witness.x.size() > 0) j["witness"] = point_json(rep.witness);
  nlohmann::json worst = nlohmann::json::array();
  for (const auto& s : rep.worst) worst.push_back(point_json(s));
  j["worst"] = worst;
  return j;
}

nlohmann::json falsification_report_json(const FalsificationReport& rep) {
  nlohmann::json j;
  j["violation_found"] = rep.violation_found;
  j["best"] = check_report_json(rep.best);
  j["witness_trial"] = rep.witness_trial;
  j["seed"] = rep.seed;
  j["trials_run"] = rep.trials_run;
  j["trials_failed"] = rep.trials_failed;
  j["note"] = rep.note;
  nlohmann::json w;
  w["x0"] = std::vector<double>(rep.witness.x0.data(),
                                rep.witness.x0.data() + rep.witness.x0.size());
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& ph : rep.witness.input.phases) {
    nlohmann::json p;
    p["switches"] = ph.switch_offsets;
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& level : ph.levels)
      lv.push_back(std::vector<double>(level.data(), level.data() + level.size()));
    p["levels"] = lv;
    phases.push_back(p);
  }
  w["input_phases"] = phases;
  j["witness"] = w;
  j["histogram_edges"] = rep.histogram_edges;
  j["histogram_counts"] = rep.histogram_counts;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hysim
