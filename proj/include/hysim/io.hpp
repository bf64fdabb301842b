#pragma once

#include <string>

#include <json.hpp>

#include "hysim/falsifier.hpp"
#include "hysim/stability.hpp"

namespace hysim {

/// Trajectory CSV, one row per stored sample:
///   t, j, x_1..x_n, u_1..u_m, omega
/// with jump rows duplicated at (t, j) and (t, j+1). Values are written
/// with round-trip precision.
void write_trajectory_csv(const SolutionPair& sol, const ProperIndicator& omega,
                          const std::string& path);

struct LoadedTrajectory {
  HybridArc arc;
  HybridInput input;
};

/// Reloads a trajectory CSV into signals on a reconstructed domain. The
/// input schedule is recovered as piecewise-constant between rows where
/// the level changes.
LoadedTrajectory read_trajectory_csv(const std::string& path, int n, int m);

nlohmann::json sim_stats_json(const SolutionPair& sol);
nlohmann::json check_report_json(const CheckReport& rep);
nlohmann::json pointwise_report_json(const PointwiseReport& rep);
nlohmann::json falsification_report_json(const FalsificationReport& rep);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace hysim
