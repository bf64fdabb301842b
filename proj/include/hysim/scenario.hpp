#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hysim/falsifier.hpp"
#include "hysim/stability.hpp"

namespace hysim {

/// Scenario parse failure with 1-based line and column.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& msg, int line, int col)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_, col_;
};

/// Parsed scenario file: key-value blocks with nested lists. Expressions
/// are quoted strings in the module grammar; all randomness flows from the
/// falsifier seed (default 0, never wall clock).
struct Scenario {
  std::optional<SystemSpec> system;
  std::optional<ProperIndicator> indicator;

  SimOptions sim;
  Eigen::VectorXd x0;
  InputSpec input;  // defaults to zero input once the system is known

  std::vector<std::pair<std::string, EstimateSpec>> estimates;

  SamplerConfig sampler;
  bool has_sampler = false;

  struct Convert {
    std::string kl;   // exactly one of kl/kll set
    std::string kll;
    std::vector<double> s, t, j, z;
  };
  std::optional<Convert> convert;

  std::string output_dir;

  /// make_system over the parsed blocks; throws if system/indicator absent.
  HybridSystem build_system() const;
};

Scenario parse_scenario(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

/// Replayable scenario snippet for a falsification witness.
std::string witness_scenario_snippet(const Scenario& base, const Witness& w,
                                     std::uint64_t seed);

}  // namespace hysim
