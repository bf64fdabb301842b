#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hysim {

class HybridTimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point (t, j) of a hybrid time domain: t seconds of flow, j jumps.
struct HybridPoint {
  double t = 0.0;
  int j = 0;
};

/// The paper's ordering: (t1, j1) <= (t2, j2) iff t1 + j1 <= t2 + j2.
/// Distinct points with equal sums are order-equivalent.
inline bool hybrid_leq(const HybridPoint& a, const HybridPoint& b) {
  return a.t + a.j <= b.t + b.j;
}

/// Internal bookkeeping order (by j, then t). Not the paper's ordering.
inline bool lexicographic_leq(const HybridPoint& a, const HybridPoint& b) {
  return a.j != b.j ? a.j < b.j : a.t <= b.t;
}

/// E = union over j of [t_j, t_{j+1}] x {j}. Phases are stored as
/// consecutive intervals; zero-length intervals encode instantaneous
/// multiple jumps. `complete_flag` marks length = inf for unbounded
/// analysis objects; the simulator never produces it.
class HybridTimeDomain {
 public:
  struct Phase {
    double t_start = 0.0;
    double t_end = 0.0;
  };

  HybridTimeDomain() = default;
  explicit HybridTimeDomain(std::vector<Phase> phases, bool complete = false);

  static HybridTimeDomain single_interval(double t_end);

  int num_phases() const { return static_cast<int>(phases_.size()); }
  const Phase& phase(int j) const { return phases_.at(static_cast<std::size_t>(j)); }
  bool complete_flag() const { return complete_; }

  bool contains(const HybridPoint& p) const;
  HybridPoint terminal() const;

 private:
  std::vector<Phase> phases_;
  bool complete_ = false;
};

/// Checks phase consistency: t_start(0) = 0, t_start <= t_end, matching
/// endpoints between consecutive phases. Throws HybridTimeError on the
/// first violation.
void validate_domain(const HybridTimeDomain& d);
bool domain_is_valid(const HybridTimeDomain& d);

double sup_t(const HybridTimeDomain& d);   // +inf when complete
double sup_j(const HybridTimeDomain& d);
double length(const HybridTimeDomain& d);  // sup_t + sup_j

/// i(s) = max{i : (s, i) in dom}. Throws HybridTimeError if s > sup_t.
int index_at(const HybridTimeDomain& d, double s);

/// Gamma(v): all (t_end(j), j) such that phase j+1 exists.
std::vector<HybridPoint> jump_times(const HybridTimeDomain& d);

/// S(r) = {(t, j) in dom : t + j in [r-1, r]}, returned as the endpoint
/// samples of each per-phase subinterval. Nonempty for every
/// r in [1, length + 1). Throws HybridTimeError outside that range.
std::vector<HybridPoint> slice_window(const HybridTimeDomain& d, double r);

/// State trajectory: per phase, a time-stamped polyline; evaluation
/// between samples is linear interpolation.
class HybridArc {
 public:
  HybridArc() = default;
  HybridArc(HybridTimeDomain domain, int state_dim);

  /// Appends a sample to phase j; times must be nondecreasing within the
  /// phase and lie in its interval.
  void append_sample(int j, double t, const Eigen::VectorXd& x);

  const HybridTimeDomain& domain() const { return domain_; }
  int state_dim() const { return n_; }

  Eigen::VectorXd value(const HybridPoint& p) const;
  int num_samples(int j) const;
  double sample_time(int j, int k) const;
  Eigen::VectorXd sample_state(int j, int k) const;

 private:
  struct PhaseData {
    std::vector<double> times;
    std::vector<double> states;  // flattened, stride n
  };
  HybridTimeDomain domain_;
  std::vector<PhaseData> data_;
  int n_ = 0;
};

/// Throws if a phase polyline does not span its interval or is not
/// time-sorted.
void validate_arc(const HybridArc& arc);

/// Input signal: piecewise-constant level schedule per phase plus the
/// value at each jump instant (needed exactly by the Gamma-sums in the
/// energy functional).
class HybridInput {
 public:
  struct PhaseSchedule {
    // switch_offsets are measured from the phase start, strictly
    // increasing, inside (0, phase length); levels has one more entry.
    std::vector<double> switch_offsets;
    std::vector<Eigen::VectorXd> levels;
    std::optional<Eigen::VectorXd> jump_value;  // defaults to the last level
  };

  HybridInput() = default;
  HybridInput(HybridTimeDomain domain, int input_dim);

  void set_phase_schedule(int j, PhaseSchedule sched);

  const HybridTimeDomain& domain() const { return domain_; }
  int input_dim() const { return m_; }

  Eigen::VectorXd value(const HybridPoint& p) const;
  /// Value entering the jump sum at (t_end(j), j).
  Eigen::VectorXd value_at_jump(int j) const;
  const PhaseSchedule& schedule(int j) const;

  bool identically_zero(double tol = 0.0) const;

  static HybridInput zero(const HybridTimeDomain& domain, int input_dim);

 private:
  HybridTimeDomain domain_;
  std::vector<PhaseSchedule> phases_;
  int m_ = 0;
};

void validate_input(const HybridInput& u);

/// u # u2: u up to its terminal point `at`, then u2 time/jump-shifted.
/// Throws HybridTimeError if `at` is not u's terminal point.
HybridInput concat_inputs(const HybridInput& u, const HybridInput& u2, const HybridPoint& at);

/// Input generator for the simulator and samplers: per-phase
/// piecewise-constant schedules with offsets relative to each phase
/// start; phase j beyond the spec reuses the last entry.
struct InputSpec {
  int m = 0;
  std::vector<HybridInput::PhaseSchedule> phases;

  static InputSpec zero(int input_dim);
  static InputSpec constant(const Eigen::VectorXd& level);

  const HybridInput::PhaseSchedule& phase(int j) const;
  Eigen::VectorXd value(int j, double offset) const;
  /// Next switch strictly after `offset` in phase j, or +inf.
  double next_switch_after(int j, double offset) const;
};

}  // namespace hysim
