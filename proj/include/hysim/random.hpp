#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "hysim/hybrid_time.hpp"

namespace hysim {

/// splitmix64 generator. Deliberately not std::mt19937: identical streams
/// on every platform and standard library, which the determinism contract
/// relies on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  Eigen::VectorXd uniform_vector(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

 private:
  std::uint64_t state_;
};

/// Random piecewise-constant input: switch count in [min_switches,
/// max_switches], switch offsets in (0, horizon), levels in the box.
InputSpec sample_input_spec(Rng& rng, const Eigen::VectorXd& level_lo,
                            const Eigen::VectorXd& level_hi, int min_switches, int max_switches,
                            double horizon);

}  // namespace hysim
