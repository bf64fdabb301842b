#include "hysim/random.hpp"

#include <algorithm>

namespace hysim {

InputSpec sample_input_spec(Rng& rng, const Eigen::VectorXd& level_lo,
                            const Eigen::VectorXd& level_hi, int min_switches, int max_switches,
                            double horizon) {
  InputSpec spec;
  spec.m = static_cast<int>(level_lo.size());
  HybridInput::PhaseSchedule sched;
  const int k = rng.uniform_int(min_switches, max_switches);
  for (int i = 0; i < k; ++i) sched.switch_offsets.push_back(rng.uniform(0.0, horizon));
  std::sort(sched.switch_offsets.begin(), sched.switch_offsets.end());
  for (int i = 0; i <= k; ++i) sched.levels.push_back(rng.uniform_vector(level_lo, level_hi));
  spec.phases.push_back(std::move(sched));
  return spec;
}

}  // namespace hysim
