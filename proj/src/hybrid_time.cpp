#include "hysim/hybrid_time.hpp"

#include <algorithm>
#include <cmath>

namespace hysim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

HybridTimeDomain::HybridTimeDomain(std::vector<Phase> phases, bool complete)
    : phases_(std::move(phases)), complete_(complete) {
  validate_domain(*this);
}

HybridTimeDomain HybridTimeDomain::single_interval(double t_end) {
  return HybridTimeDomain({{0.0, t_end}});
}

bool HybridTimeDomain::contains(const HybridPoint& p) const {
  if (p.j < 0 || p.j >= num_phases()) return false;
  const Phase& ph = phases_[static_cast<std::size_t>(p.j)];
  return p.t >= ph.t_start && p.t <= ph.t_end;
}

HybridPoint HybridTimeDomain::terminal() const {
  if (phases_.empty()) return {0.0, 0};
  return {phases_.back().t_end, num_phases() - 1};
}

void validate_domain(const HybridTimeDomain& d) {
  if (d.num_phases() == 0) throw HybridTimeError("domain has no phases");
  if (d.phase(0).t_start != 0.0) throw HybridTimeError("domain must start at t = 0");
  for (int j = 0; j < d.num_phases(); ++j) {
    const auto& ph = d.phase(j);
    if (!(ph.t_start <= ph.t_end) || !std::isfinite(ph.t_start) || !std::isfinite(ph.t_end))
      throw HybridTimeError("phase " + std::to_string(j) + " has invalid interval");
    if (j > 0 && d.phase(j - 1).t_end != ph.t_start)
      throw HybridTimeError("phase " + std::to_string(j) +
                            " does not start where the previous phase ends");
  }
}

bool domain_is_valid(const HybridTimeDomain& d) {
  try {
    validate_domain(d);
    return true;
  } catch (const HybridTimeError&) {
    return false;
  }
}

double sup_t(const HybridTimeDomain& d) {
  if (d.complete_flag()) return kInf;
  return d.num_phases() == 0 ? 0.0 : d.phase(d.num_phases() - 1).t_end;
}

double sup_j(const HybridTimeDomain& d) {
  if (d.complete_flag()) return kInf;
  return d.num_phases() == 0 ? 0.0 : d.num_phases() - 1;
}

double length(const HybridTimeDomain& d) { return sup_t(d) + sup_j(d); }

int index_at(const HybridTimeDomain& d, double s) {
  if (s > sup_t(d))
    throw HybridTimeError("index_at: s = " + std::to_string(s) + " beyond sup_t = " +
                          std::to_string(sup_t(d)));
  int best = -1;
  for (int j = 0; j < d.num_phases(); ++j) {
    const auto& ph = d.phase(j);
    if (s >= ph.t_start && s <= ph.t_end) best = j;
  }
  if (best < 0) throw HybridTimeError("index_at: s not in domain");
  return best;
}

std::vector<HybridPoint> jump_times(const HybridTimeDomain& d) {
  std::vector<HybridPoint> out;
  for (int j = 0; j + 1 < d.num_phases(); ++j) out.push_back({d.phase(j).t_end, j});
  return out;
}

std::vector<HybridPoint> slice_window(const HybridTimeDomain& d, double r) {
  const double len = length(d);
  if (r < 1.0 || !(r < len + 1.0))
    throw HybridTimeError("slice_window: r = " + std::to_string(r) +
                          " outside [1, length + 1)");
  std::vector<HybridPoint> out;
  for (int j = 0; j < d.num_phases(); ++j) {
    const auto& ph = d.phase(j);
    const double lo = std::max(ph.t_start, r - 1.0 - j);
    const double hi = std::min(ph.t_end, r - j);
    if (lo > hi) continue;
    out.push_back({lo, j});
    if (hi > lo) out.push_back({hi, j});
  }
  return out;
}

HybridArc::HybridArc(HybridTimeDomain domain, int state_dim)
    : domain_(std::move(domain)), n_(state_dim) {
  data_.resize(static_cast<std::size_t>(domain_.num_phases()));
}

void HybridArc::append_sample(int j, double t, const Eigen::VectorXd& x) {
  auto& pd = data_.at(static_cast<std::size_t>(j));
  if (x.size() != n_) throw HybridTimeError("arc sample has wrong dimension");
  if (!pd.times.empty() && t < pd.times.back())
    throw HybridTimeError("arc samples must be time-sorted");
  pd.times.push_back(t);
  pd.states.insert(pd.states.end(), x.data(), x.data() + n_);
}

int HybridArc::num_samples(int j) const {
  return static_cast<int>(data_.at(static_cast<std::size_t>(j)).times.size());
}

double HybridArc::sample_time(int j, int k) const {
  return data_.at(static_cast<std::size_t>(j)).times.at(static_cast<std::size_t>(k));
}

Eigen::VectorXd HybridArc::sample_state(int j, int k) const {
  const auto& pd = data_.at(static_cast<std::size_t>(j));
  return Eigen::Map<const Eigen::VectorXd>(pd.states.data() + static_cast<std::size_t>(k) * n_,
                                           n_);
}

Eigen::VectorXd HybridArc::value(const HybridPoint& p) const {
  if (!domain_.contains(p)) throw HybridTimeError("arc evaluated outside its domain");
  const auto& pd = data_.at(static_cast<std::size_t>(p.j));
  if (pd.times.empty()) throw HybridTimeError("arc phase has no samples");
  auto it = std::lower_bound(pd.times.begin(), pd.times.end(), p.t);
  if (it == pd.times.end()) return sample_state(p.j, static_cast<int>(pd.times.size()) - 1);
  const int hi = static_cast<int>(it - pd.times.begin());
  if (hi == 0 || pd.times[static_cast<std::size_t>(hi)] == p.t) return sample_state(p.j, hi);
  const int lo = hi - 1;
  const double t0 = pd.times[static_cast<std::size_t>(lo)];
  const double t1 = pd.times[static_cast<std::size_t>(hi)];
  const double w = t1 > t0 ? (p.t - t0) / (t1 - t0) : 0.0;
  return (1.0 - w) * sample_state(p.j, lo) + w * sample_state(p.j, hi);
}

void validate_arc(const HybridArc& arc) {
  validate_domain(arc.domain());
  for (int j = 0; j < arc.domain().num_phases(); ++j) {
    const auto& ph = arc.domain().phase(j);
    if (arc.num_samples(j) == 0)
      throw HybridTimeError("arc phase " + std::to_string(j) + " has no samples");
    if (arc.sample_time(j, 0) != ph.t_start ||
        arc.sample_time(j, arc.num_samples(j) - 1) != ph.t_end)
      throw HybridTimeError("arc phase " + std::to_string(j) +
                            " samples do not span the phase interval");
    for (int k = 1; k < arc.num_samples(j); ++k)
      if (arc.sample_time(j, k) < arc.sample_time(j, k - 1))
        throw HybridTimeError("arc samples out of order");
  }
}

namespace {

void normalize_schedule(HybridInput::PhaseSchedule& s, double phase_len) {
  if (s.levels.empty()) throw HybridTimeError("input phase schedule needs at least one level");
  if (s.switch_offsets.size() + 1 != s.levels.size())
    throw HybridTimeError("input schedule: levels must be one longer than switch offsets");
  for (std::size_t i = 0; i < s.switch_offsets.size(); ++i) {
    if (i > 0 && s.switch_offsets[i] < s.switch_offsets[i - 1])
      throw HybridTimeError("input switch offsets must be ascending");
    if (s.switch_offsets[i] < 0.0 || s.switch_offsets[i] > phase_len)
      throw HybridTimeError("input switch offset outside phase");
  }
  // Drop leading zero-offset switches (their preceding level never acts).
  while (!s.switch_offsets.empty() && s.switch_offsets.front() == 0.0) {
    s.switch_offsets.erase(s.switch_offsets.begin());
    s.levels.erase(s.levels.begin());
  }
}

}  // namespace

HybridInput::HybridInput(HybridTimeDomain domain, int input_dim)
    : domain_(std::move(domain)), m_(input_dim) {
  phases_.resize(static_cast<std::size_t>(domain_.num_phases()));
  for (auto& p : phases_) p.levels = {Eigen::VectorXd::Zero(m_)};
}

void HybridInput::set_phase_schedule(int j, PhaseSchedule sched) {
  const auto& ph = domain_.phase(j);
  normalize_schedule(sched, ph.t_end - ph.t_start);
  for (const auto& lv : sched.levels)
    if (lv.size() != m_) throw HybridTimeError("input level has wrong dimension");
  phases_.at(static_cast<std::size_t>(j)) = std::move(sched);
}

const HybridInput::PhaseSchedule& HybridInput::schedule(int j) const {
  return phases_.at(static_cast<std::size_t>(j));
}

Eigen::VectorXd HybridInput::value(const HybridPoint& p) const {
  if (!domain_.contains(p)) throw HybridTimeError("input evaluated outside its domain");
  const auto& sched = phases_[static_cast<std::size_t>(p.j)];
  const double offset = p.t - domain_.phase(p.j).t_start;
  std::size_t k = 0;
  while (k < sched.switch_offsets.size() && offset >= sched.switch_offsets[k]) ++k;
  return sched.levels[k];
}

Eigen::VectorXd HybridInput::value_at_jump(int j) const {
  const auto& sched = phases_.at(static_cast<std::size_t>(j));
  if (sched.jump_value) return *sched.jump_value;
  return sched.levels.back();
}

bool HybridInput::identically_zero(double tol) const {
  for (const auto& sched : phases_) {
    for (const auto& lv : sched.levels)
      if (lv.size() > 0 && lv.lpNorm<Eigen::Infinity>() > tol) return false;
    if (sched.jump_value && sched.jump_value->size() > 0 &&
        sched.jump_value->lpNorm<Eigen::Infinity>() > tol)
      return false;
  }
  return true;
}

HybridInput HybridInput::zero(const HybridTimeDomain& domain, int input_dim) {
  return HybridInput(domain, input_dim);
}

void validate_input(const HybridInput& u) {
  validate_domain(u.domain());
  for (int j = 0; j < u.domain().num_phases(); ++j) {
    const auto& sched = u.schedule(j);
    if (sched.levels.empty())
      throw HybridTimeError("input phase " + std::to_string(j) + " has no levels");
    if (sched.switch_offsets.size() + 1 != sched.levels.size())
      throw HybridTimeError("input phase " + std::to_string(j) + " schedule malformed");
  }
}

HybridInput concat_inputs(const HybridInput& u, const HybridInput& u2, const HybridPoint& at) {
  const HybridPoint term = u.domain().terminal();
  if (at.t != term.t || at.j != term.j)
    throw HybridTimeError("concat_inputs: `at` is not the terminal point of u");
  if (u.input_dim() != u2.input_dim())
    throw HybridTimeError("concat_inputs: input dimensions differ");

  const double t_shift = at.t;
  const int j_shift = at.j;

  std::vector<HybridTimeDomain::Phase> phases;
  for (int j = 0; j < u.domain().num_phases(); ++j) phases.push_back(u.domain().phase(j));
  // u2 phase 0 extends u's final phase as continued flow.
  const auto& p20 = u2.domain().phase(0);
  phases.back().t_end = t_shift + (p20.t_end - p20.t_start);
  for (int j = 1; j < u2.domain().num_phases(); ++j) {
    const auto& ph = u2.domain().phase(j);
    phases.push_back({t_shift + ph.t_start, t_shift + ph.t_end});
  }
  HybridInput out(HybridTimeDomain(std::move(phases)), u.input_dim());

  for (int j = 0; j < u.domain().num_phases() - 1; ++j)
    out.set_phase_schedule(j, u.schedule(j));

  // Merged phase: u's final-phase schedule, then u2's phase 0 shifted.
  {
    HybridInput::PhaseSchedule merged = u.schedule(at.j);
    const double u_seg = at.t - u.domain().phase(at.j).t_start;
    const auto& s2 = u2.schedule(0);
    merged.switch_offsets.push_back(u_seg);
    merged.levels.push_back(s2.levels.front());
    for (std::size_t k = 0; k < s2.switch_offsets.size(); ++k) {
      merged.switch_offsets.push_back(u_seg + s2.switch_offsets[k]);
      merged.levels.push_back(s2.levels[k + 1]);
    }
    merged.jump_value = s2.jump_value ? s2.jump_value : std::optional<Eigen::VectorXd>{};
    if (!merged.jump_value) merged.jump_value = s2.levels.back();
    out.set_phase_schedule(at.j, std::move(merged));
  }

  for (int j = 1; j < u2.domain().num_phases(); ++j)
    out.set_phase_schedule(j_shift + j, u2.schedule(j));
  return out;
}

InputSpec InputSpec::zero(int input_dim) {
  InputSpec spec;
  spec.m = input_dim;
  spec.phases.push_back({{}, {Eigen::VectorXd::Zero(input_dim)}, {}});
  return spec;
}

InputSpec InputSpec::constant(const Eigen::VectorXd& level) {
  InputSpec spec;
  spec.m = static_cast<int>(level.size());
  spec.phases.push_back({{}, {level}, {}});
  return spec;
}

const HybridInput::PhaseSchedule& InputSpec::phase(int j) const {
  if (phases.empty()) throw HybridTimeError("input spec has no phases");
  const std::size_t idx =
      std::min(static_cast<std::size_t>(std::max(j, 0)), phases.size() - 1);
  return phases[idx];
}

Eigen::VectorXd InputSpec::value(int j, double offset) const {
  const auto& sched = phase(j);
  std::size_t k = 0;
  while (k < sched.switch_offsets.size() && offset >= sched.switch_offsets[k]) ++k;
  return sched.levels[k];
}

double InputSpec::next_switch_after(int j, double offset) const {
  const auto& sched = phase(j);
  for (double sw : sched.switch_offsets)
    if (sw > offset) return sw;
  return std::numeric_limits<double>::infinity();
}

}  // namespace hysim
