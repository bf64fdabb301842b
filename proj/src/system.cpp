#include "hysim/system.hpp"

#include <algorithm>
#include <cmath>

#include "hysim/expression.hpp"

namespace hysim {

ProperIndicator ProperIndicator::point(const Eigen::VectorXd& at) {
  ProperIndicator ind;
  ind.lo_ = at;
  ind.hi_ = at;
  ind.repr_ = "point";
  return ind;
}

ProperIndicator ProperIndicator::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw SystemError("indicator box: lo/hi dimensions inconsistent");
  if ((lo.array() > hi.array()).any()) throw SystemError("indicator box: lo > hi");
  ProperIndicator ind;
  ind.lo_ = lo;
  ind.hi_ = hi;
  ind.repr_ = "box";
  return ind;
}

ProperIndicator ProperIndicator::interval(double lo, double hi) {
  Eigen::VectorXd l(1), h(1);
  l << lo;
  h << hi;
  ProperIndicator ind = box(l, h);
  ind.repr_ = "interval[" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
  return ind;
}

double ProperIndicator::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != lo_.size()) throw SystemError("indicator: state dimension mismatch");
  double sq = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double below = lo_[i] - x[i];
    const double above = x[i] - hi_[i];
    const double d = std::max({below, above, 0.0});
    sq += d * d;
  }
  return std::sqrt(sq);
}

HybridSystem::HybridSystem(int n, int m, ScalarField flow_guard, ScalarField jump_guard,
                           VectorField flow, VectorField jump, ProperIndicator indicator,
                           SystemSpec spec)
    : n_(n),
      m_(m),
      flow_guard_(std::move(flow_guard)),
      jump_guard_(std::move(jump_guard)),
      flow_(std::move(flow)),
      jump_(std::move(jump)),
      indicator_(std::move(indicator)),
      spec_(std::move(spec)) {
  if (n_ <= 0 || m_ < 0) throw SystemError("system dimensions must satisfy n >= 1, m >= 0");
  if (indicator_.dim() != n_) throw SystemError("indicator dimension does not match n");
}

void HybridSystem::check_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (x.size() != n_ || u.size() != m_)
    throw SystemError("state/input dimension mismatch (expected n = " + std::to_string(n_) +
                      ", m = " + std::to_string(m_) + ")");
}

double HybridSystem::flow_guard(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  check_dims(x, u);
  return flow_guard_(x, u);
}

double HybridSystem::jump_guard(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  check_dims(x, u);
  return jump_guard_(x, u);
}

void HybridSystem::eval_flow(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             Eigen::VectorXd& out) const {
  check_dims(x, u);
  out.resize(n_);
  flow_(x, u, out);
}

void HybridSystem::eval_jump(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             Eigen::VectorXd& out) const {
  check_dims(x, u);
  out.resize(n_);
  jump_(x, u, out);
}

Eigen::VectorXd HybridSystem::eval_flow(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u) const {
  Eigen::VectorXd out;
  eval_flow(x, u, out);
  return out;
}

Eigen::VectorXd HybridSystem::eval_jump(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u) const {
  Eigen::VectorXd out;
  eval_jump(x, u, out);
  return out;
}

namespace {

std::vector<std::string> state_input_vars(int n, int m) {
  std::vector<std::string> vars;
  for (int i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
  for (int i = 1; i <= m; ++i) vars.push_back("u" + std::to_string(i));
  return vars;
}

CompiledExpr compile_field(const std::string& text, const std::vector<std::string>& vars,
                           const std::string& what) {
  try {
    return CompiledExpr::compile(parse_expression(text), vars);
  } catch (const ParseError& e) {
    throw SystemError(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw SystemError(what + ": " + e.what());
  }
}

// Shared scratch for packing (x, u) into the expression variable slots.
thread_local std::vector<double> g_field_scratch;

void pack(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  g_field_scratch.resize(static_cast<std::size_t>(x.size() + u.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) g_field_scratch[static_cast<std::size_t>(i)] = x[i];
  for (Eigen::Index i = 0; i < u.size(); ++i)
    g_field_scratch[static_cast<std::size_t>(x.size() + i)] = u[i];
}

}  // namespace

HybridSystem make_system(const SystemSpec& spec, ProperIndicator indicator) {
  if (spec.n <= 0) throw SystemError("system block: n must be >= 1");
  if (spec.m < 0) throw SystemError("system block: m must be >= 0");
  if (static_cast<int>(spec.flow.size()) != spec.n)
    throw SystemError("system block: flow has " + std::to_string(spec.flow.size()) +
                      " components, expected n = " + std::to_string(spec.n));
  if (!spec.jump.empty() && static_cast<int>(spec.jump.size()) != spec.n)
    throw SystemError("system block: jump has " + std::to_string(spec.jump.size()) +
                      " components, expected n = " + std::to_string(spec.n));
  const auto vars = state_input_vars(spec.n, spec.m);

  std::vector<CompiledExpr> flow_exprs, jump_exprs;
  for (int i = 0; i < spec.n; ++i)
    flow_exprs.push_back(
        compile_field(spec.flow[static_cast<std::size_t>(i)], vars, "flow[" + std::to_string(i) + "]"));
  if (spec.jump.empty()) {
    for (int i = 0; i < spec.n; ++i)
      jump_exprs.push_back(compile_field("x" + std::to_string(i + 1), vars, "jump"));
  } else {
    for (int i = 0; i < spec.n; ++i)
      jump_exprs.push_back(compile_field(spec.jump[static_cast<std::size_t>(i)], vars,
                                         "jump[" + std::to_string(i) + "]"));
  }
  CompiledExpr cg = compile_field(spec.flow_guard, vars, "flow_guard");
  CompiledExpr dg = compile_field(spec.jump_guard, vars, "jump_guard");

  auto guard_fn = [](CompiledExpr ce) {
    return [ce = std::move(ce)](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
      pack(x, u);
      return ce.eval(g_field_scratch);
    };
  };
  auto map_fn = [](std::vector<CompiledExpr> ces) {
    return [ces = std::move(ces)](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  Eigen::VectorXd& out) {
      pack(x, u);
      for (std::size_t i = 0; i < ces.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = ces[i].eval(g_field_scratch);
    };
  };

  return HybridSystem(spec.n, spec.m, guard_fn(std::move(cg)), guard_fn(std::move(dg)),
                      map_fn(std::move(flow_exprs)), map_fn(std::move(jump_exprs)),
                      std::move(indicator), spec);
}

double probe_guard_continuity(const HybridSystem& sys, const Eigen::VectorXd& x_lo,
                              const Eigen::VectorXd& x_hi, const Eigen::VectorXd& u_lo,
                              const Eigen::VectorXd& u_hi, int samples_per_dim) {
  // 1-D sweeps along each axis; the ratio of guard difference to parameter
  // step should stay bounded for continuous guards.
  double worst_ratio = 0.0;
  Eigen::VectorXd x = 0.5 * (x_lo + x_hi), u = u_lo.size() > 0
                                                   ? Eigen::VectorXd(0.5 * (u_lo + u_hi))
                                                   : Eigen::VectorXd(0);
  auto sweep = [&](Eigen::VectorXd& v, Eigen::Index i, double lo, double hi) {
    const double h = (hi - lo) / samples_per_dim;
    if (h <= 0.0) return;
    double prev_c = 0.0, prev_d = 0.0;
    for (int k = 0; k <= samples_per_dim; ++k) {
      v[i] = lo + k * h;
      const double c = sys.flow_guard(x, u);
      const double d = sys.jump_guard(x, u);
      if (k > 0) {
        worst_ratio = std::max(worst_ratio, std::fabs(c - prev_c) / h);
        worst_ratio = std::max(worst_ratio, std::fabs(d - prev_d) / h);
      }
      prev_c = c;
      prev_d = d;
    }
    v[i] = 0.5 * (lo + hi);
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) sweep(x, i, x_lo[i], x_hi[i]);
  for (Eigen::Index i = 0; i < u.size(); ++i) sweep(u, i, u_lo[i], u_hi[i]);
  return worst_ratio;
}

HybridSystem bad_example() {
  SystemSpec spec;
  spec.n = 1;
  spec.m = 1;
  spec.flow = {"-x1*(x1 - 1)^2 + u1"};
  spec.jump = {"x1"};
  spec.flow_guard = "-1";
  spec.jump_guard = "1";
  Eigen::VectorXd origin(1);
  origin << 0.0;
  return make_system(spec, ProperIndicator::point(origin));
}

HybridSystem decay_jump_demo() {
  SystemSpec spec;
  spec.n = 1;
  spec.m = 0;
  spec.flow = {"x1"};
  spec.jump = {"x1/2"};
  spec.flow_guard = "x1 - 1";
  spec.jump_guard = "1 - x1";
  Eigen::VectorXd origin(1);
  origin << 0.0;
  return make_system(spec, ProperIndicator::point(origin));
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::horizon_reached:
      return "horizon_reached";
    case Termination::left_C_and_D:
      return "left_C_and_D";
    case Termination::zeno_suspected:
      return "zeno_suspected";
    case Termination::flow_blowup:
      return "flow_blowup";
  }
  return "unknown";
}

}  // namespace hysim
