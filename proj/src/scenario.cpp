#include "hysim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

namespace hysim {

namespace {

struct Value {
  enum class Kind { Number, String, Ident, List };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string text;
  std::vector<Value> list;
  int line = 0, col = 0;
};

struct KeyValue {
  std::string key;
  Value value;
  int line = 0, col = 0;
};

struct Block {
  std::string name;
  std::string label;  // optional, e.g. estimate <label> { ... }
  std::vector<KeyValue> entries;
  int line = 0, col = 0;
};

struct Cursor {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1, col = 1;

  bool eof() const { return pos >= src.size(); }
  char peek() const { return eof() ? '\0' : src[pos]; }
  char get() {
    char c = src[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }
  void skip_ws_and_comments() {
    for (;;) {
      while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n'))
        get();
      if (!eof() && peek() == '#') {
        while (!eof() && peek() != '\n') get();
        continue;
      }
      return;
    }
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ScenarioError(msg, line, col); }
};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string read_ident(Cursor& c) {
  c.skip_ws_and_comments();
  if (!std::isalpha(static_cast<unsigned char>(c.peek())) && c.peek() != '_')
    c.fail("expected identifier");
  std::string out;
  while (!c.eof() && ident_char(c.peek())) out += c.get();
  return out;
}

Value read_value(Cursor& c);

Value read_list(Cursor& c) {
  Value v;
  v.kind = Value::Kind::List;
  v.line = c.line;
  v.col = c.col;
  c.get();  // '['
  c.skip_ws_and_comments();
  if (c.peek() == ']') {
    c.get();
    return v;
  }
  for (;;) {
    v.list.push_back(read_value(c));
    c.skip_ws_and_comments();
    if (c.peek() == ',') {
      c.get();
      continue;
    }
    if (c.peek() == ']') {
      c.get();
      return v;
    }
    c.fail("expected ',' or ']' in list");
  }
}

Value read_value(Cursor& c) {
  c.skip_ws_and_comments();
  Value v;
  v.line = c.line;
  v.col = c.col;
  const char p = c.peek();
  if (p == '[') return read_list(c);
  if (p == '"') {
    c.get();
    v.kind = Value::Kind::String;
    while (!c.eof() && c.peek() != '"') v.text += c.get();
    if (c.eof()) c.fail("unterminated string");
    c.get();
    return v;
  }
  if (std::isdigit(static_cast<unsigned char>(p)) || p == '-' || p == '+' || p == '.') {
    std::string num;
    while (!c.eof() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '.' ||
                        c.peek() == '-' || c.peek() == '+')) {
      const char ch = c.peek();
      if ((ch == '-' || ch == '+') && !num.empty() &&
          !(num.back() == 'e' || num.back() == 'E'))
        break;
      num += c.get();
    }
    double d = 0.0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), d);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size())
      c.fail("malformed number '" + num + "'");
    v.kind = Value::Kind::Number;
    v.number = d;
    return v;
  }
  if (std::isalpha(static_cast<unsigned char>(p)) || p == '_') {
    v.kind = Value::Kind::Ident;
    v.text = read_ident(c);
    return v;
  }
  c.fail("expected value");
}

std::vector<Block> read_blocks(const std::string& text) {
  Cursor c{text};
  std::vector<Block> blocks;
  for (;;) {
    c.skip_ws_and_comments();
    if (c.eof()) return blocks;
    Block b;
    b.line = c.line;
    b.col = c.col;
    b.name = read_ident(c);
    c.skip_ws_and_comments();
    if (c.peek() != '{') {
      b.label = read_ident(c);
      c.skip_ws_and_comments();
    }
    if (c.peek() != '{') c.fail("expected '{' to open block '" + b.name + "'");
    c.get();
    for (;;) {
      c.skip_ws_and_comments();
      if (c.eof()) c.fail("unterminated block '" + b.name + "'");
      if (c.peek() == '}') {
        c.get();
        break;
      }
      KeyValue kv;
      kv.line = c.line;
      kv.col = c.col;
      kv.key = read_ident(c);
      c.skip_ws_and_comments();
      if (c.peek() != '=') c.fail("expected '=' after key '" + kv.key + "'");
      c.get();
      kv.value = read_value(c);
      b.entries.push_back(std::move(kv));
    }
    blocks.push_back(std::move(b));
  }
}

// ---- semantic helpers -----------------------------------------------------

[[noreturn]] void fail_at(const KeyValue& kv, const std::string& msg) {
  throw ScenarioError("key '" + kv.key + "': " + msg, kv.line, kv.col);
}

double as_number(const KeyValue& kv) {
  if (kv.value.kind != Value::Kind::Number) fail_at(kv, "expected a number");
  return kv.value.number;
}

std::string as_string(const KeyValue& kv) {
  if (kv.value.kind != Value::Kind::String) fail_at(kv, "expected a quoted string");
  return kv.value.text;
}

std::string as_ident(const KeyValue& kv) {
  if (kv.value.kind != Value::Kind::Ident) fail_at(kv, "expected an identifier");
  return kv.value.text;
}

std::vector<double> as_number_list(const KeyValue& kv) {
  if (kv.value.kind != Value::Kind::List) fail_at(kv, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& v : kv.value.list) {
    if (v.kind != Value::Kind::Number) fail_at(kv, "expected a list of numbers");
    out.push_back(v.number);
  }
  return out;
}

Eigen::VectorXd as_vector(const KeyValue& kv) {
  const auto nums = as_number_list(kv);
  Eigen::VectorXd v(static_cast<Eigen::Index>(nums.size()));
  for (std::size_t i = 0; i < nums.size(); ++i) v[static_cast<Eigen::Index>(i)] = nums[i];
  return v;
}

std::vector<std::string> as_string_list(const KeyValue& kv) {
  if (kv.value.kind != Value::Kind::List) fail_at(kv, "expected a list of strings");
  std::vector<std::string> out;
  for (const auto& v : kv.value.list) {
    if (v.kind != Value::Kind::String) fail_at(kv, "expected a list of strings");
    out.push_back(v.text);
  }
  return out;
}

std::vector<Eigen::VectorXd> as_vector_list(const KeyValue& kv) {
  if (kv.value.kind != Value::Kind::List) fail_at(kv, "expected a list of vectors");
  std::vector<Eigen::VectorXd> out;
  for (const auto& v : kv.value.list) {
    if (v.kind != Value::Kind::List) fail_at(kv, "expected nested lists, e.g. [[0], [1]]");
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.list.size()));
    for (std::size_t i = 0; i < v.list.size(); ++i) {
      if (v.list[i].kind != Value::Kind::Number) fail_at(kv, "vector entries must be numbers");
      x[static_cast<Eigen::Index>(i)] = v.list[i].number;
    }
    out.push_back(std::move(x));
  }
  return out;
}

ScalarFn scalar_from(const KeyValue& kv, FnClass cls) {
  try {
    return ScalarFn::from_expr(as_string(kv), cls);
  } catch (const std::exception& e) {
    fail_at(kv, e.what());
  }
}

EstimateKind kind_from(const KeyValue& kv) {
  const std::string k = as_ident(kv);
  if (k == "iiss") return EstimateKind::iISS;
  if (k == "zero_ugas") return EstimateKind::zero_UGAS;
  if (k == "ubebs") return EstimateKind::UBEBS;
  if (k == "ubebs_alpha123") return EstimateKind::UBEBS_alpha123;
  if (k == "ubebs_c0") return EstimateKind::UBEBS_c0;
  if (k == "local_iiss") return EstimateKind::local_iISS;
  if (k == "practical_iiss") return EstimateKind::practical_iISS;
  if (k == "traj_dissipation") return EstimateKind::traj_dissipation;
  if (k == "pointwise_dissipation") return EstimateKind::pointwise_dissipation;
  fail_at(kv, "unknown estimate kind '" + k + "'");
}

void parse_system(const Block& b, Scenario& sc) {
  SystemSpec spec;
  for (const auto& kv : b.entries) {
    if (kv.key == "n")
      spec.n = static_cast<int>(as_number(kv));
    else if (kv.key == "m")
      spec.m = static_cast<int>(as_number(kv));
    else if (kv.key == "flow")
      spec.flow = as_string_list(kv);
    else if (kv.key == "jump")
      spec.jump = as_string_list(kv);
    else if (kv.key == "flow_guard")
      spec.flow_guard = as_string(kv);
    else if (kv.key == "jump_guard")
      spec.jump_guard = as_string(kv);
    else
      fail_at(kv, "unknown key in system block");
  }
  sc.system = std::move(spec);
}

void parse_indicator(const Block& b, Scenario& sc) {
  std::string type;
  Eigen::VectorXd at, lo, hi;
  double ilo = 0.0, ihi = 0.0;
  bool scalar_bounds = false;
  for (const auto& kv : b.entries) {
    if (kv.key == "type")
      type = as_ident(kv);
    else if (kv.key == "at")
      at = as_vector(kv);
    else if (kv.key == "lo") {
      if (kv.value.kind == Value::Kind::Number) {
        ilo = as_number(kv);
        scalar_bounds = true;
      } else {
        lo = as_vector(kv);
      }
    } else if (kv.key == "hi") {
      if (kv.value.kind == Value::Kind::Number) {
        ihi = as_number(kv);
        scalar_bounds = true;
      } else {
        hi = as_vector(kv);
      }
    } else {
      fail_at(kv, "unknown key in indicator block");
    }
  }
  if (type == "point") {
    if (at.size() == 0) throw ScenarioError("indicator point needs 'at'", b.line, b.col);
    sc.indicator = ProperIndicator::point(at);
  } else if (type == "interval") {
    sc.indicator = ProperIndicator::interval(ilo, ihi);
  } else if (type == "box") {
    if (scalar_bounds || lo.size() == 0)
      throw ScenarioError("indicator box needs vector 'lo' and 'hi'", b.line, b.col);
    sc.indicator = ProperIndicator::box(lo, hi);
  } else {
    throw ScenarioError("indicator type must be point, interval or box", b.line, b.col);
  }
}

void parse_simulation(const Block& b, Scenario& sc) {
  for (const auto& kv : b.entries) {
    if (kv.key == "step")
      sc.sim.step = as_number(kv);
    else if (kv.key == "event_tol")
      sc.sim.event_tol = as_number(kv);
    else if (kv.key == "horizon_t")
      sc.sim.horizon_t = as_number(kv);
    else if (kv.key == "horizon_j")
      sc.sim.horizon_j = static_cast<int>(as_number(kv));
    else if (kv.key == "zeno_cap")
      sc.sim.zeno_cap = static_cast<int>(as_number(kv));
    else if (kv.key == "record_stride")
      sc.sim.record_stride = static_cast<int>(as_number(kv));
    else if (kv.key == "priority") {
      const std::string p = as_ident(kv);
      if (p == "jump_first")
        sc.sim.priority = Priority::jump_first;
      else if (p == "flow_first")
        sc.sim.priority = Priority::flow_first;
      else
        fail_at(kv, "priority must be jump_first or flow_first");
    } else if (kv.key == "x0")
      sc.x0 = as_vector(kv);
    else
      fail_at(kv, "unknown key in simulation block");
  }
}

void parse_input(const Block& b, Scenario& sc) {
  std::vector<double> switches;
  std::vector<Eigen::VectorXd> levels;
  bool constant_set = false;
  Eigen::VectorXd constant;
  for (const auto& kv : b.entries) {
    if (kv.key == "constant") {
      constant = as_vector(kv);
      constant_set = true;
    } else if (kv.key == "switches")
      switches = as_number_list(kv);
    else if (kv.key == "levels")
      levels = as_vector_list(kv);
    else
      fail_at(kv, "unknown key in input block");
  }
  if (constant_set) {
    sc.input = InputSpec::constant(constant);
    return;
  }
  if (levels.empty()) throw ScenarioError("input block needs 'constant' or 'levels'", b.line, b.col);
  if (levels.size() != switches.size() + 1)
    throw ScenarioError("input: levels must have one more entry than switches", b.line, b.col);
  InputSpec spec;
  spec.m = static_cast<int>(levels.front().size());
  spec.phases.push_back({switches, levels, {}});
  sc.input = std::move(spec);
}

void parse_estimate(const Block& b, Scenario& sc, int state_dim) {
  EstimateSpec spec;
  GridSpec grid;
  bool have_kind = false;
  for (const auto& kv : b.entries) {
    if (kv.key == "kind") {
      spec.kind = kind_from(kv);
      have_kind = true;
    }
  }
  if (!have_kind) throw ScenarioError("estimate block needs 'kind'", b.line, b.col);

  for (const auto& kv : b.entries) {
    if (kv.key == "kind") continue;
    if (kv.key == "beta") {
      try {
        spec.beta = KLLFn::from_expr(as_string(kv));
      } catch (const std::exception& e) {
        fail_at(kv, e.what());
      }
    } else if (kv.key == "chi")
      spec.chi = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "gamma")
      spec.gamma = scalar_from(kv, FnClass::K);
    else if (kv.key == "alpha")
      spec.alpha = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "kappa")
      spec.kappa = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "alpha1")
      spec.alpha1 = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "alpha2")
      spec.alpha2 = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "alpha3")
      spec.alpha3 = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "alpha1_bar")
      spec.alpha1_bar = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "alpha2_bar")
      spec.alpha2_bar = scalar_from(kv, FnClass::Kinf);
    else if (kv.key == "rho")
      spec.rho = scalar_from(kv, FnClass::PD);
    else if (kv.key == "lambda")
      spec.lambda = scalar_from(kv, FnClass::K);
    else if (kv.key == "gamma_bar")
      spec.gamma_bar = scalar_from(kv, FnClass::K);
    else if (kv.key == "V") {
      try {
        spec.V = StateField::from_expr(as_string(kv), state_dim);
      } catch (const std::exception& e) {
        fail_at(kv, e.what());
      }
    } else if (kv.key == "c")
      spec.c = as_number(kv);
    else if (kv.key == "l")
      spec.l = as_number(kv);
    else if (kv.key == "p")
      spec.p = as_number(kv);
    else if (kv.key == "x_lo")
      grid.x_lo = as_vector(kv);
    else if (kv.key == "x_hi")
      grid.x_hi = as_vector(kv);
    else if (kv.key == "x_points")
      grid.x_points_per_dim = static_cast<int>(as_number(kv));
    else if (kv.key == "u_lo")
      grid.u_lo = as_vector(kv);
    else if (kv.key == "u_hi")
      grid.u_hi = as_vector(kv);
    else if (kv.key == "u_points")
      grid.u_points_per_dim = static_cast<int>(as_number(kv));
    else
      fail_at(kv, "unknown key in estimate block");
  }
  spec.grid = std::move(grid);
  sc.estimates.push_back({b.label.empty() ? "estimate" : b.label, std::move(spec)});
}

void parse_falsifier(const Block& b, Scenario& sc) {
  for (const auto& kv : b.entries) {
    if (kv.key == "x0_lo")
      sc.sampler.x0_lo = as_vector(kv);
    else if (kv.key == "x0_hi")
      sc.sampler.x0_hi = as_vector(kv);
    else if (kv.key == "level_lo")
      sc.sampler.level_lo = as_vector(kv);
    else if (kv.key == "level_hi")
      sc.sampler.level_hi = as_vector(kv);
    else if (kv.key == "min_switches")
      sc.sampler.min_switches = static_cast<int>(as_number(kv));
    else if (kv.key == "max_switches")
      sc.sampler.max_switches = static_cast<int>(as_number(kv));
    else if (kv.key == "trials")
      sc.sampler.trials = static_cast<int>(as_number(kv));
    else if (kv.key == "seed")
      sc.sampler.seed = static_cast<std::uint64_t>(as_number(kv));
    else if (kv.key == "refine_rounds")
      sc.sampler.refine_rounds = static_cast<int>(as_number(kv));
    else if (kv.key == "refine_shrink")
      sc.sampler.refine_shrink = as_number(kv);
    else if (kv.key == "threads")
      sc.sampler.threads = static_cast<int>(as_number(kv));
    else
      fail_at(kv, "unknown key in falsifier block");
  }
  sc.has_sampler = true;
}

void parse_convert(const Block& b, Scenario& sc) {
  Scenario::Convert cv;
  for (const auto& kv : b.entries) {
    if (kv.key == "kl")
      cv.kl = as_string(kv);
    else if (kv.key == "kll")
      cv.kll = as_string(kv);
    else if (kv.key == "s")
      cv.s = as_number_list(kv);
    else if (kv.key == "t")
      cv.t = as_number_list(kv);
    else if (kv.key == "j")
      cv.j = as_number_list(kv);
    else if (kv.key == "z")
      cv.z = as_number_list(kv);
    else
      fail_at(kv, "unknown key in convert block");
  }
  if (cv.kl.empty() == cv.kll.empty())
    throw ScenarioError("convert block needs exactly one of 'kl' or 'kll'", b.line, b.col);
  sc.convert = std::move(cv);
}

void parse_output(const Block& b, Scenario& sc) {
  for (const auto& kv : b.entries) {
    if (kv.key == "dir")
      sc.output_dir = as_string(kv);
    else
      fail_at(kv, "unknown key in output block");
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  const auto blocks = read_blocks(text);
  // system first so estimate V expressions know the dimension
  for (const auto& b : blocks)
    if (b.name == "system") parse_system(b, sc);
  const int n = sc.system ? sc.system->n : 1;
  for (const auto& b : blocks) {
    if (b.name == "system") continue;
    if (b.name == "indicator")
      parse_indicator(b, sc);
    else if (b.name == "simulation")
      parse_simulation(b, sc);
    else if (b.name == "input")
      parse_input(b, sc);
    else if (b.name == "estimate")
      parse_estimate(b, sc, n);
    else if (b.name == "falsifier")
      parse_falsifier(b, sc);
    else if (b.name == "convert")
      parse_convert(b, sc);
    else if (b.name == "output")
      parse_output(b, sc);
    else
      throw ScenarioError("unknown block '" + b.name + "'", b.line, b.col);
  }
  if (sc.system && sc.input.phases.empty()) sc.input = InputSpec::zero(sc.system->m);
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

HybridSystem Scenario::build_system() const {
  if (!system) throw ScenarioError("scenario has no system block", 0, 0);
  if (!indicator) throw ScenarioError("scenario has no indicator block", 0, 0);
  return make_system(*system, *indicator);
}

namespace {

std::string fmt_num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::string fmt_vector(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_num(v[i]);
  }
  return out + "]";
}

}  // namespace

std::string witness_scenario_snippet(const Scenario& base, const Witness& w,
                                     std::uint64_t seed) {
  std::ostringstream ss;
  ss << "# falsification witness (seed " << seed << "); replay with `hysim simulate`\n";
  if (base.system) {
    ss << "system {\n";
    ss << "  n = " << base.system->n << "\n  m = " << base.system->m << "\n";
    ss << "  flow = [";
    for (std::size_t i = 0; i < base.system->flow.size(); ++i)
      ss << (i ? ", " : "") << '"' << base.system->flow[i] << '"';
    ss << "]\n";
    if (!base.system->jump.empty()) {
      ss << "  jump = [";
      for (std::size_t i = 0; i < base.system->jump.size(); ++i)
        ss << (i ? ", " : "") << '"' << base.system->jump[i] << '"';
      ss << "]\n";
    }
    ss << "  flow_guard = \"" << base.system->flow_guard << "\"\n";
    ss << "  jump_guard = \"" << base.system->jump_guard << "\"\n";
    ss << "}\n";
  }
  ss << "simulation {\n  x0 = " << fmt_vector(w.x0) << "\n  step = " << fmt_num(base.sim.step)
     << "\n  horizon_t = " << fmt_num(base.sim.horizon_t)
     << "\n  horizon_j = " << base.sim.horizon_j << "\n}\n";
  if (!w.input.phases.empty()) {
    const auto& sched = w.input.phases.front();
    ss << "input {\n  switches = [";
    for (std::size_t i = 0; i < sched.switch_offsets.size(); ++i)
      ss << (i ? ", " : "") << fmt_num(sched.switch_offsets[i]);
    ss << "]\n  levels = [";
    for (std::size_t i = 0; i < sched.levels.size(); ++i)
      ss << (i ? ", " : "") << fmt_vector(sched.levels[i]);
    ss << "]\n}\n";
  }
  return ss.str();
}

}  // namespace hysim
