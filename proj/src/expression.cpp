#include "hysim/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

namespace hysim {

ExprPtr make_constant(double v) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Constant;
  e->value = v;
  return e;
}

ExprPtr make_variable(std::string name) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Variable;
  e->name = std::move(name);
  return e;
}

namespace {

struct Lexer {
  std::string_view src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= src.size();
  }
  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }
  bool consume(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!consume(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos);
  }
};

struct Parser {
  Lexer lex;

  ExprPtr parse() {
    auto e = expr();
    if (!lex.at_end()) throw ParseError("unexpected trailing input", lex.pos);
    return e;
  }

  ExprPtr expr() {
    auto lhs = term();
    for (;;) {
      if (lex.consume('+')) {
        lhs = binary(ExprOp::Add, lhs, term());
      } else if (lex.consume('-')) {
        lhs = binary(ExprOp::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    auto lhs = unary();
    for (;;) {
      if (lex.consume('*')) {
        lhs = binary(ExprOp::Mul, lhs, unary());
      } else if (lex.consume('/')) {
        lhs = binary(ExprOp::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  // '^' binds tighter than unary minus: -s^2 == -(s^2).
  ExprPtr unary() {
    if (lex.consume('-')) {
      auto e = std::make_shared<Expr>();
      e->op = ExprOp::Neg;
      e->args = {unary()};
      return e;
    }
    return power();
  }

  ExprPtr power() {
    auto base = primary();
    if (lex.consume('^')) return binary(ExprOp::Pow, base, unary());
    return base;
  }

  ExprPtr primary() {
    if (lex.at_end()) throw ParseError("expected expression, got end of input", lex.pos);
    char c = lex.peek();
    if (c == '(') {
      lex.consume('(');
      auto e = expr();
      lex.expect(')', "to close parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", lex.pos);
  }

  ExprPtr number() {
    lex.skip_ws();
    const char* begin = lex.src.data() + lex.pos;
    const char* end = lex.src.data() + lex.src.size();
    double v = 0.0;
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) throw ParseError("malformed number", lex.pos);
    lex.pos = static_cast<std::size_t>(res.ptr - lex.src.data());
    return make_constant(v);
  }

  ExprPtr identifier() {
    lex.skip_ws();
    std::size_t start = lex.pos;
    while (lex.pos < lex.src.size() &&
           (std::isalnum(static_cast<unsigned char>(lex.src[lex.pos])) || lex.src[lex.pos] == '_'))
      ++lex.pos;
    std::string name(lex.src.substr(start, lex.pos - start));
    if (lex.peek() != '(') return make_variable(std::move(name));

    if (name == "piecewise") return piecewise(start);

    ExprOp op;
    std::size_t arity;
    if (name == "exp") {
      op = ExprOp::Exp;
      arity = 1;
    } else if (name == "ln") {
      op = ExprOp::Ln;
      arity = 1;
    } else if (name == "sqrt") {
      op = ExprOp::Sqrt;
      arity = 1;
    } else if (name == "abs") {
      op = ExprOp::Abs;
      arity = 1;
    } else if (name == "min") {
      op = ExprOp::Min;
      arity = 2;
    } else if (name == "max") {
      op = ExprOp::Max;
      arity = 2;
    } else {
      throw ParseError("unknown function '" + name + "'", start);
    }
    lex.expect('(', "after function name");
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args.push_back(expr());
    for (std::size_t i = 1; i < arity; ++i) {
      lex.expect(',', "between function arguments");
      e->args.push_back(expr());
    }
    lex.expect(')', "to close argument list");
    return e;
  }

  // piecewise(var <= literal, then_expr, else_expr)
  ExprPtr piecewise(std::size_t start) {
    lex.expect('(', "after function name");
    lex.skip_ws();
    if (!(std::isalpha(static_cast<unsigned char>(lex.peek())) || lex.peek() == '_'))
      throw ParseError("piecewise condition must start with a variable", lex.pos);
    std::size_t vstart = lex.pos;
    while (lex.pos < lex.src.size() &&
           (std::isalnum(static_cast<unsigned char>(lex.src[lex.pos])) || lex.src[lex.pos] == '_'))
      ++lex.pos;
    std::string var(lex.src.substr(vstart, lex.pos - vstart));
    lex.skip_ws();
    if (lex.pos + 1 >= lex.src.size() || lex.src[lex.pos] != '<' || lex.src[lex.pos + 1] != '=')
      throw ParseError("piecewise condition must be of the form 'var <= literal'", lex.pos);
    lex.pos += 2;
    lex.skip_ws();
    double bound = 0.0;
    bool neg = false;
    if (lex.consume('-')) neg = true;
    const char* begin = lex.src.data() + lex.pos;
    const char* end = lex.src.data() + lex.src.size();
    auto res = std::from_chars(begin, end, bound);
    if (res.ec != std::errc())
      throw ParseError("piecewise condition bound must be a literal", lex.pos);
    lex.pos = static_cast<std::size_t>(res.ptr - lex.src.data());
    if (neg) bound = -bound;

    auto e = std::make_shared<Expr>();
    e->op = ExprOp::Piecewise;
    e->cond_var = std::move(var);
    e->cond_bound = bound;
    lex.expect(',', "after piecewise condition");
    e->args.push_back(expr());
    lex.expect(',', "after piecewise branch");
    e->args.push_back(expr());
    lex.expect(')', "to close piecewise");
    (void)start;
    return e;
  }

  static ExprPtr binary(ExprOp op, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args = {std::move(a), std::move(b)};
    return e;
  }
};

int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub:
      return 1;
    case ExprOp::Mul:
    case ExprOp::Div:
      return 2;
    case ExprOp::Neg:
      return 3;
    case ExprOp::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void print(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, bool need_parens) {
    if (need_parens) out += '(';
    print(c, out);
    if (need_parens) out += ')';
  };
  const int p = precedence(e.op);
  switch (e.op) {
    case ExprOp::Constant:
      out += format_double(e.value);
      return;
    case ExprOp::Variable:
      out += e.name;
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div: {
      child(*e.args[0], precedence(e.args[0]->op) < p);
      const char* sym = e.op == ExprOp::Add   ? " + "
                        : e.op == ExprOp::Sub ? " - "
                        : e.op == ExprOp::Mul ? "*"
                                              : "/";
      out += sym;
      bool rp = e.op == ExprOp::Add || e.op == ExprOp::Mul
                    ? precedence(e.args[1]->op) < p
                    : precedence(e.args[1]->op) <= p;
      child(*e.args[1], rp);
      return;
    }
    case ExprOp::Pow:
      child(*e.args[0], precedence(e.args[0]->op) <= p);
      out += '^';
      child(*e.args[1], precedence(e.args[1]->op) < p);
      return;
    case ExprOp::Neg:
      out += '-';
      child(*e.args[0], precedence(e.args[0]->op) < p);
      return;
    case ExprOp::Exp:
    case ExprOp::Ln:
    case ExprOp::Sqrt:
    case ExprOp::Abs: {
      const char* name = e.op == ExprOp::Exp  ? "exp"
                         : e.op == ExprOp::Ln ? "ln"
                         : e.op == ExprOp::Sqrt ? "sqrt"
                                                : "abs";
      out += name;
      out += '(';
      print(*e.args[0], out);
      out += ')';
      return;
    }
    case ExprOp::Min:
    case ExprOp::Max:
      out += e.op == ExprOp::Min ? "min(" : "max(";
      print(*e.args[0], out);
      out += ", ";
      print(*e.args[1], out);
      out += ')';
      return;
    case ExprOp::Piecewise:
      out += "piecewise(";
      out += e.cond_var;
      out += " <= ";
      out += format_double(e.cond_bound);
      out += ", ";
      print(*e.args[0], out);
      out += ", ";
      print(*e.args[1], out);
      out += ')';
      return;
  }
}

void collect_vars(const Expr& e, std::vector<std::string>& out) {
  auto add = [&](const std::string& n) {
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  if (e.op == ExprOp::Variable) add(e.name);
  if (e.op == ExprOp::Piecewise) add(e.cond_var);
  for (const auto& a : e.args) collect_vars(*a, out);
}

}  // namespace

ExprPtr parse_expression(std::string_view text) {
  Parser p{Lexer{text, 0}};
  return p.parse();
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case ExprOp::Constant:
      if (a.value != b.value) return false;
      break;
    case ExprOp::Variable:
      if (a.name != b.name) return false;
      break;
    case ExprOp::Piecewise:
      if (a.cond_var != b.cond_var || a.cond_bound != b.cond_bound) return false;
      break;
    default:
      break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

std::vector<std::string> variables_of(const Expr& e) {
  std::vector<std::string> out;
  collect_vars(e, out);
  return out;
}

CompiledExpr CompiledExpr::compile(const ExprPtr& tree,
                                   std::span<const std::string> variables) {
  CompiledExpr ce;
  ce.text_ = to_string(*tree);
  auto var_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown variable '" + name + "' in expression '" +
                                ce.text_ + "'");
  };
  // Postfix emission; Piecewise emits then, else, followed by a select.
  auto walk = [&](auto&& self, const Expr& e) -> void {
    for (const auto& a : e.args) self(self, *a);
    Instr ins;
    ins.op = e.op;
    switch (e.op) {
      case ExprOp::Constant:
        ins.value = e.value;
        break;
      case ExprOp::Variable:
        ins.var = var_index(e.name);
        break;
      case ExprOp::Piecewise:
        ins.var = var_index(e.cond_var);
        ins.value = e.cond_bound;
        break;
      default:
        break;
    }
    ce.code_.push_back(ins);
  };
  walk(walk, *tree);
  return ce;
}

double CompiledExpr::eval(std::span<const double> values) const {
  std::array<double, 64> stack;
  std::size_t sp = 0;
  for (const auto& ins : code_) {
    switch (ins.op) {
      case ExprOp::Constant:
        stack[sp++] = ins.value;
        break;
      case ExprOp::Variable:
        stack[sp++] = values[static_cast<std::size_t>(ins.var)];
        break;
      case ExprOp::Add:
        --sp;
        stack[sp - 1] += stack[sp];
        break;
      case ExprOp::Sub:
        --sp;
        stack[sp - 1] -= stack[sp];
        break;
      case ExprOp::Mul:
        --sp;
        stack[sp - 1] *= stack[sp];
        break;
      case ExprOp::Div:
        --sp;
        stack[sp - 1] /= stack[sp];
        break;
      case ExprOp::Pow:
        --sp;
        stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]);
        break;
      case ExprOp::Neg:
        stack[sp - 1] = -stack[sp - 1];
        break;
      case ExprOp::Exp:
        stack[sp - 1] = std::exp(stack[sp - 1]);
        break;
      case ExprOp::Ln:
        stack[sp - 1] = std::log(stack[sp - 1]);
        break;
      case ExprOp::Sqrt:
        stack[sp - 1] = std::sqrt(stack[sp - 1]);
        break;
      case ExprOp::Abs:
        stack[sp - 1] = std::fabs(stack[sp - 1]);
        break;
      case ExprOp::Min:
        --sp;
        stack[sp - 1] = std::fmin(stack[sp - 1], stack[sp]);
        break;
      case ExprOp::Max:
        --sp;
        stack[sp - 1] = std::fmax(stack[sp - 1], stack[sp]);
        break;
      case ExprOp::Piecewise: {
        // stack: ... then else ; condition from variable slot
        --sp;
        const double else_v = stack[sp];
        const double then_v = stack[sp - 1];
        const bool cond = values[static_cast<std::size_t>(ins.var)] <= ins.value;
        stack[sp - 1] = cond ? then_v : else_v;
        break;
      }
    }
  }
  return sp == 1 ? stack[0] : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace hysim
