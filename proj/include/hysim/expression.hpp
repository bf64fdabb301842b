#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hysim {

/// Thrown on malformed expression text; `offset` is the 0-based byte
/// position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " at position " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class ExprOp {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Exp,
  Ln,
  Sqrt,
  Abs,
  Min,
  Max,
  Piecewise,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression tree node. Grammar: literals, variables, + - * / ^,
/// unary -, exp/ln/sqrt/abs, min/max, and
/// piecewise(var <= literal, then, else).
struct Expr {
  ExprOp op = ExprOp::Constant;
  double value = 0.0;           // Constant
  std::string name;             // Variable
  std::vector<ExprPtr> args;    // operands; Piecewise stores {then, else}
  std::string cond_var;         // Piecewise condition: cond_var <= cond_bound
  double cond_bound = 0.0;
};

ExprPtr make_constant(double v);
ExprPtr make_variable(std::string name);

/// Parses `text` into an expression tree. Throws ParseError on failure.
ExprPtr parse_expression(std::string_view text);

/// Precedence-aware printer; the printed form reparses to a structurally
/// identical tree.
std::string to_string(const Expr& e);
inline std::string to_string(const ExprPtr& e) { return to_string(*e); }

bool structurally_equal(const Expr& a, const Expr& b);

/// Distinct variable names appearing in the tree, in first-use order.
std::vector<std::string> variables_of(const Expr& e);

/// Expression compiled to a flat postfix program over an ordered variable
/// list. Evaluation follows IEEE semantics (division by zero yields inf,
/// ln of a negative number yields nan); callers decide whether non-finite
/// results are acceptable.
class CompiledExpr {
 public:
  CompiledExpr() = default;

  /// Throws std::invalid_argument if the tree references a variable not in
  /// `variables`.
  static CompiledExpr compile(const ExprPtr& tree,
                              std::span<const std::string> variables);

  double eval(std::span<const double> values) const;
  bool empty() const { return code_.empty(); }
  const std::string& text() const { return text_; }

 private:
  struct Instr {
    ExprOp op;
    double value = 0.0;  // Constant / Piecewise bound
    int var = -1;        // Variable / Piecewise condition variable
  };
  std::vector<Instr> code_;
  std::string text_;
};

}  // namespace hysim
