#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "hysim/expression.hpp"

using namespace hysim;

namespace {

double eval1(const std::string& text, const std::string& var, double v) {
  const std::array<std::string, 1> vars = {var};
  auto ce = CompiledExpr::compile(parse_expression(text), vars);
  const double vals[1] = {v};
  return ce.eval(vals);
}

}  // namespace

TEST_CASE("polynomial certificate evaluates") {
  CHECK(eval1("2*s^4 + 4*s^3 + s^2", "s", 1.0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(eval1("2*s^4 + 4*s^3 + s^2", "s", 0.0) == 0.0);
}

TEST_CASE("operator precedence and unary minus") {
  CHECK(eval1("-s^2", "s", 3.0) == doctest::Approx(-9.0));
  CHECK(eval1("2*s^3", "s", 2.0) == doctest::Approx(16.0));
  CHECK(eval1("2^s^2", "s", 2.0) == doctest::Approx(16.0));  // right assoc: 2^(s^2)
  CHECK(eval1("1 - -s", "s", 2.0) == doctest::Approx(3.0));
  CHECK(eval1("6/2/3", "s", 0.0) == doctest::Approx(1.0));
}

TEST_CASE("functions") {
  CHECK(eval1("exp(-t)*2", "t", 1.0) == doctest::Approx(2.0 * std::exp(-1.0)));
  CHECK(eval1("sqrt(s)", "s", 9.0) == doctest::Approx(3.0));
  CHECK(eval1("abs(s - 4)", "s", 1.0) == doctest::Approx(3.0));
  CHECK(eval1("min(s, s^2)", "s", 2.0) == doctest::Approx(2.0));
  CHECK(eval1("max(s, s^2)", "s", 0.5) == doctest::Approx(0.5));
  CHECK(eval1("ln(s)", "s", 1.0) == doctest::Approx(0.0));
}

TEST_CASE("piecewise with var <= literal condition") {
  CHECK(eval1("piecewise(s <= 1, 0, s - 1)", "s", 0.5) == 0.0);
  CHECK(eval1("piecewise(s <= 1, 0, s - 1)", "s", 3.0) == doctest::Approx(2.0));
  CHECK(eval1("piecewise(s <= -0.5, 1, 2)", "s", -1.0) == 1.0);
}

TEST_CASE("IEEE semantics at singular points") {
  CHECK(std::isinf(eval1("1/t", "t", 0.0)));
  CHECK(std::isnan(eval1("ln(s - 2)", "s", 1.0)));
}

TEST_CASE("parse error carries position") {
  CHECK_THROWS_AS(parse_expression("min(s,"), ParseError);
  try {
    parse_expression("min(s,");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 6);
  }
  CHECK_THROWS_AS(parse_expression("2 +"), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(1)"), ParseError);
  CHECK_THROWS_AS(parse_expression("(1 + 2"), ParseError);
  CHECK_THROWS_AS(parse_expression("piecewise(1 <= s, 0, 1)"), ParseError);
}

TEST_CASE("unknown variable rejected at compile") {
  const std::array<std::string, 1> vars = {"s"};
  CHECK_THROWS_AS(CompiledExpr::compile(parse_expression("s + q"), vars),
                  std::invalid_argument);
}

TEST_CASE("print-parse fixpoint on a corpus") {
  const char* corpus[] = {
      "2*s^4 + 4*s^3 + s^2",
      "-s^2",
      "exp(-(1 - 0.79)^2*t)*s",
      "max(s - 1, 0)/(1 + max(s - 1, 0)*t) + s/t",
      "piecewise(s <= 1, 0, (s - 1)^2)",
      "s/(1 + z)",
      "a - (b - c)",
      "a - b - c",
      "a/(b*c)",
      "(a + b)*(a - b)",
      "-(a + b)",
      "2^-3",
      "sqrt(abs(min(s, 1 - s)))",
  };
  for (const char* text : corpus) {
    CAPTURE(text);
    auto ast = parse_expression(text);
    auto printed = to_string(*ast);
    auto reparsed = parse_expression(printed);
    CHECK(structurally_equal(*ast, *reparsed));
    // printing is a fixpoint after one round
    CHECK(to_string(*reparsed) == printed);
  }
}

TEST_CASE("variables_of reports first-use order") {
  auto ast = parse_expression("exp(-t)*s + j");
  auto vars = variables_of(*ast);
  REQUIRE(vars.size() == 3);
  CHECK(vars[0] == "t");
  CHECK(vars[1] == "s");
  CHECK(vars[2] == "j");
}
