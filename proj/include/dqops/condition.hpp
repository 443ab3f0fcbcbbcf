#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dqops/core.hpp"

namespace dqops {

/// Score variables: n = new-model accuracy, o = old-model accuracy,
/// d = fraction of samples where the two models predict differently.
enum class Variable { n, o, d };
enum class Comparison { greater, greater_equal, less, less_equal };

struct Term {
  double coefficient = 1.0;
  Variable variable = Variable::n;
  friend bool operator==(const Term&, const Term&) = default;
};

struct Scores {
  double n = 0.0;
  double o = 0.0;
  double d = 0.0;
};

/// `sum(coefficient * variable) cmp threshold +/- epsilon`. Terms keep their
/// written order.
struct TestCondition {
  std::vector<Term> terms;
  Comparison comparison = Comparison::greater;
  double threshold = 0.0;
  double epsilon = 0.0;

  double evaluate(const Scores& scores) const noexcept;
  /// Span of the per-sample expression value with every variable in {0,1}:
  /// the sum over variables of |merged coefficient|.
  double range() const noexcept;
  /// Canonical text; parse(to_string()) reproduces the condition exactly.
  std::string to_string() const;
  /// Negated expression with the flipped operator, same epsilon.
  TestCondition mirrored() const;

  friend bool operator==(const TestCondition&, const TestCondition&) = default;
};

class ConditionParseError : public Error {
 public:
  ConditionParseError(const std::string& what, std::size_t column);
  /// 1-based column of the offending token.
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Grammar (whitespace-insensitive):
///   condition := expr cmp number [ "+/-" number ]
///   expr      := [sign] term { sign term }
///   term      := var | number "*" var
///   var       := "n" | "o" | "d";  cmp := ">" | "<" | ">=" | "<="
TestCondition parse_condition(std::string_view text);

char to_char(Variable v) noexcept;
std::string_view to_string(Comparison c) noexcept;

}  // namespace dqops
