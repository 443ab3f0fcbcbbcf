#include "dqops/condition.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace dqops {

ConditionParseError::ConditionParseError(const std::string& what, std::size_t column)
    : Error(what + " at column " + std::to_string(column)), column_(column) {}

char to_char(Variable v) noexcept {
  switch (v) {
    case Variable::n: return 'n';
    case Variable::o: return 'o';
    case Variable::d: return 'd';
  }
  return '?';
}

std::string_view to_string(Comparison c) noexcept {
  switch (c) {
    case Comparison::greater: return ">";
    case Comparison::greater_equal: return ">=";
    case Comparison::less: return "<";
    case Comparison::less_equal: return "<=";
  }
  return "?";
}

double TestCondition::evaluate(const Scores& scores) const noexcept {
  double value = 0.0;
  for (const auto& t : terms) {
    const double x = t.variable == Variable::n ? scores.n : t.variable == Variable::o ? scores.o : scores.d;
    value += t.coefficient * x;
  }
  return value;
}

double TestCondition::range() const noexcept {
  double merged[3] = {0.0, 0.0, 0.0};
  for (const auto& t : terms) merged[static_cast<int>(t.variable)] += t.coefficient;
  return std::abs(merged[0]) + std::abs(merged[1]) + std::abs(merged[2]);
}

std::string TestCondition::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const bool negative = std::signbit(t.coefficient);
    const double magnitude = std::abs(t.coefficient);
    if (i == 0) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    if (magnitude != 1.0) out += format_double(magnitude) + "*";
    out += to_char(t.variable);
  }
  out += " ";
  out += dqops::to_string(comparison);
  out += " " + format_double(threshold);
  if (epsilon != 0.0) out += " +/- " + format_double(epsilon);
  return out;
}

TestCondition TestCondition::mirrored() const {
  TestCondition m = *this;
  for (auto& t : m.terms) t.coefficient = -t.coefficient;
  m.threshold = -threshold;
  switch (comparison) {
    case Comparison::greater: m.comparison = Comparison::less; break;
    case Comparison::greater_equal: m.comparison = Comparison::less_equal; break;
    case Comparison::less: m.comparison = Comparison::greater; break;
    case Comparison::less_equal: m.comparison = Comparison::greater_equal; break;
  }
  return m;
}

namespace {

class ConditionParser {
 public:
  explicit ConditionParser(std::string_view text) : text_(text) {}

  TestCondition parse() {
    TestCondition cond;
    parse_expression(cond);
    cond.comparison = parse_comparison();
    cond.threshold = parse_signed_number();
    skip_space();
    if (consume("+/-") || consume("\xC2\xB1")) {  // "+/-" or U+00B1
      skip_space();
      if (peek() == '-' || peek() == '+') fail("tolerance must be an unsigned number");
      cond.epsilon = parse_number();
    }
    skip_space();
    if (pos_ < text_.size()) fail("unexpected input '" + std::string(text_.substr(pos_, 1)) + "'");
    return cond;
  }

 private:
  void parse_expression(TestCondition& cond) {
    skip_space();
    double sign = 1.0;
    if (at_sign()) sign = text_[pos_++] == '-' ? -1.0 : 1.0;
    skip_space();
    if (!at_term()) fail("empty expression");
    cond.terms.push_back(parse_term(sign));
    while (true) {
      skip_space();
      if (!at_sign()) break;
      sign = text_[pos_++] == '-' ? -1.0 : 1.0;
      skip_space();
      if (!at_term()) fail("expected a term");
      cond.terms.push_back(parse_term(sign));
    }
  }

  Term parse_term(double sign) {
    Term term;
    if (at_number()) {
      term.coefficient = sign * parse_number();
      skip_space();
      if (!consume("*")) fail("expected '*' after coefficient");
      skip_space();
      if (!std::isalpha(static_cast<unsigned char>(peek()))) fail("expected a variable");
    } else {
      term.coefficient = sign;
    }
    term.variable = parse_variable();
    return term;
  }

  Variable parse_variable() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const auto name = text_.substr(start, pos_ - start);
    if (name == "n") return Variable::n;
    if (name == "o") return Variable::o;
    if (name == "d") return Variable::d;
    throw ConditionParseError("unknown variable `" + std::string(name) + "`", start + 1);
  }

  Comparison parse_comparison() {
    skip_space();
    if (consume(">=")) return Comparison::greater_equal;
    if (consume("<=")) return Comparison::less_equal;
    if (consume(">")) return Comparison::greater;
    if (consume("<")) return Comparison::less;
    fail("expected a comparison operator");
  }

  double parse_signed_number() {
    skip_space();
    double sign = 1.0;
    if (peek() == '-' || peek() == '+') {
      sign = text_[pos_++] == '-' ? -1.0 : 1.0;
      skip_space();
    }
    return sign * parse_number();
  }

  double parse_number() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const auto token = text_.substr(start, pos_ - start);
    if (token.empty()) throw ConditionParseError("expected a number", start + 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
      throw ConditionParseError("malformed number '" + std::string(token) + "'", start + 1);
    }
    return value;
  }

  bool at_sign() const {
    return (peek() == '+' && text_.substr(pos_, 3) != "+/-") || peek() == '-';
  }
  bool at_number() const { return std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.'; }
  bool at_term() const { return at_number() || std::isalpha(static_cast<unsigned char>(peek())); }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) return false;
    pos_ += token.size();
    return true;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConditionParseError(what, pos_ + 1); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

TestCondition parse_condition(std::string_view text) { return ConditionParser(text).parse(); }

}  // namespace dqops
