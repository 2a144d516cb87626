#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmc {

/// Compiled scalar expression in the coordinates x1..xn, the radius r = |x|
/// and the graph height t.
///
/// Grammar: sums and differences of products and quotients of powers (`^`,
/// right associative) of unary-signed atoms. Atoms are numbers, `pi`, `e`,
/// variables, parenthesized expressions and calls to sqrt, sin, cos, exp,
/// log, abs. Parsing errors throw Error{ParseError} with the column.
class Expression {
public:
  Expression() = default;

  static Expression parse(std::string_view text, int dimension);
  static Expression constant(double value);

  double eval(std::span<const double> x, double t = 0.0) const;

  bool depends_on_x() const noexcept { return uses_x_; }
  bool depends_on_t() const noexcept { return uses_t_; }
  bool is_constant() const noexcept { return !uses_x_ && !uses_t_; }
  const std::string& text() const noexcept { return text_; }

  enum class Op : std::uint8_t {
    Const, Var, Radius, Height, Neg, Add, Sub, Mul, Div, Pow,
    Sqrt, Sin, Cos, Exp, Log, Abs,
  };
  struct Instr {
    Op op;
    int index = 0;
    double value = 0.0;
  };

private:
  friend class ExpressionParser;
  std::vector<Instr> code_;
  std::string text_;
  int max_stack_ = 0;
  bool uses_x_ = false;
  bool uses_t_ = false;
};

}  // namespace pmc
