#include "pmc/expression.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include "pmc/error.hpp"

namespace pmc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GapUnresolved: return "GapUnresolved";
    case ErrorCode::ObstaclesOverlap: return "ObstaclesOverlap";
    case ErrorCode::TruncationTooTight: return "TruncationTooTight";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::NotNearBoundary: return "NotNearBoundary";
    case ErrorCode::NotLipschitzEnough: return "NotLipschitzEnough";
    case ErrorCode::CutoffTooTight: return "CutoffTooTight";
    case ErrorCode::InfeasibleField: return "InfeasibleField";
    case ErrorCode::DegenerateCell: return "DegenerateCell";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NoFeasibleStart: return "NoFeasibleStart";
    case ErrorCode::StalledInfeasible: return "StalledInfeasible";
    case ErrorCode::Unattainable: return "Unattainable";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class ExpressionParser {
public:
  ExpressionParser(std::string_view text, int dimension) : src_(text), dim_(dimension) {}

  Expression run() {
    expr_.text_ = std::string(src_);
    parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    if (expr_.code_.empty()) fail("empty expression");
    return std::move(expr_);
  }

private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError,
                msg + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(src_) + "'");
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Op op, int index = 0, double value = 0.0) {
    expr_.code_.push_back({op, index, value});
    switch (op) {
      case Op::Const: case Op::Var: case Op::Radius: case Op::Height: ++depth_; break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: --depth_; break;
      default: break;
    }
    expr_.max_stack_ = std::max(expr_.max_stack_, depth_);
  }

  void parse_sum() {
    parse_product();
    for (;;) {
      if (accept('+')) {
        parse_product();
        emit(Op::Add);
      } else if (accept('-')) {
        parse_product();
        emit(Op::Sub);
      } else {
        return;
      }
    }
  }

  void parse_product() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::Mul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::Div);
      } else {
        return;
      }
    }
  }

  // Unary minus binds looser than '^': -x^2 == -(x^2).
  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::Neg);
      return;
    }
    if (accept('+')) {
      parse_unary();
      return;
    }
    parse_power();
  }

  void parse_power() {
    parse_atom();
    if (accept('^')) {
      parse_unary();
      emit(Op::Pow);
    }
  }

  void parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_sum();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      const std::string tmp(begin, src_.size() - pos_);
      const double v = std::strtod(tmp.c_str(), &end);
      if (end == tmp.c_str()) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - tmp.c_str());
      emit(Op::Const, 0, v);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      parse_identifier(name, start);
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void parse_identifier(std::string_view name, std::size_t start) {
    static constexpr std::array<std::pair<std::string_view, Op>, 6> kFunctions{{
        {"sqrt", Op::Sqrt}, {"sin", Op::Sin}, {"cos", Op::Cos},
        {"exp", Op::Exp}, {"log", Op::Log}, {"abs", Op::Abs},
    }};
    for (const auto& [fname, op] : kFunctions) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after " + std::string(name));
        parse_sum();
        if (!accept(')')) fail("expected ')'");
        emit(op);
        return;
      }
    }
    if (name == "pi") return emit(Op::Const, 0, std::numbers::pi);
    if (name == "e") return emit(Op::Const, 0, std::numbers::e);
    if (name == "t") {
      expr_.uses_t_ = true;
      return emit(Op::Height);
    }
    if (name == "r") {
      expr_.uses_x_ = true;
      return emit(Op::Radius);
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int k = 0;
      for (char d : name.substr(1)) {
        if (!std::isdigit(static_cast<unsigned char>(d))) {
          k = -1;
          break;
        }
        k = k * 10 + (d - '0');
      }
      if (k >= 1 && k <= dim_) {
        expr_.uses_x_ = true;
        return emit(Op::Var, k - 1);
      }
      pos_ = start;
      fail("coordinate '" + std::string(name) + "' outside dimension " + std::to_string(dim_));
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  Expression expr_;
};

Expression Expression::parse(std::string_view text, int dimension) {
  return ExpressionParser(text, dimension).run();
}

Expression Expression::constant(double value) {
  Expression e;
  e.code_.push_back({Op::Const, 0, value});
  e.max_stack_ = 1;
  e.text_ = std::to_string(value);
  return e;
}

double Expression::eval(std::span<const double> x, double t) const {
  constexpr int kInline = 32;
  std::array<double, kInline> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (max_stack_ > kInline) {
    big.resize(static_cast<std::size_t>(max_stack_));
    stack = big.data();
  }
  int sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: stack[sp++] = in.value; break;
      case Op::Var: stack[sp++] = x[static_cast<std::size_t>(in.index)]; break;
      case Op::Radius: {
        double s = 0.0;
        for (double xi : x) s += xi * xi;
        stack[sp++] = std::sqrt(s);
        break;
      }
      case Op::Height: stack[sp++] = t; break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::Pow: {
        --sp;
        const double b = stack[sp];
        double& a = stack[sp - 1];
        a = (b == 2.0) ? a * a : std::pow(a, b);
        break;
      }
      case Op::Sqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
      case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::Log: stack[sp - 1] = std::log(stack[sp - 1]); break;
      case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
    }
  }
  return stack[0];
}

}  // namespace pmc
