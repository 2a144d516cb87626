#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "pmc/expression.hpp"

namespace pmc {

class ExteriorGrid;

/// Prescribed mean curvature H(x, t) together with its integrable envelope h
/// (n|H(x,t)| <= h(x)) and the envelope's Lebesgue exponent s.
class CurvatureSpec {
public:
  enum class Form { Zero, XOnly, Separable, General };

  static CurvatureSpec zero(int dimension);
  /// H(x, t) = f(x). Without an envelope, h = n|f| is used.
  static CurvatureSpec x_only(int dimension, Expression f, std::optional<Expression> envelope = {},
                              std::optional<double> exponent = {});
  /// H(x, t) = f(x) g(t).
  static CurvatureSpec separable(int dimension, Expression f, Expression g, Expression envelope,
                                 double exponent);
  static CurvatureSpec general(int dimension, Expression h_xt, Expression envelope, double exponent);

  Form form() const noexcept { return form_; }
  int dimension() const noexcept { return dim_; }
  double exponent() const noexcept { return s_; }
  /// Conjugate exponent s' = s/(s-1); infinity for s = 1.
  double conjugate_exponent() const noexcept;
  bool depends_on_t() const noexcept { return form_ == Form::Separable || form_ == Form::General; }

  double H(std::span<const double> x, double t) const;
  /// G(x, t) = n * integral_0^t H(x, s) ds.
  double G(std::span<const double> x, double t) const;
  double envelope(std::span<const double> x) const;

  /// The x-factor n f(x) for XOnly/Separable forms (0 for Zero).
  double x_factor(std::span<const double> x) const;
  /// The t-factor g(t) and its primitive for the Separable form.
  double t_factor(double t) const;
  double t_primitive(double t) const;

  /// The curvature (x, t) -> -H(x, -t).
  CurvatureSpec reflected() const;

private:
  CurvatureSpec() = default;

  Form form_ = Form::Zero;
  int dim_ = 3;
  Expression f_;
  Expression g_;
  Expression envelope_;
  bool envelope_from_f_ = false;
  double s_ = 1.0;
  bool reflected_ = false;
};

struct AssumptionAudit {
  double worst_ratio = 0.0;  ///< max of n|H(x,t)| / h(x) over the samples
  int samples = 0;
  bool holds = true;
  double envelope_norm = 0.0;  ///< discrete L^s norm of h over the active cells
};

/// Spot-checks n|H(x,t)| <= h(x) at random cell centres and heights |t| <= t_max,
/// and measures the discrete L^s norm of h.
AssumptionAudit audit_assumption(const CurvatureSpec& spec, const ExteriorGrid& grid, int samples,
                                 double t_max, std::mt19937_64& rng);

}  // namespace pmc
