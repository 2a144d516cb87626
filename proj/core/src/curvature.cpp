#include "pmc/curvature.hpp"

#include <cmath>
#include <limits>

#include "pmc/error.hpp"
#include "pmc/geometry.hpp"
#include "pmc/quadrature.hpp"

namespace pmc {

CurvatureSpec CurvatureSpec::zero(int dimension) {
  CurvatureSpec c;
  c.dim_ = dimension;
  c.form_ = Form::Zero;
  c.envelope_ = Expression::constant(0.0);
  c.s_ = 2.0 * dimension / (dimension + 2.0);
  return c;
}

CurvatureSpec CurvatureSpec::x_only(int dimension, Expression f, std::optional<Expression> envelope,
                                    std::optional<double> exponent) {
  if (f.depends_on_t()) throw Error(ErrorCode::ConfigInvalid, "x-only curvature may not depend on t");
  CurvatureSpec c;
  c.dim_ = dimension;
  c.form_ = Form::XOnly;
  c.f_ = std::move(f);
  if (envelope) {
    c.envelope_ = std::move(*envelope);
  } else {
    c.envelope_from_f_ = true;
  }
  c.s_ = exponent.value_or(2.0 * dimension / (dimension + 2.0));
  return c;
}

CurvatureSpec CurvatureSpec::separable(int dimension, Expression f, Expression g, Expression envelope,
                                       double exponent) {
  if (f.depends_on_t()) throw Error(ErrorCode::ConfigInvalid, "separable x-factor may not depend on t");
  if (g.depends_on_x()) throw Error(ErrorCode::ConfigInvalid, "separable t-factor may not depend on x");
  CurvatureSpec c;
  c.dim_ = dimension;
  c.form_ = Form::Separable;
  c.f_ = std::move(f);
  c.g_ = std::move(g);
  c.envelope_ = std::move(envelope);
  c.s_ = exponent;
  return c;
}

CurvatureSpec CurvatureSpec::general(int dimension, Expression h_xt, Expression envelope, double exponent) {
  CurvatureSpec c;
  c.dim_ = dimension;
  c.form_ = Form::General;
  c.f_ = std::move(h_xt);
  c.envelope_ = std::move(envelope);
  c.s_ = exponent;
  return c;
}

double CurvatureSpec::conjugate_exponent() const noexcept {
  if (s_ <= 1.0) return std::numeric_limits<double>::infinity();
  return s_ / (s_ - 1.0);
}

double CurvatureSpec::H(std::span<const double> x, double t) const {
  const double tt = reflected_ ? -t : t;
  double value = 0.0;
  switch (form_) {
    case Form::Zero: return 0.0;
    case Form::XOnly: value = f_.eval(x); break;
    case Form::Separable: value = f_.eval(x) * g_.eval({}, tt); break;
    case Form::General: value = f_.eval(x, tt); break;
  }
  return reflected_ ? -value : value;
}

double CurvatureSpec::t_factor(double t) const {
  const double tt = reflected_ ? -t : t;
  const double v = g_.eval({}, tt);
  return reflected_ ? -v : v;
}

double CurvatureSpec::t_primitive(double t) const {
  // Reflection maps the primitive Gamma(t) to Gamma(-t).
  const double tt = reflected_ ? -t : t;
  auto integrand = [this](double s) { return g_.eval({}, s); };
  return integrate_adaptive(integrand, 0.0, tt, 1e-10).value;
}

double CurvatureSpec::x_factor(std::span<const double> x) const {
  if (form_ == Form::Zero) return 0.0;
  return dim_ * f_.eval(x);
}

double CurvatureSpec::G(std::span<const double> x, double t) const {
  switch (form_) {
    case Form::Zero: return 0.0;
    case Form::XOnly: return dim_ * H(x, 0.0) * t;
    case Form::Separable: return x_factor(x) * t_primitive(t);
    case Form::General: {
      const double tt = reflected_ ? -t : t;
      auto integrand = [&](double s) { return f_.eval(x, s); };
      return dim_ * integrate_adaptive(integrand, 0.0, tt, 1e-10).value;
    }
  }
  return 0.0;
}

double CurvatureSpec::envelope(std::span<const double> x) const {
  if (form_ == Form::Zero) return 0.0;
  if (envelope_from_f_) return dim_ * std::fabs(f_.eval(x));
  return envelope_.eval(x);
}

CurvatureSpec CurvatureSpec::reflected() const {
  CurvatureSpec c = *this;
  c.reflected_ = !reflected_;
  return c;
}

AssumptionAudit audit_assumption(const CurvatureSpec& spec, const ExteriorGrid& grid, int samples, double t_max,
                                 std::mt19937_64& rng) {
  AssumptionAudit audit;
  const auto cells = grid.cells();
  const double s = spec.exponent();
  Point x(static_cast<std::size_t>(grid.dimension()));
  double sum = 0.0;
  for (std::int64_t c : cells) {
    grid.cell_center(c, x);
    sum += std::pow(spec.envelope(x), s);
  }
  audit.envelope_norm = std::pow(sum * grid.cell_volume(), 1.0 / s);
  if (spec.form() == CurvatureSpec::Form::Zero || cells.empty()) return audit;

  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_real_distribution<double> height(-t_max, t_max);
  for (int i = 0; i < samples; ++i) {
    grid.cell_center(cells[pick(rng)], x);
    const double t = height(rng);
    const double lhs = spec.dimension() * std::fabs(spec.H(x, t));
    const double env = spec.envelope(x);
    const double ratio = env > 0.0 ? lhs / env : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    audit.worst_ratio = std::max(audit.worst_ratio, ratio);
    ++audit.samples;
  }
  audit.holds = audit.worst_ratio <= 1.0 + 1e-12;
  return audit;
}

}  // namespace pmc
