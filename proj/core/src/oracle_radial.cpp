#include "pmc/oracle_radial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmc/error.hpp"
#include "pmc/quadrature.hpp"

namespace pmc {
namespace {

constexpr int kTablePoints = 4097;
constexpr double kTol = 1e-14;

struct Integrand {
  int n;
  double a;
  double operator()(double s) const {
    const double p = std::pow(s, n - 1);
    return a / std::sqrt(p * p + a * a);
  }
};

// Integral of the integrand over [r, b] in the variable sigma = log s, which
// keeps the panels balanced over many decades.
double integrate(const Integrand& f, double r, double b) {
  if (!(b > r)) return 0.0;
  auto g = [&](double sigma) {
    const double s = std::exp(sigma);
    return f(s) * s;
  };
  const double scale = std::max(1e-300, std::fabs(f(r)) * r);
  return integrate_adaptive(g, std::log(r), std::log(b), kTol * scale).value;
}

double tail_start(int n, double a) {
  return 1e4 * std::max(1.0, std::pow(std::fabs(a), 1.0 / (n - 1)));
}

// Integral of the integrand over [r, infinity).
double integral_to_infinity(const Integrand& f, double r) {
  const double s_tail = std::max(r, tail_start(f.n, f.a));
  return integrate(f, r, s_tail) + f.a * std::pow(s_tail, 2 - f.n) / (f.n - 2);
}

double boundary_value(int n, double a, double r0, double outer) {
  const Integrand f{n, a};
  return std::isfinite(outer) ? integrate(f, r0, outer) : integral_to_infinity(f, r0);
}

}  // namespace

double RadialProfile::slope(double r) const {
  const double p = std::pow(r, dimension - 1);
  return -flux / std::sqrt(p * p + flux * flux);
}

double RadialProfile::margin() const { return 1.0 - std::fabs(slope(inner_radius)); }

double RadialProfile::value(double r) const {
  if (flux == 0.0 || r >= outer_radius) return 0.0;
  const Integrand f{dimension, flux};
  if (r < radii.front()) r = radii.front();
  if (r >= radii.back()) return std::isfinite(outer_radius) ? integrate(f, r, outer_radius) : integral_to_infinity(f, r);
  const auto it = std::upper_bound(radii.begin(), radii.end(), r);
  const std::size_t j = static_cast<std::size_t>(it - radii.begin());
  const double r1 = radii[j - 1];
  const double r2 = radii[j];
  const double dr = r2 - r1;
  const double t = (r - r1) / dr;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * values[j - 1] + h10 * dr * slope(r1) + h01 * values[j] + h11 * dr * slope(r2);
}

RadialProfile radial_profile(int n, double a, double r0, double r_max, double outer_radius) {
  if (n < 3) throw Error(ErrorCode::ConfigInvalid, "radial profile needs n >= 3");
  if (!(r0 > 0.0)) throw Error(ErrorCode::ConfigInvalid, "radial profile needs r0 > 0");
  if (!std::isfinite(a)) throw Error(ErrorCode::ConfigInvalid, "flux must be finite");
  if (!(outer_radius > r0)) throw Error(ErrorCode::ConfigInvalid, "outer radius must exceed r0");
  RadialProfile p;
  p.dimension = n;
  p.flux = a;
  p.inner_radius = r0;
  p.outer_radius = outer_radius;
  r_max = std::min(std::max(r_max, r0 * (1.0 + 1e-9)), outer_radius);
  p.radii.resize(kTablePoints);
  p.values.assign(kTablePoints, 0.0);
  const double lr0 = std::log(r0);
  const double lr1 = std::log(r_max);
  for (int i = 0; i < kTablePoints; ++i)
    p.radii[static_cast<std::size_t>(i)] = std::exp(lr0 + (lr1 - lr0) * i / (kTablePoints - 1));
  p.radii.front() = r0;
  p.radii.back() = r_max;
  if (a == 0.0) return p;

  const Integrand f{n, a};
  double u = std::isfinite(outer_radius) ? integrate(f, r_max, outer_radius) : integral_to_infinity(f, r_max);
  p.values.back() = u;
  for (int i = kTablePoints - 2; i >= 0; --i) {
    const auto k = static_cast<std::size_t>(i);
    u += integrate(f, p.radii[k], p.radii[k + 1]);
    p.values[k] = u;
  }
  return p;
}

double match_boundary_value(int n, double r0, double c, double outer_radius) {
  if (!std::isfinite(c)) throw Error(ErrorCode::Unattainable, "boundary value must be finite");
  if (c == 0.0) return 0.0;
  if (std::isfinite(outer_radius) && !(std::fabs(c) < outer_radius - r0))
    throw Error(ErrorCode::Unattainable, "|c| = " + std::to_string(std::fabs(c)) +
                                             " is not below the attainable bound " + std::to_string(outer_radius - r0));
  const double target = std::fabs(c);
  double lo = 0.0;
  double hi = 1.0;
  while (boundary_value(n, hi, r0, outer_radius) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e30) throw Error(ErrorCode::Unattainable, "boundary value " + std::to_string(c) + " out of range");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = boundary_value(n, mid, r0, outer_radius);
    if (v < target)
      lo = mid;
    else
      hi = mid;
  }
  const double a = 0.5 * (lo + hi);
  return c > 0.0 ? a : -a;
}

ScalarField sample_on_grid(const RadialProfile& profile, std::shared_ptr<const ExteriorGrid> grid) {
  const auto& shapes = grid->obstacles().shapes();
  const Ball* ball = shapes.size() == 1 ? std::get_if<Ball>(&shapes.front()) : nullptr;
  bool centred = ball != nullptr && std::fabs(ball->radius - profile.inner_radius) <= 1e-12 * profile.inner_radius;
  if (centred)
    for (double c : ball->center) centred = centred && std::fabs(c) <= 1e-12;
  if (!centred || grid->dimension() != profile.dimension)
    throw Error(ErrorCode::GeometryMismatch, "radial oracle needs a single ball of radius " +
                                                 std::to_string(profile.inner_radius) + " centred at the origin");
  ScalarField u(grid);
  const double c = profile.value(profile.inner_radius);
  Point x(static_cast<std::size_t>(grid->dimension()));
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    const NodeTag t = grid->tag(i);
    if (t != NodeTag::Boundary && t != NodeTag::Interior) continue;
    grid->node_coordinates(i, x);
    const double r = norm(x);
    u[i] = r <= profile.inner_radius ? c : profile.value(r);
  }
  return u;
}

}  // namespace pmc
