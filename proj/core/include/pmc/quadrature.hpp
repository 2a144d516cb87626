#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "pmc/error.hpp"

namespace pmc {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodX{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodW{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussW{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> kronrod_panel(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kKronrodW[7];
  double gauss = fc * kGaussW[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodX[static_cast<std::size_t>(j)];
    const double s = f(c - dx) + f(c + dx);
    kron += kKronrodW[static_cast<std::size_t>(j)] * s;
    if (j % 2 == 1) gauss += kGaussW[static_cast<std::size_t>(j / 2)] * s;
  }
  return {kron * half, std::fabs((kron - gauss) * half)};
}

template <class F>
void adaptive_recurse(F& f, double a, double b, double whole, double tol, int depth, QuadratureResult& acc) {
  const double mid = 0.5 * (a + b);
  const auto [left, el] = kronrod_panel(f, a, mid);
  const auto [right, er] = kronrod_panel(f, mid, b);
  acc.evaluations += 30;
  const double refined = left + right;
  const double err = el + er;
  if (err <= tol || std::fabs(refined - whole) <= 1e-3 * tol) {
    acc.value += refined;
    acc.error += err;
    return;
  }
  if (depth == 0)
    throw Error(ErrorCode::QuadratureFailure, "adaptive quadrature did not reach tolerance " + std::to_string(tol));
  adaptive_recurse(f, a, mid, left, 0.5 * tol, depth - 1, acc);
  adaptive_recurse(f, mid, b, right, 0.5 * tol, depth - 1, acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b] to an
/// absolute tolerance. Throws QuadratureFailure when bisection runs past
/// `max_depth` levels.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-10, int max_depth = 40) {
  if (a == b) return {};
  const double sign = b < a ? -1.0 : 1.0;
  if (b < a) std::swap(a, b);
  QuadratureResult acc;
  const auto [whole, err] = detail::kronrod_panel(f, a, b);
  acc.evaluations = 15;
  if (err <= 1e-3 * abs_tol) {
    acc.value = whole;
    acc.error = err;
  } else {
    detail::adaptive_recurse(f, a, b, whole, abs_tol, max_depth, acc);
  }
  acc.value *= sign;
  return acc;
}

}  // namespace pmc
