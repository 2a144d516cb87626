#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "pmc/error.hpp"

namespace pmc::detail {

inline constexpr double kGaussMatch = 0.5 + 0.5 / 1.7320508075688772935;
inline constexpr double kGaussOther = 1.0 - kGaussMatch;

constexpr int drop_bit(int q, int k) { return (q & ((1 << k) - 1)) | ((q >> (k + 1)) << k); }
constexpr int insert_bit(int e, int k, int b) { return (e & ((1 << k) - 1)) | (b << k) | ((e >> k) << (k + 1)); }

// In-place tensor butterfly (x0, x1) -> (A x0 + B x1, B x0 + A x1) along every
// bit of an array of 2^M entries. The map is symmetric, so it is its own adjoint.
template <int M>
inline void butterfly(double* v) {
  for (int j = 0; j < M; ++j) {
    const int stride = 1 << j;
    for (int i = 0; i < (1 << M); ++i) {
      if (i & stride) continue;
      const double x0 = v[i];
      const double x1 = v[i + stride];
      v[i] = kGaussMatch * x0 + kGaussOther * x1;
      v[i + stride] = kGaussOther * x0 + kGaussMatch * x1;
    }
  }
}

/// Gradients of the multilinear interpolant at the 2^N Gauss points of one
/// cell. d u / d x_k at point q is partial[k][drop_bit(q, k)].
template <int N>
struct GaussCell {
  static constexpr int kCorners = 1 << N;
  static constexpr int kEdges = 1 << (N - 1);

  double partial[N][kEdges];
  double sq[kCorners];
  double max_sq = 0.0;
  double mean = 0.0;

  void load(const double* u, std::int64_t lower, const std::int64_t* offsets, double inv_h) {
    double corner[kCorners];
    double sum = 0.0;
    for (int c = 0; c < kCorners; ++c) {
      corner[c] = u[lower + offsets[c]];
      sum += corner[c];
    }
    mean = sum / kCorners;
    for (int k = 0; k < N; ++k) {
      for (int e = 0; e < kEdges; ++e)
        partial[k][e] = (corner[insert_bit(e, k, 1)] - corner[insert_bit(e, k, 0)]) * inv_h;
      butterfly<N - 1>(partial[k]);
    }
    max_sq = 0.0;
    for (int q = 0; q < kCorners; ++q) {
      double s = 0.0;
      for (int k = 0; k < N; ++k) {
        const double g = partial[k][drop_bit(q, k)];
        s += g * g;
      }
      sq[q] = s;
      max_sq = std::max(max_sq, s);
    }
  }

  double gradient(int q, int k) const { return partial[k][drop_bit(q, k)]; }

  /// Restricts max_sq to points with positive weight.
  void mask(const double* weight) {
    max_sq = 0.0;
    for (int q = 0; q < kCorners; ++q)
      if (weight[q] > 0.0) max_sq = std::max(max_sq, sq[q]);
  }

  /// Adds sum over q, k of flux_q * d u/d x_k(q) * d(d u/d x_k(q))/d u_c to the
  /// corner entries of out, where flux_q multiplies the point's own gradient.
  void scatter_scaled(const double* flux, double inv_h, double source, double* out, std::int64_t lower,
                      const std::int64_t* offsets) const {
    double corner[kCorners];
    for (int c = 0; c < kCorners; ++c) corner[c] = source;
    for (int k = 0; k < N; ++k) {
      double f[kEdges] = {};
      for (int q = 0; q < kCorners; ++q) f[drop_bit(q, k)] += flux[q] * partial[k][drop_bit(q, k)];
      butterfly<N - 1>(f);
      for (int e = 0; e < kEdges; ++e) {
        corner[insert_bit(e, k, 1)] += f[e] * inv_h;
        corner[insert_bit(e, k, 0)] -= f[e] * inv_h;
      }
    }
    for (int c = 0; c < kCorners; ++c) out[lower + offsets[c]] += corner[c];
  }
};

/// Calls f.template operator()<N>() for the runtime dimension n.
template <class F>
decltype(auto) with_dimension(int n, F&& f) {
  switch (n) {
    case 2: return f.template operator()<2>();
    case 3: return f.template operator()<3>();
    case 4: return f.template operator()<4>();
    case 5: return f.template operator()<5>();
    case 6: return f.template operator()<6>();
    default: throw Error(ErrorCode::InvalidGeometry, "supported dimensions are 2..6");
  }
}

}  // namespace pmc::detail
