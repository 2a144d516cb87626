#include "pmc/preconditioner.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "pmc/error.hpp"

namespace pmc {

std::string_view to_string(Preconditioner p) { return p == Preconditioner::Jacobi ? "jacobi" : "poisson"; }

struct PoissonPreconditioner::Impl {
  const ExteriorGrid* grid = nullptr;
  int n = 0;
  std::int64_t side = 0;  // interior nodes per axis
  std::vector<std::int64_t> rows;  // node index of the first entry of every axis-0 row
  std::vector<double> inverse;     // 1 / (eigenvalue * transform normalisation)
  double* buffer = nullptr;
  fftw_plan plan = nullptr;

  ~Impl() {
    if (plan) fftw_destroy_plan(plan);
    if (buffer) fftw_free(buffer);
  }
};

PoissonPreconditioner::PoissonPreconditioner(const ExteriorGrid& grid) : impl_(std::make_unique<Impl>()) {
  Impl& p = *impl_;
  p.grid = &grid;
  p.n = grid.dimension();
  p.side = grid.nodes_per_axis() - 2;
  if (p.side < 1) throw Error(ErrorCode::InvalidGeometry, "grid too small for the Poisson preconditioner");
  const auto dn = static_cast<std::size_t>(p.n);
  std::size_t total = 1;
  for (int k = 0; k < p.n; ++k) total *= static_cast<std::size_t>(p.side);

  // 1-D stiffness and mass symbols of the multilinear element.
  const auto s = static_cast<std::size_t>(p.side);
  std::vector<double> stiff(s), mass(s);
  for (std::size_t j = 0; j < s; ++j) {
    const double c = std::cos(std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(p.side + 1));
    stiff[j] = 2.0 - 2.0 * c;
    mass[j] = (4.0 + 2.0 * c) / 6.0;
  }
  const double scale = std::pow(grid.spacing(), p.n - 2) * std::pow(2.0 * static_cast<double>(p.side + 1), p.n);
  p.inverse.resize(total);
  std::vector<std::size_t> j(dn, 0);
  for (std::size_t i = 0; i < total; ++i) {
    double lambda = 0.0;
    for (std::size_t k = 0; k < dn; ++k) {
      double term = stiff[j[k]];
      for (std::size_t l = 0; l < dn; ++l)
        if (l != k) term *= mass[j[l]];
      lambda += term;
    }
    p.inverse[i] = 1.0 / (lambda * scale);
    for (std::size_t k = 0; k < dn && ++j[k] == s; ++k) j[k] = 0;
  }

  const auto strides = grid.strides();
  std::int64_t base = 0;
  for (int k = 0; k < p.n; ++k) base += strides[static_cast<std::size_t>(k)];
  std::vector<std::int64_t> r(dn, 0);
  const std::size_t row_count = total / s;
  p.rows.resize(row_count);
  for (std::size_t i = 0; i < row_count; ++i) {
    std::int64_t node = base;
    for (std::size_t k = 1; k < dn; ++k) node += r[k] * strides[k];
    p.rows[i] = node;
    for (std::size_t k = 1; k < dn && ++r[k] == p.side; ++k) r[k] = 0;
  }

  p.buffer = fftw_alloc_real(total);
  if (p.buffer == nullptr) throw std::bad_alloc();
  std::vector<int> dims(dn, static_cast<int>(p.side));
  std::vector<fftw_r2r_kind> kinds(dn, FFTW_RODFT00);
  p.plan = fftw_plan_r2r(p.n, dims.data(), p.buffer, p.buffer, kinds.data(), FFTW_ESTIMATE);
  if (p.plan == nullptr) throw Error(ErrorCode::InvalidGeometry, "sine transform planning failed");
}

PoissonPreconditioner::~PoissonPreconditioner() = default;

void PoissonPreconditioner::apply(std::span<const double> g, std::span<double> out) const {
  const Impl& p = *impl_;
  const auto tags = p.grid->tags();
  const std::int64_t s = p.side;
  double* buf = p.buffer;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const std::int64_t row = p.rows[r];
    double* dst = buf + static_cast<std::int64_t>(r) * s;
    for (std::int64_t j = 0; j < s; ++j)
      dst[j] = tags[static_cast<std::size_t>(row + j)] == NodeTag::Interior ? g[static_cast<std::size_t>(row + j)] : 0.0;
  }
  fftw_execute(p.plan);
  for (std::size_t i = 0; i < p.inverse.size(); ++i) buf[i] *= p.inverse[i];
  fftw_execute(p.plan);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const std::int64_t row = p.rows[r];
    const double* src = buf + static_cast<std::int64_t>(r) * s;
    for (std::int64_t j = 0; j < s; ++j)
      if (tags[static_cast<std::size_t>(row + j)] == NodeTag::Interior) out[static_cast<std::size_t>(row + j)] = src[j];
  }
}

}  // namespace pmc
