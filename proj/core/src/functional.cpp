#include "pmc/functional.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "cell_kernel.hpp"
#include "pmc/error.hpp"
#include "pmc/parallel.hpp"

namespace pmc {
namespace {

using detail::GaussCell;
using detail::with_dimension;

constexpr std::size_t kBlock = 4096;
constexpr int kMaxDim = CellQuadrature::kMaxDimension;
constexpr double kFeasibleSlack = 1e-12;
constexpr double kDegenerate = 1e-14;

// 1 - sqrt(1 - s) without cancellation for small s.
inline double area_integrand(double s) {
  if (s >= 1.0) return 1.0;
  return s / (1.0 + std::sqrt(1.0 - s));
}

template <int N>
double mean_area(const GaussCell<N>& cell, const double* weight) {
  double a = 0.0;
  if (weight) {
    for (int q = 0; q < GaussCell<N>::kCorners; ++q)
      if (weight[q] > 0.0) a += weight[q] * area_integrand(cell.sq[q]);
  } else {
    for (int q = 0; q < GaussCell<N>::kCorners; ++q) a += area_integrand(cell.sq[q]);
  }
  return a / GaussCell<N>::kCorners;
}

template <class F>
double block_sum(std::size_t count, F&& per_cell) {
  std::vector<double> partial(block_count(count, kBlock), 0.0);
  for_each_block(count, kBlock, [&](std::size_t b, std::size_t e, std::size_t blk) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += per_cell(i);
    partial[blk] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

[[noreturn]] void throw_infeasible(const ExteriorGrid& grid, std::int64_t cell, double norm) {
  const Point x = grid.node_point(cell);
  std::string where;
  for (double c : x) where += std::to_string(c + 0.5 * grid.spacing()) + " ";
  throw Error(ErrorCode::InfeasibleField, "cell gradient " + std::to_string(norm) + " > 1 at centre " + where);
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

EnergyModel::EnergyModel(std::shared_ptr<const ExteriorGrid> grid, CurvatureSpec spec)
    : grid_(std::move(grid)), spec_(std::move(spec)) {
  const int n = grid_->dimension();
  if (n < 2 || n > kMaxDim) throw Error(ErrorCode::InvalidGeometry, "supported dimensions are 2.." + std::to_string(kMaxDim));
  const auto cells = grid_->cells();
  Point x(static_cast<std::size_t>(n));
  classify_cut_cells();
  const bool factored =
      spec_.form() == CurvatureSpec::Form::XOnly || spec_.form() == CurvatureSpec::Form::Separable;
  if (factored) x_factor_.resize(cells.size());
  if (spec_.form() != CurvatureSpec::Form::Zero) {
    const double s = spec_.exponent();
    double sum = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      grid_->cell_center(cells[i], x);
      if (factored) x_factor_[i] = spec_.x_factor(x);
      sum += std::pow(spec_.envelope(x), s) * exterior_fraction(i);
    }
    envelope_norm_ = std::pow(sum * grid_->cell_volume(), 1.0 / s);
  }
}

void EnergyModel::classify_cut_cells() {
  const auto cells = grid_->cells();
  const int n = grid_->dimension();
  const auto dn = static_cast<std::size_t>(n);
  const double h = grid_->spacing();
  const double half_diagonal = 0.5 * std::sqrt(static_cast<double>(n)) * h * (1.0 + 1e-9);
  int m = 2;
  while (std::pow(m + 2, n) <= 4096.0) m += 2;
  const int points = 1 << n;
  const auto per_octant = std::pow(m / 2, n);
  cut_slot_.assign(cells.size(), -1);
  Point centre(dn), lower(dn), y(dn);
  std::vector<int> j(dn);
  std::vector<double> count(static_cast<std::size_t>(points));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    grid_->cell_center(cells[i], centre);
    if (grid_->obstacles().signed_distance(centre).first >= half_diagonal) continue;
    for (std::size_t k = 0; k < dn; ++k) lower[k] = centre[k] - 0.5 * h;
    std::fill(count.begin(), count.end(), 0.0);
    std::fill(j.begin(), j.end(), 0);
    while (true) {
      int q = 0;
      for (std::size_t k = 0; k < dn; ++k) {
        y[k] = lower[k] + (j[k] + 0.5) * h / m;
        if (2 * j[k] >= m) q |= 1 << k;
      }
      if (grid_->obstacles().signed_distance(y).first > 0.0) count[static_cast<std::size_t>(q)] += 1.0;
      std::size_t k = 0;
      while (k < dn && j[k] == m - 1) j[k++] = 0;
      if (k == dn) break;
      ++j[k];
    }
    double total = 0.0;
    bool full = true;
    for (double& c : count) {
      c /= per_octant;
      total += c;
      full = full && c == 1.0;
    }
    if (full) continue;
    cut_slot_[i] = static_cast<std::int32_t>(cut_fraction_.size());
    cut_fraction_.push_back(total / points);
    cut_weights_.insert(cut_weights_.end(), count.begin(), count.end());
  }
}

double EnergyModel::cell_potential(std::size_t cell, double t) const {
  switch (spec_.form()) {
    case CurvatureSpec::Form::Zero: return 0.0;
    case CurvatureSpec::Form::XOnly: return x_factor_[cell] * t;
    case CurvatureSpec::Form::Separable: return x_factor_[cell] * spec_.t_primitive(t);
    case CurvatureSpec::Form::General: {
      std::array<double, kMaxDim> x{};
      const std::span<double> xs(x.data(), static_cast<std::size_t>(grid_->dimension()));
      grid_->cell_center(grid_->cells()[cell], xs);
      return spec_.G(xs, t);
    }
  }
  return 0.0;
}

double EnergyModel::cell_source(std::size_t cell, double t) const {
  switch (spec_.form()) {
    case CurvatureSpec::Form::Zero: return 0.0;
    case CurvatureSpec::Form::XOnly: return x_factor_[cell];
    case CurvatureSpec::Form::Separable: return x_factor_[cell] * spec_.t_factor(t);
    case CurvatureSpec::Form::General: {
      std::array<double, kMaxDim> x{};
      const std::span<double> xs(x.data(), static_cast<std::size_t>(grid_->dimension()));
      grid_->cell_center(grid_->cells()[cell], xs);
      return spec_.dimension() * spec_.H(xs, t);
    }
  }
  return 0.0;
}

GradientStats EnergyModel::gradient_stats(std::span<const double> u, double near_threshold) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  std::vector<GradientStats> partial(block_count(cells.size(), kBlock));
  const double thr_sq = near_threshold * near_threshold;
  with_dimension(grid_->dimension(), [&]<int N>() {
    for_each_block(cells.size(), kBlock, [&](std::size_t b, std::size_t e, std::size_t blk) {
      GradientStats st;
      GaussCell<N> cell;
      for (std::size_t i = b; i < e; ++i) {
        cell.load(u.data(), cells[i], offsets, inv_h);
        if (const double* w = cut_weights(i)) cell.mask(w);
        if (cell.max_sq > st.max_norm) {
          st.max_norm = cell.max_sq;
          st.worst_cell = cells[i];
        }
        if (cell.max_sq > thr_sq) ++st.near_light;
      }
      partial[blk] = st;
    });
  });
  GradientStats out;
  for (const GradientStats& p : partial) {
    if (p.max_norm > out.max_norm) {
      out.max_norm = p.max_norm;
      out.worst_cell = p.worst_cell;
    }
    out.near_light += p.near_light;
  }
  out.max_norm = std::sqrt(out.max_norm);
  return out;
}

std::vector<double> EnergyModel::cell_slopes(std::span<const double> u) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  std::vector<double> out(cells.size());
  with_dimension(grid_->dimension(), [&]<int N>() {
    for_each_block(cells.size(), kBlock, [&](std::size_t b, std::size_t e, std::size_t) {
      GaussCell<N> cell;
      for (std::size_t i = b; i < e; ++i) {
        cell.load(u.data(), cells[i], offsets, inv_h);
        if (const double* w = cut_weights(i)) cell.mask(w);
        out[i] = std::sqrt(cell.max_sq);
      }
    });
  });
  return out;
}

double EnergyModel::area(std::span<const double> u) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  const double limit = (1.0 + kFeasibleSlack) * (1.0 + kFeasibleSlack);
  const double sum = with_dimension(grid_->dimension(), [&]<int N>() {
    return block_sum(cells.size(), [&](std::size_t i) {
      GaussCell<N> cell;
      cell.load(u.data(), cells[i], offsets, inv_h);
      const double* w = cut_weights(i);
      if (w) cell.mask(w);
      if (cell.max_sq > limit) throw_infeasible(*grid_, cells[i], std::sqrt(cell.max_sq));
      return mean_area(cell, w);
    });
  });
  return sum * grid_->cell_volume();
}

std::optional<double> EnergyModel::total_if_within(std::span<const double> u, double max_gradient,
                                                   double* max_slope) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  const double limit = max_gradient * max_gradient;
  const bool has_source = spec_.form() != CurvatureSpec::Form::Zero;
  std::atomic<bool> ok = true;
  std::vector<double> block_max(block_count(cells.size(), kBlock), 0.0);
  std::vector<double> partial(block_max.size(), 0.0);
  with_dimension(grid_->dimension(), [&]<int N>() {
    for_each_block(cells.size(), kBlock, [&](std::size_t b, std::size_t e, std::size_t blk) {
      GaussCell<N> cell;
      double sum = 0.0;
      double worst = 0.0;
      for (std::size_t i = b; i < e && ok.load(std::memory_order_relaxed); ++i) {
        cell.load(u.data(), cells[i], offsets, inv_h);
        const double* w = cut_weights(i);
        if (w) cell.mask(w);
        worst = std::max(worst, cell.max_sq);
        if (cell.max_sq > limit) {
          ok.store(false, std::memory_order_relaxed);
          break;
        }
        sum += mean_area(cell, w);
        if (has_source) sum += cell_potential(i, cell.mean) * exterior_fraction(i);
      }
      partial[blk] = sum;
      block_max[blk] = worst;
    });
  });
  if (!ok) return std::nullopt;
  if (max_slope) *max_slope = std::sqrt(max_of(block_max));
  double total = 0.0;
  for (double p : partial) total += p;
  return total * grid_->cell_volume();
}

std::optional<double> EnergyModel::change_if_within(std::span<const double> u, std::span<const double> v,
                                                    double max_gradient, double* max_slope) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  const double limit = max_gradient * max_gradient;
  const bool has_source = spec_.form() != CurvatureSpec::Form::Zero;
  std::vector<double> dv(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) dv[i] = v[i] - u[i];
  std::atomic<bool> ok = true;
  std::vector<double> block_max(block_count(cells.size(), kBlock), 0.0);
  std::vector<double> partial(block_max.size(), 0.0);
  with_dimension(grid_->dimension(), [&]<int N>() {
    for_each_block(cells.size(), kBlock, [&](std::size_t b, std::size_t e, std::size_t blk) {
      GaussCell<N> from, to, step;
      double sum = 0.0;
      double worst = 0.0;
      for (std::size_t i = b; i < e && ok.load(std::memory_order_relaxed); ++i) {
        to.load(v.data(), cells[i], offsets, inv_h);
        const double* w = cut_weights(i);
        if (w) to.mask(w);
        worst = std::max(worst, to.max_sq);
        if (to.max_sq > limit) {
          ok.store(false, std::memory_order_relaxed);
          break;
        }
        from.load(u.data(), cells[i], offsets, inv_h);
        step.load(dv.data(), cells[i], offsets, inv_h);
        double a = 0.0;
        for (int q = 0; q < GaussCell<N>::kCorners; ++q) {
          if (w && !(w[q] > 0.0)) continue;
          double ds = 0.0;
          for (int k = 0; k < N; ++k) {
            const double d = step.gradient(q, k);
            ds += d * (2.0 * from.gradient(q, k) + d);
          }
          const double term = ds / (std::sqrt(1.0 - from.sq[q]) + std::sqrt(1.0 - to.sq[q]));
          a += w ? w[q] * term : term;
        }
        sum += a / GaussCell<N>::kCorners;
        if (has_source) {
          const double p = spec_.form() == CurvatureSpec::Form::XOnly
                               ? x_factor_[i] * step.mean
                               : cell_potential(i, to.mean) - cell_potential(i, from.mean);
          sum += p * exterior_fraction(i);
        }
      }
      partial[blk] = sum;
      block_max[blk] = worst;
    });
  });
  if (!ok) return std::nullopt;
  if (max_slope) *max_slope = std::sqrt(max_of(block_max));
  double total = 0.0;
  for (double p : partial) total += p;
  return total * grid_->cell_volume();
}

double EnergyModel::potential(std::span<const double> u) const {
  if (spec_.form() == CurvatureSpec::Form::Zero) return 0.0;
  const auto cells = grid_->cells();
  const double sum = block_sum(cells.size(), [&](std::size_t i) {
    return cell_potential(i, cell_average(*grid_, u, cells[i])) * exterior_fraction(i);
  });
  return sum * grid_->cell_volume();
}

double EnergyModel::gradient_l2(std::span<const double> u) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  const double sum = with_dimension(grid_->dimension(), [&]<int N>() {
    return block_sum(cells.size(), [&](std::size_t i) {
      GaussCell<N> cell;
      cell.load(u.data(), cells[i], offsets, inv_h);
      const double* w = cut_weights(i);
      double s = 0.0;
      for (int q = 0; q < GaussCell<N>::kCorners; ++q) s += w ? w[q] * cell.sq[q] : cell.sq[q];
      return s / GaussCell<N>::kCorners;
    });
  });
  return std::sqrt(sum * grid_->cell_volume());
}

double EnergyModel::conjugate_norm(std::span<const double> u) const {
  const auto cells = grid_->cells();
  const double sp = spec_.conjugate_exponent();
  if (std::isinf(sp)) {
    double m = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (exterior_fraction(i) > 0.0) m = std::max(m, std::fabs(cell_average(*grid_, u, cells[i])));
    return m;
  }
  const double sum = block_sum(cells.size(), [&](std::size_t i) {
    return std::pow(std::fabs(cell_average(*grid_, u, cells[i])), sp) * exterior_fraction(i);
  });
  return std::pow(sum * grid_->cell_volume(), 1.0 / sp);
}

EnergyBreakdown EnergyModel::breakdown(std::span<const double> u) const {
  EnergyBreakdown b;
  b.area = area(u);
  b.potential = potential(u);
  b.total = b.area + b.potential;
  b.gradient_l2 = gradient_l2(u);
  b.conjugate_norm = conjugate_norm(u);
  return b;
}

double EnergyModel::value_and_gradient(std::span<const double> u, std::span<double> grad, double* max_slope) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  const double vol = grid_->cell_volume();
  const bool has_source = spec_.form() != CurvatureSpec::Form::Zero;

  const int threads = worker_threads();
  std::vector<std::vector<double>> extra;
  if (threads > 1) extra.assign(static_cast<std::size_t>(threads - 1), std::vector<double>(grad.size(), 0.0));
  std::fill(grad.begin(), grad.end(), 0.0);

  std::vector<double> partial(block_count(cells.size(), kBlock), 0.0);
  std::vector<double> block_max(partial.size(), 0.0);
  with_dimension(grid_->dimension(), [&]<int N>() {
    constexpr int kPoints = GaussCell<N>::kCorners;
    const double corner_weight = vol / kPoints;
    for_each_block(cells.size(), kBlock, [&](std::size_t b, std::size_t e, std::size_t blk) {
      const std::size_t owner = blk % static_cast<std::size_t>(threads);
      double* out = owner == 0 ? grad.data() : extra[owner - 1].data();
      double energy = 0.0;
      double worst = 0.0;
      GaussCell<N> cell;
      double flux[kPoints];
      for (std::size_t i = b; i < e; ++i) {
        const std::int64_t lower = cells[i];
        cell.load(u.data(), lower, offsets, inv_h);
        const double* w = cut_weights(i);
        if (w) cell.mask(w);
        if (cell.max_sq >= (1.0 - kDegenerate) * (1.0 - kDegenerate))
          throw Error(ErrorCode::DegenerateCell, "cell gradient " + std::to_string(std::sqrt(cell.max_sq)) +
                                                     " at node " + std::to_string(lower) + " touches the light cone");
        worst = std::max(worst, cell.max_sq);
        if (w) {
          for (int q = 0; q < kPoints; ++q) {
            if (w[q] > 0.0) {
              const double root = std::sqrt(1.0 - cell.sq[q]);
              energy += w[q] * cell.sq[q] / (1.0 + root);
              flux[q] = w[q] * corner_weight / root;
            } else {
              flux[q] = 0.0;
            }
          }
        } else {
          for (int q = 0; q < kPoints; ++q) {
            const double root = std::sqrt(1.0 - cell.sq[q]);
            energy += cell.sq[q] / (1.0 + root);
            flux[q] = corner_weight / root;
          }
        }
        double src = 0.0;
        if (has_source) {
          const double mean = cell.mean;
          const double frac = exterior_fraction(i);
          energy += kPoints * cell_potential(i, mean) * frac;
          src = cell_source(i, mean) * corner_weight * frac;
        }
        cell.scatter_scaled(flux, inv_h, src, out, lower, offsets);
      }
      partial[blk] = energy / kPoints;
      block_max[blk] = worst;
    });
  });
  for (const auto& buf : extra)
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += buf[i];
  if (constraints_) constraints_->fold(grad);
  const auto tags = grid_->tags();
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (tags[i] != NodeTag::Interior) grad[i] = 0.0;
  if (max_slope) *max_slope = std::sqrt(max_of(block_max));
  double total = 0.0;
  for (double p : partial) total += p;
  return total * vol;
}

double EnergyModel::first_variation(std::span<const double> u, std::span<const double> v) const {
  const auto cells = grid_->cells();
  const std::int64_t* offsets = grid_->corner_offsets().data();
  const double inv_h = 1.0 / grid_->spacing();
  const bool has_source = spec_.form() != CurvatureSpec::Form::Zero;
  const double sum = with_dimension(grid_->dimension(), [&]<int N>() {
    return block_sum(cells.size(), [&](std::size_t i) {
      GaussCell<N> cu;
      GaussCell<N> cv;
      cu.load(u.data(), cells[i], offsets, inv_h);
      const double* w = cut_weights(i);
      if (w) cu.mask(w);
      if (cu.max_sq >= (1.0 - kDegenerate) * (1.0 - kDegenerate))
        throw Error(ErrorCode::DegenerateCell,
                    "cell gradient touches the light cone at node " + std::to_string(cells[i]));
      cv.load(v.data(), cells[i], offsets, inv_h);
      double term = 0.0;
      for (int q = 0; q < GaussCell<N>::kCorners; ++q) {
        const double wq = w ? w[q] : 1.0;
        if (wq == 0.0) continue;
        double dot = 0.0;
        for (int k = 0; k < N; ++k) dot += cu.gradient(q, k) * cv.gradient(q, k);
        term += wq * dot / std::sqrt(1.0 - cu.sq[q]);
      }
      term /= GaussCell<N>::kCorners;
      if (has_source) term += cell_source(i, cu.mean) * cv.mean * exterior_fraction(i);
      return term;
    });
  });
  return sum * grid_->cell_volume();
}

double EnergyModel::frozen(std::span<const double> v, std::span<const double> u_ref) const {
  double value = area(v);
  if (spec_.form() == CurvatureSpec::Form::Zero) return value;
  const auto cells = grid_->cells();
  const double sum = block_sum(cells.size(), [&](std::size_t i) {
    return cell_source(i, cell_average(*grid_, u_ref, cells[i])) * cell_average(*grid_, v, cells[i]) *
           exterior_fraction(i);
  });
  return value + sum * grid_->cell_volume();
}

double area_energy(const ScalarField& u) {
  return EnergyModel(u.grid_ptr(), CurvatureSpec::zero(u.grid().dimension())).area(u.values());
}

double potential_G(std::span<const double> x, double t, const CurvatureSpec& spec) { return spec.G(x, t); }

PotentialEnergy potential_energy(const ScalarField& u, const CurvatureSpec& spec) {
  const EnergyModel model(u.grid_ptr(), spec);
  PotentialEnergy p;
  p.value = model.potential(u.values());
  p.bound = model.envelope_norm() * model.conjugate_norm(u.values());
  p.within_bound = std::fabs(p.value) <= p.bound + 1e-12 * (1.0 + p.bound);
  return p;
}

EnergyBreakdown total_energy(const ScalarField& u, const CurvatureSpec& spec) {
  return EnergyModel(u.grid_ptr(), spec).breakdown(u.values());
}

double first_variation(const ScalarField& u, const ScalarField& v, const CurvatureSpec& spec) {
  return EnergyModel(u.grid_ptr(), spec).first_variation(u.values(), v.values());
}

ScalarField residual_gradient(const ScalarField& u, const CurvatureSpec& spec) {
  ScalarField g(u.grid_ptr());
  EnergyModel(u.grid_ptr(), spec).value_and_gradient(u.values(), g.values());
  return g;
}

double frozen_energy(const ScalarField& v, const ScalarField& u_ref, const CurvatureSpec& spec) {
  return EnergyModel(v.grid_ptr(), spec).frozen(v.values(), u_ref.values());
}

CoercivityCheck coercivity_bound(const ScalarField& u, const CurvatureSpec& spec) {
  const EnergyModel model(u.grid_ptr(), spec);
  const EnergyBreakdown b = model.breakdown(u.values());
  CoercivityCheck c;
  c.lhs = b.total;
  c.rhs = 0.5 * b.gradient_l2 * b.gradient_l2 - model.envelope_norm() * b.conjugate_norm;
  c.holds = c.lhs >= c.rhs - 1e-12 * (1.0 + std::fabs(c.rhs));
  return c;
}

double residual_norm(const ExteriorGrid& grid, std::span<const double> grad) {
  const double vol = grid.cell_volume();
  double s = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (grid.tags()[i] == NodeTag::Interior) s += grad[i] * grad[i];
  return std::sqrt(s / vol);
}

}  // namespace pmc
