#pragma once

#include <memory>
#include <span>
#include <string_view>

#include "pmc/geometry.hpp"

namespace pmc {

enum class Preconditioner { Jacobi, Poisson };
std::string_view to_string(Preconditioner p);

/// Inverse of the multilinear-element Laplacian on the whole box with zero
/// values on the box surface, diagonalised by sine transforms. `apply`
/// restricts input and output to the free nodes, so the composite map is
/// symmetric positive definite on them. Not safe for concurrent use.
class PoissonPreconditioner {
public:
  explicit PoissonPreconditioner(const ExteriorGrid& grid);
  ~PoissonPreconditioner();
  PoissonPreconditioner(const PoissonPreconditioner&) = delete;
  PoissonPreconditioner& operator=(const PoissonPreconditioner&) = delete;

  /// out = M A^{-1} M g with M the free-node mask.
  void apply(std::span<const double> g, std::span<double> out) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pmc
