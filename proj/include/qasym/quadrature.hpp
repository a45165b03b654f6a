#pragma once

#include <cstddef>
#include <vector>

namespace qasym {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(std::size_t n);

}  // namespace qasym
