#pragma once

#include <cstddef>
#include <vector>

namespace dqsg {

// Rule on (0,1]: nodes strictly increasing, weights positive, summing to 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre mapped from [-1,1] to (0,1); all nodes interior.
QuadratureRule gauss_legendre(std::size_t n);

// Midpoints (i + 1/2)/n with equal weights.
QuadratureRule midpoint(std::size_t n);

void validate(const QuadratureRule& rule);  // throws std::invalid_argument

}  // namespace dqsg
