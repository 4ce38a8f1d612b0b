#include "dqsg/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dqsg {

QuadratureRule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; roots are
  // symmetric so only half are computed.
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      dp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / dp;
      if (std::abs(z - z_prev) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    // z is the i-th largest root; map t -> (t + 1)/2 and halve the weight.
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
    rule.nodes[i] = 0.5 * (1.0 - z);
    rule.weights[n - 1 - i] = 0.5 * w;
    rule.weights[i] = 0.5 * w;
  }
  return rule;
}

QuadratureRule midpoint(std::size_t n) {
  if (n == 0) throw std::invalid_argument("midpoint: need at least one node");
  QuadratureRule rule;
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    rule.weights.push_back(1.0 / static_cast<double>(n));
  }
  return rule;
}

void validate(const QuadratureRule& rule) {
  if (rule.nodes.empty() || rule.nodes.size() != rule.weights.size())
    throw std::invalid_argument("quadrature: nodes and weights must be nonempty and equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    if (!(rule.nodes[i] > 0.0 && rule.nodes[i] <= 1.0))
      throw std::invalid_argument("quadrature: nodes must lie in (0, 1]");
    if (i > 0 && !(rule.nodes[i] > rule.nodes[i - 1]))
      throw std::invalid_argument("quadrature: nodes must be strictly increasing");
    if (!(rule.weights[i] > 0.0)) throw std::invalid_argument("quadrature: weights must be positive");
    sum += rule.weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("quadrature: weights must sum to 1");
}

}  // namespace dqsg
