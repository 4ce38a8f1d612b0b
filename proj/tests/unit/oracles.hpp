#pragma once
// Test-side reference computations. Deliberately independent of the library:
// their own engines, std distributions, dense algebra.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

// Draws of (1 + 2 beta sum_{k<R} g_k^2)^{-1}, R ~ Poisson(rate), g rademacher
// or gaussian(sigma).
inline std::vector<double> direct_p1_law(double rate, double beta, bool gaussian, double sigma,
                                         std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::poisson_distribution<int> pois(rate);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> out(n);
  for (auto& v : out) {
    const int r = pois(eng);
    double chi = 0.0;
    for (int k = 0; k < r; ++k) {
      const double g = gaussian ? normal(eng) : 1.0;
      chi += g * g;
    }
    v = 1.0 / (1.0 + 2.0 * beta * chi);
  }
  return out;
}

inline double w1_sorted(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Unequal sizes: integrate |F_a^{-1} - F_b^{-1}| over the merged breakpoints.
  double total = 0.0, t = 0.0;
  std::size_t i = 0, j = 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double next = std::min((i + 1) / na, (j + 1) / nb);
    total += (next - t) * std::abs(a[i] - b[j]);
    t = next;
    if ((i + 1) / na <= next) ++i;
    if ((j + 1) / nb <= next) ++j;
  }
  return total;
}

// Plain conjugate gradients on a dense SPD matrix.
inline Eigen::VectorXd conjugate_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b, d = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < 10 * b.size() && rr > 1e-30; ++it) {
    const Eigen::VectorXd ad = a * d;
    const double step = rr / d.dot(ad);
    x += step * d;
    r -= step * ad;
    const double rr_new = r.squaredNorm();
    d = r + (rr_new / rr) * d;
    rr = rr_new;
  }
  return x;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace oracle
