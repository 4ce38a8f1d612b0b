#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dqsg/disorder.hpp"
#include "dqsg/estimate.hpp"
#include "dqsg/model.hpp"
#include "dqsg/rde.hpp"

namespace dqsg {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of log y on log x; needs >= 3 points, all positive.
SlopeFit slope_fit(std::span<const double> xs, std::span<const double> ys);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::span<const double> a, std::span<const double> b);
// One-sample statistic against a reference CDF.
double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf);

// Sample Pearson correlation and its SE sqrt((1 - r^2)/(n - 2)).
std::pair<double, double> correlation(std::span<const double> a, std::span<const double> b);

// All diagonal entries of A^{-1}, pooled over replicates (replicate i uses
// stream.child(i)).
std::vector<double> pooled_inverse_diagonals(const ModelParams& params,
                                             const DisorderSpec& disorder, std::size_t n_sites,
                                             std::size_t n_replicates, const Stream& stream);

double diag_law_distance(const ModelParams& params, const DisorderSpec& disorder,
                         std::size_t n_sites, std::size_t n_replicates,
                         const Population& fixed_point, const Stream& stream);

struct CorrelationReport {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> correlations;
  std::vector<double> std_errors;
  bool degenerate = false;  // some entry had variance < 1e-14
};

// Pairwise correlations of (A^{-1}_{11}, ..., A^{-1}_{nn}) across replicates.
CorrelationReport independence_check(const ModelParams& params, const DisorderSpec& disorder,
                                     std::size_t n_sites, std::size_t n_entries,
                                     std::size_t n_replicates, const Stream& stream);

struct PoissonUniformReport {
  double tv = 0.0;
  std::vector<double> pmf_l;        // M ~ Poisson(lambda), L | M ~ Unif{0..M}
  std::vector<double> pmf_l_prime;  // U ~ Unif[0,1], L' | U ~ Poisson(lambda U)
  Estimate p0_l;                    // empirical P(L = 0)
};

PoissonUniformReport poisson_uniform_check(double lambda, std::size_t n_samples,
                                           const Stream& stream);

}  // namespace dqsg
