#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dqsg/disorder.hpp"
#include "dqsg/estimate.hpp"
#include "dqsg/model.hpp"
#include "dqsg/rng.hpp"

namespace dqsg {

// unit_interval: law of a spin variance X in (0,1];
// log_nonneg:    law of -log X in [0, inf).
enum class PopulationDomain { unit_interval, log_nonneg };

std::string_view to_string(PopulationDomain d);

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Fixed-size empirical sample standing in for a law.
struct Population {
  std::vector<double> values;
  PopulationDomain domain = PopulationDomain::unit_interval;
  double rate = 0.0;  // Poisson rate alpha*x*p it was produced under
  std::size_t generation = 0;

  static Population constant(double value, std::size_t size,
                             PopulationDomain domain = PopulationDomain::unit_interval);
  double mean() const;
};

// Push-forward of -log: unit_interval <-> log_nonneg.
Population to_log_domain(const Population& pop);
Population from_log_domain(const Population& pop);

// One synchronous generation of
//   X' = (1 + sum_{k<R} 2 beta zeta_k^2 / (1 + 2 beta sum_{r<p-1} X_{k,r} xi_{k,r}^2))^{-1}
// with R ~ Poisson(alpha * rate_scale * p) and X_{k,r} resampled from `pop`.
Population apply_T(const Population& pop, const ModelParams& params,
                   const DisorderSpec& disorder, double rate_scale, std::size_t out_size,
                   const Stream& stream);

// Conjugate map on -log X:
//   Y' = log(1 + sum_{k<R} zeta_k^2 / (gamma + sum_r xi_{k,r}^2 exp(-Y_{k,r}))),
// gamma = 1/(2 beta). Throws DomainError for beta == 0.
Population apply_conjugate_T(const Population& pop, const ModelParams& params,
                             const DisorderSpec& disorder, double rate_scale,
                             std::size_t out_size, const Stream& stream);

// W_q between two empirical laws via the quantile coupling (exact sort
// coupling for equal sizes). Throws DomainError on mismatched domains.
double wasserstein(const Population& a, const Population& b, double q = 1.0);
double wasserstein(std::span<const double> a, std::span<const double> b, double q = 1.0);

struct RdeOptions {
  std::size_t pop_size = 100000;
  double tol = 1e-3;
  std::size_t max_gens = 500;
  std::size_t window = 10;
};

struct RdeReport {
  Population population;
  std::size_t generations = 0;
  std::vector<double> gaps;  // W1 between consecutive generations
  // W1 between the pooled last `window` generations and the pooled `window`
  // before them; entry k belongs to generation 2*window + k.
  std::vector<double> window_gaps;
  std::vector<double> window_pool;  // sorted values of the last `window` generations
  bool converged = false;
  double tol = 0.0;
};

// Iterates apply_T until `window` consecutive window gaps fall below tol.
//
// Consecutive generations of a size-P population differ by sampling noise of
// order P^{-1/2} even at the fixed point, which for spread-out laws sits above
// the default tol. Comparing pooled windows of generations removes most of
// that floor while still detecting drift.
//
// Generation g draws from stream.child(g). For beta == 0 the image of T is
// already the fixed point (all ones), so one generation is reported converged.
RdeReport solve_fixed_point(const ModelParams& params, const DisorderSpec& disorder,
                            double rate_scale, const RdeOptions& options, const Population& init,
                            const Stream& stream);

Estimate contraction_factor(const ModelParams& params, const DisorderSpec& disorder, double q,
                            std::size_t n_mc, const Stream& stream);

struct ContractiveQ {
  std::optional<double> q;  // smallest grid q with estimate + 3 SE < 1
  std::vector<double> grid;
  std::vector<Estimate> estimates;
};

// Every grid point uses the same stream, so the estimates are coupled and
// monotone in q.
ContractiveQ find_contractive_q(const ModelParams& params, const DisorderSpec& disorder,
                                std::span<const double> q_grid, std::size_t n_mc,
                                const Stream& stream);

// (U, X) pairs for the p = 2 mean/variance consistency equation.
struct PairSample {
  double u = 1.0;
  double x = 1.0;
};

// One generation of
//   U' = 1 - sum_k 2 beta zeta_k xi_k X_k U_k / (1 + 2 beta xi_k^2 X_k)
//   X' = (1 + sum_k 2 beta zeta_k^2 / (1 + 2 beta xi_k^2 X_k))^{-1}
// with R ~ Poisson(2 alpha) and the same (zeta_k, xi_k, U_k, X_k) in both.
std::vector<PairSample> pair_rde_step(std::span<const PairSample> pairs,
                                      const ModelParams& params, const DisorderSpec& disorder,
                                      std::size_t out_size, const Stream& stream);

// Text format: header "# domain=<d> rate=<r> generation=<g> size=<n>", then
// one value per line with 17 significant digits.
void write_population(std::ostream& os, const Population& pop);
Population read_population(std::istream& is);

}  // namespace dqsg
