#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dqsg/disorder.hpp"
#include "dqsg/estimate.hpp"
#include "dqsg/rng.hpp"
#include "dqsg/spd_solver.hpp"

namespace dqsg {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Hamiltonian -H(s) = -beta sum_k (sum_r g_{k,I(k,r)} s_{I(k,r)})^2 + h sum_i s_i
// with M ~ Poisson(alpha N) clauses of arity p.
struct ModelParams {
  double alpha = 1.0;
  double beta = 1.0;
  double h = 0.0;
  int p = 2;

  void validate() const;  // throws std::invalid_argument naming the field
  bool operator==(const ModelParams&) const = default;
};

// One p-site interaction: the nonzero entries of v_k. Sites are 0-based.
struct Clause {
  std::vector<std::size_t> sites;
  std::vector<double> weights;
};

// A_N = I + 2 beta sum_k v_k v_k^T for one realization.
struct FactorModel {
  std::size_t n_sites = 0;
  std::vector<Clause> clauses;
  ModelParams params;
  DisorderSpec disorder = DisorderSpec::rademacher();
};

// Poisson-thinned view of A_N around the last site (index n_sites-1):
// A = B + 2 beta sum_{k<R} w_k w_k^T, where `bulk` holds the clauses that avoid
// the last site and each boundary clause is (last site, zeta_k) followed by
// its p-1 interior sites with weights xi_{k,r}.
struct CavitySplit {
  FactorModel bulk;  // n_sites == N-1
  std::vector<Clause> boundary;
  std::size_t n_sites = 0;
};

FactorModel sample_model(const ModelParams& params, const DisorderSpec& disorder,
                         std::size_t n_sites, const Stream& stream);

SparseMatrix assemble_matrix(const FactorModel& model);

double log_det(const FactorModel& model, Backend backend = Backend::automatic);

// Independent route through det(S + c v v^T) = det(S) (1 + c v^T S^{-1} v),
// keeping S^{-1} dense via Sherman-Morrison. O(N^2) per clause; N <= 200.
double log_det_incremental(const FactorModel& model);
inline constexpr std::size_t kIncrementalMaxSites = 200;

std::vector<double> inverse_diagonal(const FactorModel& model, std::span<const std::size_t> sites,
                                     Backend backend = Backend::automatic);
std::vector<double> inverse_diagonal(const FactorModel& model,
                                     Backend backend = Backend::automatic);  // all sites

// (1^T A^{-1} 1) / N
double ones_quadratic_form(const FactorModel& model, Backend backend = Backend::automatic);

// F_N = (h^2/2) 1^T A^{-1} 1 / N + log det A / (2N)
double finite_free_energy(const FactorModel& model, Backend backend = Backend::automatic);
// (1/N) log of the Gaussian integral itself, (h^2/2) 1^T A^{-1} 1 / N - log det A / (2N).
// The determinant enters with the opposite sign to F_N above; F_N keeps the
// convention under which it converges to limiting_free_energy.
double log_partition(const FactorModel& model, Backend backend = Backend::automatic);

// Gibbs mean h A^{-1} 1.
Eigen::VectorXd spin_mean(const FactorModel& model);

// Rows are i.i.d. draws from N(h A^{-1} 1, A^{-1}).
Eigen::MatrixXd sample_spins(const FactorModel& model, std::size_t n_samples,
                             const Stream& stream);

struct OffdiagMoments {
  Estimate a12;          // A^{-1}_{12}
  Estimate a12_a13;      // A^{-1}_{12} A^{-1}_{13}
  Estimate a12_a34;      // A^{-1}_{12} A^{-1}_{34}
  Estimate scaled_sq12;  // (N-1) (A^{-1}_{12})^2
};

OffdiagMoments offdiag_moments(const ModelParams& params, const DisorderSpec& disorder,
                               std::size_t n_sites, std::size_t n_replicates,
                               const Stream& stream);

CavitySplit cavity_split(const ModelParams& params, const DisorderSpec& disorder,
                         std::size_t n_sites, const Stream& stream);

// Bulk plus boundary clauses as one N-site model.
FactorModel reassemble(const CavitySplit& split);

struct WoodburyResidual {
  double residual = 0.0;  // |A^{-1}_NN - diagonal-only cavity approximation|
  double bound = 0.0;     // |zeta|^2 |E|_2
  double direct = 1.0;    // A^{-1}_NN from a factorization of A
  double approx = 1.0;
};

WoodburyResidual woodbury_residual(const CavitySplit& split);

}  // namespace dqsg
