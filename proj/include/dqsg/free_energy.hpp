#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dqsg/disorder.hpp"
#include "dqsg/estimate.hpp"
#include "dqsg/model.hpp"
#include "dqsg/quadrature.hpp"
#include "dqsg/rde.hpp"
#include "dqsg/stats.hpp"

namespace dqsg {

// E log(1 + 2 beta sum_{r<p} zeta_r^2 X_r), X_r resampled from `pop`.
Estimate edge_term(const Population& pop, const ModelParams& params, const DisorderSpec& disorder,
                   std::size_t n_mc, const Stream& stream);

struct LimitOptions {
  RdeOptions rde;
  std::size_t n_mc = 200000;
  bool warm_start = true;
  std::size_t jackknife_blocks = 20;
};

struct NodeResult {
  double x = 0.0;
  double rate = 0.0;  // alpha * x * p
  Estimate edge_term;
  bool converged = false;
  std::size_t generations = 0;
  double population_mean = 0.0;
};

struct LimitResult {
  Estimate value;
  Estimate h_term;  // (h^2/2) E X(1)
  Estimate mean_x1;
  std::vector<NodeResult> nodes;
  bool converged = true;
  std::vector<std::size_t> failing_nodes;  // indices into nodes; rule.size() marks x = 1
  Population x1_population;
};

// (h^2/2) E X(1) + (alpha/2) int_0^1 E log(1 + 2 beta sum_r zeta_r^2 X_r(x)) dx,
// with X(x) drawn from the fixed point at Poisson rate alpha x p.
LimitResult limiting_free_energy(const ModelParams& params, const DisorderSpec& disorder,
                                 const QuadratureRule& rule, const LimitOptions& options,
                                 const Stream& stream);

struct ConvergenceRow {
  std::size_t n_sites = 0;
  double mean_f = 0.0;
  double std_f = 0.0;
  double se_mean = 0.0;
  double limit = 0.0;
  double limit_se = 0.0;
  double gap = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  LimitResult limit;
  std::optional<SlopeFit> std_slope;  // log std_F vs log N, when every std is positive
};

ConvergenceTable convergence_study(const ModelParams& params, const DisorderSpec& disorder,
                                   std::span<const std::size_t> n_grid, std::size_t seeds_per_n,
                                   const QuadratureRule& rule, const LimitOptions& options,
                                   const Stream& stream);

}  // namespace dqsg
