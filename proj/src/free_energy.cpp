#include "dqsg/free_energy.hpp"

#include <cmath>
#include <stdexcept>

#include "dqsg/parallel.hpp"

namespace dqsg {

Estimate edge_term(const Population& pop, const ModelParams& params, const DisorderSpec& disorder,
                   std::size_t n_mc, const Stream& stream) {
  if (pop.values.empty()) throw std::invalid_argument("edge_term: empty population");
  if (pop.domain != PopulationDomain::unit_interval)
    throw DomainError("edge_term expects a unit_interval population");
  if (n_mc == 0) throw std::invalid_argument("edge_term: n_mc must be positive");
  const double two_beta = 2.0 * params.beta;
  const auto p = static_cast<std::size_t>(params.p);
  const std::size_t n_in = pop.values.size();
  std::vector<double> samples(n_mc);
  parallel_chunks(n_mc, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = stream.child(chunk).engine();
    DisorderSampler g(disorder);
    for (std::size_t i = begin; i < end; ++i) {
      double field = 0.0;
      for (std::size_t r = 0; r < p; ++r) {
        const double zeta = g(eng);
        field += zeta * zeta * pop.values[uniform_index(eng, n_in)];
      }
      samples[i] = std::log1p(two_beta * field);
    }
  });
  return estimate_mean(samples, stream.key());
}

LimitResult limiting_free_energy(const ModelParams& params, const DisorderSpec& disorder,
                                 const QuadratureRule& rule, const LimitOptions& options,
                                 const Stream& stream) {
  params.validate();
  validate(rule);
  const std::size_t n_nodes = rule.nodes.size();
  LimitResult result;
  result.nodes.resize(n_nodes);
  std::vector<Population> fixed_points(n_nodes);
  const Population ones = Population::constant(1.0, options.rde.pop_size);

  auto solve_node = [&](std::size_t i, const Population& init) {
    const double x = rule.nodes[i];
    RdeReport rep = solve_fixed_point(params, disorder, x, options.rde, init,
                                      stream.child("node", i));
    NodeResult& node = result.nodes[i];
    node.x = x;
    node.rate = params.alpha * x * params.p;
    node.converged = rep.converged;
    node.generations = rep.generations;
    node.population_mean = rep.population.mean();
    // The pooled final window represents the fixed point with less
    // population noise than a single generation.
    Population pool;
    pool.values = std::move(rep.window_pool);
    pool.rate = rep.population.rate;
    node.edge_term = edge_term(pool, params, disorder, options.n_mc, stream.child("edge", i));
    fixed_points[i] = std::move(rep.population);
  };

  if (options.warm_start) {
    for (std::size_t i = 0; i < n_nodes; ++i) solve_node(i, i == 0 ? ones : fixed_points[i - 1]);
  } else {
    parallel_tasks(n_nodes, [&](std::size_t i) { solve_node(i, ones); });
  }

  const Population& x1_init =
      options.warm_start && rule.nodes.back() <= 1.0 ? fixed_points.back() : ones;
  RdeReport x1 = solve_fixed_point(params, disorder, 1.0, options.rde, x1_init, stream.child("x1"));

  for (std::size_t i = 0; i < n_nodes; ++i)
    if (!result.nodes[i].converged) result.failing_nodes.push_back(i);
  if (!x1.converged) result.failing_nodes.push_back(n_nodes);
  result.converged = result.failing_nodes.empty();

  const double h2_half = 0.5 * params.h * params.h;
  result.mean_x1 = jackknife_mean(x1.population.values, options.jackknife_blocks,
                                  stream.child("x1").key());
  result.h_term = result.mean_x1;
  result.h_term.value *= h2_half;
  result.h_term.std_error *= h2_half;

  const double half_alpha = 0.5 * params.alpha;
  double integral = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const double w = rule.weights[i];
    integral += w * result.nodes[i].edge_term.value;
    var += w * w * result.nodes[i].edge_term.std_error * result.nodes[i].edge_term.std_error;
  }
  result.value.value = result.h_term.value + half_alpha * integral;
  result.value.std_error = std::sqrt(result.h_term.std_error * result.h_term.std_error +
                                     half_alpha * half_alpha * var);
  result.value.n_samples = options.n_mc * n_nodes;
  result.value.provenance.stream_key = stream.key();
  result.x1_population = std::move(x1.population);
  return result;
}

ConvergenceTable convergence_study(const ModelParams& params, const DisorderSpec& disorder,
                                   std::span<const std::size_t> n_grid, std::size_t seeds_per_n,
                                   const QuadratureRule& rule, const LimitOptions& options,
                                   const Stream& stream) {
  if (n_grid.empty()) throw std::invalid_argument("convergence_study: empty N grid");
  if (seeds_per_n < 2) throw std::invalid_argument("convergence_study: need >= 2 seeds per N");
  ConvergenceTable table;
  table.limit = limiting_free_energy(params, disorder, rule, options, stream.child("limit"));
  for (std::size_t n : n_grid) {
    std::vector<double> f(seeds_per_n);
    parallel_tasks(seeds_per_n, [&](std::size_t s) {
      f[s] = finite_free_energy(
          sample_model(params, disorder, n, stream.child("finite", n, s)));
    });
    const Estimate e = estimate_mean(f);
    ConvergenceRow row;
    row.n_sites = n;
    row.mean_f = e.value;
    row.se_mean = e.std_error;
    row.std_f = e.std_error * std::sqrt(static_cast<double>(seeds_per_n));
    row.limit = table.limit.value.value;
    row.limit_se = table.limit.value.std_error;
    row.gap = std::abs(row.mean_f - row.limit);
    table.rows.push_back(row);
  }
  if (table.rows.size() >= 3) {
    std::vector<double> xs, ys;
    for (const auto& r : table.rows) {
      xs.push_back(static_cast<double>(r.n_sites));
      ys.push_back(r.std_f);
    }
    bool positive = true;
    for (double y : ys) positive = positive && y > 0.0;
    if (positive) table.std_slope = slope_fit(xs, ys);
  }
  return table;
}

}  // namespace dqsg
