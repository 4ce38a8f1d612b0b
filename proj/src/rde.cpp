#include "dqsg/rde.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "dqsg/parallel.hpp"

namespace dqsg {

std::string_view to_string(PopulationDomain d) {
  return d == PopulationDomain::unit_interval ? "unit_interval" : "log_nonneg";
}

Population Population::constant(double value, std::size_t size, PopulationDomain domain) {
  Population p;
  p.values.assign(size, value);
  p.domain = domain;
  return p;
}

double Population::mean() const {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

Population to_log_domain(const Population& pop) {
  if (pop.domain != PopulationDomain::unit_interval)
    throw DomainError("to_log_domain expects a unit_interval population");
  Population out = pop;
  out.domain = PopulationDomain::log_nonneg;
  for (auto& v : out.values) v = -std::log(v);
  return out;
}

Population from_log_domain(const Population& pop) {
  if (pop.domain != PopulationDomain::log_nonneg)
    throw DomainError("from_log_domain expects a log_nonneg population");
  Population out = pop;
  out.domain = PopulationDomain::unit_interval;
  for (auto& v : out.values) v = std::exp(-v);
  return out;
}

namespace {

void check_map_inputs(const Population& pop, double rate_scale, std::size_t out_size,
                      PopulationDomain expected) {
  if (pop.values.empty()) throw std::invalid_argument("population is empty");
  if (pop.domain != expected)
    throw DomainError(std::string("expected a ") + std::string(to_string(expected)) +
                      " population");
  if (!(rate_scale > 0.0 && rate_scale <= 1.0))
    throw std::invalid_argument("rate_scale must lie in (0, 1]");
  if (out_size == 0) throw std::invalid_argument("out_size must be positive");
}

double clause_rate(const ModelParams& params, double rate_scale) {
  return params.alpha * rate_scale * static_cast<double>(params.p);
}

}  // namespace

Population apply_T(const Population& pop, const ModelParams& params,
                   const DisorderSpec& disorder, double rate_scale, std::size_t out_size,
                   const Stream& stream) {
  check_map_inputs(pop, rate_scale, out_size, PopulationDomain::unit_interval);
  const double rate = clause_rate(params, rate_scale);
  const double two_beta = 2.0 * params.beta;
  const auto inner = static_cast<std::size_t>(params.p - 1);
  const std::size_t n_in = pop.values.size();

  Population out;
  out.domain = PopulationDomain::unit_interval;
  out.rate = rate;
  out.generation = pop.generation + 1;
  out.values.resize(out_size);
  parallel_chunks(out_size, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = stream.child(chunk).engine();
    std::poisson_distribution<long> clauses(rate);
    DisorderSampler g(disorder);
    for (std::size_t i = begin; i < end; ++i) {
      const long r_count = clauses(eng);
      double acc = 0.0;
      for (long k = 0; k < r_count; ++k) {
        const double zeta = g(eng);
        double field = 0.0;
        for (std::size_t r = 0; r < inner; ++r) {
          const double x = pop.values[uniform_index(eng, n_in)];
          const double xi = g(eng);
          field += x * xi * xi;
        }
        acc += two_beta * zeta * zeta / (1.0 + two_beta * field);
      }
      out.values[i] = 1.0 / (1.0 + acc);
    }
  });
  return out;
}

Population apply_conjugate_T(const Population& pop, const ModelParams& params,
                             const DisorderSpec& disorder, double rate_scale,
                             std::size_t out_size, const Stream& stream) {
  if (!(params.beta > 0.0))
    throw DomainError("conjugate map needs beta > 0 (gamma = 1/(2 beta))");
  check_map_inputs(pop, rate_scale, out_size, PopulationDomain::log_nonneg);
  const double rate = clause_rate(params, rate_scale);
  const double gamma = 1.0 / (2.0 * params.beta);
  const auto inner = static_cast<std::size_t>(params.p - 1);
  const std::size_t n_in = pop.values.size();

  Population out;
  out.domain = PopulationDomain::log_nonneg;
  out.rate = rate;
  out.generation = pop.generation + 1;
  out.values.resize(out_size);
  parallel_chunks(out_size, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = stream.child(chunk).engine();
    std::poisson_distribution<long> clauses(rate);
    DisorderSampler g(disorder);
    for (std::size_t i = begin; i < end; ++i) {
      const long r_count = clauses(eng);
      double acc = 0.0;
      for (long k = 0; k < r_count; ++k) {
        const double zeta = g(eng);
        double field = 0.0;
        for (std::size_t r = 0; r < inner; ++r) {
          const double y = pop.values[uniform_index(eng, n_in)];
          const double xi = g(eng);
          field += xi * xi * std::exp(-y);
        }
        acc += zeta * zeta / (gamma + field);
      }
      out.values[i] = std::log1p(acc);
    }
  });
  return out;
}

double wasserstein(std::span<const double> a, std::span<const double> b, double q) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein: empty sample");
  if (!(q >= 1.0)) throw std::invalid_argument("wasserstein: q must be >= 1");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  // Visits the quantile coupling as (mass, |a - b|) pieces. For unequal sizes
  // the step quantile functions break at i/na and j/nb, kept in integer units
  // of 1/(na nb).
  auto for_each_piece = [&](auto&& fn) {
    if (sa.size() == sb.size()) {
      const double mass = 1.0 / static_cast<double>(sa.size());
      for (std::size_t i = 0; i < sa.size(); ++i) fn(mass, std::abs(sa[i] - sb[i]));
      return;
    }
    const auto na = static_cast<unsigned long long>(sa.size());
    const auto nb = static_cast<unsigned long long>(sb.size());
    const double unit = 1.0 / (static_cast<double>(na) * static_cast<double>(nb));
    unsigned long long pos = 0;
    std::size_t i = 0, j = 0;
    while (i < sa.size() && j < sb.size()) {
      const unsigned long long next_a = (i + 1) * nb;
      const unsigned long long next_b = (j + 1) * na;
      const unsigned long long next = std::min(next_a, next_b);
      fn(static_cast<double>(next - pos) * unit, std::abs(sa[i] - sb[j]));
      pos = next;
      if (next_a == next) ++i;
      if (next_b == next) ++j;
    }
  };

  if (q == 1.0) {
    double total = 0.0;
    for_each_piece([&](double mass, double d) { total += mass * d; });
    return total;
  }
  // Normalize by the largest distance so large q neither overflows nor underflows.
  double dmax = 0.0;
  for_each_piece([&](double, double d) { dmax = std::max(dmax, d); });
  if (dmax == 0.0) return 0.0;
  double total = 0.0;
  for_each_piece([&](double mass, double d) { total += mass * std::pow(d / dmax, q); });
  return dmax * std::pow(total, 1.0 / q);
}

double wasserstein(const Population& a, const Population& b, double q) {
  if (a.domain != b.domain) throw DomainError("wasserstein: populations live on different domains");
  return wasserstein(std::span<const double>(a.values), std::span<const double>(b.values), q);
}

namespace {

std::vector<double> pool_sorted(const std::deque<std::vector<double>>& history, std::size_t from,
                                std::size_t to) {
  std::vector<double> out;
  for (std::size_t a = from; a < to; ++a) {
    const auto mid = static_cast<std::ptrdiff_t>(out.size());
    out.insert(out.end(), history[a].begin(), history[a].end());
    std::inplace_merge(out.begin(), out.begin() + mid, out.end());
  }
  return out;
}

// W1 between the pooled first and second halves of `history` (each entry
// sorted, all of one size, so the pools are equal-size sorted samples).
double pooled_window_gap(const std::deque<std::vector<double>>& history, std::size_t window) {
  const auto older = pool_sorted(history, 0, window);
  const auto newer = pool_sorted(history, window, 2 * window);
  double total = 0.0;
  for (std::size_t i = 0; i < older.size(); ++i) total += std::abs(older[i] - newer[i]);
  return total / static_cast<double>(older.size());
}

}  // namespace

RdeReport solve_fixed_point(const ModelParams& params, const DisorderSpec& disorder,
                            double rate_scale, const RdeOptions& options, const Population& init,
                            const Stream& stream) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("rde.tol must be positive");
  if (options.pop_size == 0) throw std::invalid_argument("rde.pop_size must be positive");
  if (options.window == 0) throw std::invalid_argument("rde.window must be positive");
  RdeReport report;
  report.tol = options.tol;

  if (params.beta == 0.0) {
    Population ones = Population::constant(1.0, options.pop_size);
    ones.rate = clause_rate(params, rate_scale);
    ones.generation = init.generation + 1;
    report.gaps.push_back(wasserstein(ones, init));
    report.window_pool = ones.values;
    report.population = std::move(ones);
    report.generations = 1;
    report.converged = true;
    return report;
  }

  const std::size_t w = options.window;
  Population current = init;
  std::vector<double> prev_sorted = init.values;
  std::sort(prev_sorted.begin(), prev_sorted.end());
  std::deque<std::vector<double>> history;
  std::size_t below = 0;
  for (std::size_t g = 1; g <= options.max_gens; ++g) {
    current = apply_T(current, params, disorder, rate_scale, options.pop_size, stream.child(g));
    std::vector<double> sorted = current.values;
    std::sort(sorted.begin(), sorted.end());
    report.gaps.push_back(wasserstein(std::span<const double>(sorted), prev_sorted));
    report.generations = g;
    prev_sorted = sorted;
    history.push_back(std::move(sorted));
    if (history.size() > 2 * w) history.pop_front();
    if (history.size() < 2 * w) continue;
    const double gap = pooled_window_gap(history, w);
    report.window_gaps.push_back(gap);
    below = gap < options.tol ? below + 1 : 0;
    if (below >= w) {
      report.converged = true;
      break;
    }
  }
  report.window_pool =
      pool_sorted(history, history.size() > w ? history.size() - w : 0, history.size());
  report.population = std::move(current);
  return report;
}

Estimate contraction_factor(const ModelParams& params, const DisorderSpec& disorder, double q,
                            std::size_t n_mc, const Stream& stream) {
  if (!(params.beta > 0.0)) throw DomainError("contraction_factor needs beta > 0");
  if (!(q >= 1.0)) throw std::invalid_argument("contraction_factor: q must be >= 1");
  if (n_mc == 0) throw std::invalid_argument("contraction_factor: n_mc must be positive");
  const double rate = clause_rate(params, 1.0);
  const double gamma = 1.0 / (2.0 * params.beta);
  const double arity_factor = static_cast<double>(params.p - 1);
  std::vector<double> samples(n_mc, 0.0);
  if (params.p > 1) {
    parallel_chunks(n_mc, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
      Engine eng = stream.child(chunk).engine();
      std::poisson_distribution<long> clauses(rate);
      DisorderSampler g(disorder);
      for (std::size_t i = begin; i < end; ++i) {
        const long r_count = clauses(eng);
        double chi = 0.0;
        for (long k = 0; k < r_count; ++k) {
          const double zeta = g(eng);
          chi += zeta * zeta;
        }
        samples[i] = std::pow(chi / (gamma + chi), q) * static_cast<double>(r_count) * arity_factor;
      }
    });
  }
  return estimate_mean(samples, stream.key());
}

ContractiveQ find_contractive_q(const ModelParams& params, const DisorderSpec& disorder,
                                std::span<const double> q_grid, std::size_t n_mc,
                                const Stream& stream) {
  ContractiveQ out;
  out.grid.assign(q_grid.begin(), q_grid.end());
  std::sort(out.grid.begin(), out.grid.end());
  for (double q : out.grid) {
    Estimate e = contraction_factor(params, disorder, q, n_mc, stream);
    if (!out.q && e.value + 3.0 * e.std_error < 1.0) out.q = q;
    out.estimates.push_back(std::move(e));
  }
  return out;
}

std::vector<PairSample> pair_rde_step(std::span<const PairSample> pairs,
                                      const ModelParams& params, const DisorderSpec& disorder,
                                      std::size_t out_size, const Stream& stream) {
  if (params.p != 2) throw std::invalid_argument("pair_rde_step supports only p = 2");
  if (pairs.empty()) throw std::invalid_argument("pair_rde_step: no input pairs");
  if (out_size == 0) throw std::invalid_argument("pair_rde_step: out_size must be positive");
  const double rate = 2.0 * params.alpha;
  const double two_beta = 2.0 * params.beta;
  const std::size_t n_in = pairs.size();
  std::vector<PairSample> out(out_size);
  parallel_chunks(out_size, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = stream.child(chunk).engine();
    std::poisson_distribution<long> clauses(rate);
    DisorderSampler g(disorder);
    for (std::size_t i = begin; i < end; ++i) {
      const long r_count = clauses(eng);
      double u = 1.0;
      double acc = 0.0;
      for (long k = 0; k < r_count; ++k) {
        const PairSample& in = pairs[uniform_index(eng, n_in)];
        const double zeta = g(eng);
        const double xi = g(eng);
        const double denom = 1.0 + two_beta * xi * xi * in.x;
        u -= two_beta * zeta * xi * in.x * in.u / denom;
        acc += two_beta * zeta * zeta / denom;
      }
      out[i] = {u, 1.0 / (1.0 + acc)};
    }
  });
  return out;
}

void write_population(std::ostream& os, const Population& pop) {
  os << "# domain=" << to_string(pop.domain) << " rate=";
  os.precision(17);
  os << pop.rate << " generation=" << pop.generation << " size=" << pop.values.size() << '\n';
  for (double v : pop.values) os << v << '\n';
}

Population read_population(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# ", 0) != 0)
    throw std::runtime_error("population file: missing '# ' header line");
  Population pop;
  std::size_t size = 0;
  bool has_domain = false, has_size = false;
  std::istringstream fields(header.substr(2));
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::runtime_error("population header: bad field " + field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "domain") {
      if (value == "unit_interval") pop.domain = PopulationDomain::unit_interval;
      else if (value == "log_nonneg") pop.domain = PopulationDomain::log_nonneg;
      else throw std::runtime_error("population header: unknown domain " + value);
      has_domain = true;
    } else if (key == "rate") {
      pop.rate = std::stod(value);
    } else if (key == "generation") {
      pop.generation = std::stoull(value);
    } else if (key == "size") {
      size = std::stoull(value);
      has_size = true;
    } else {
      throw std::runtime_error("population header: unknown key " + key);
    }
  }
  if (!has_domain || !has_size) throw std::runtime_error("population header: missing domain or size");
  pop.values.reserve(size);
  double v = 0.0;
  while (pop.values.size() < size && is >> v) pop.values.push_back(v);
  if (pop.values.size() != size)
    throw std::runtime_error("population file: expected " + std::to_string(size) + " values, got " +
                             std::to_string(pop.values.size()));
  return pop;
}

}  // namespace dqsg
