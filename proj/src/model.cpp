#include "dqsg/model.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "dqsg/parallel.hpp"

namespace dqsg {

void ModelParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("model.alpha must be positive and finite");
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("model.beta must be nonnegative and finite");
  if (!std::isfinite(h)) throw std::invalid_argument("model.h must be finite");
  if (p < 1) throw std::invalid_argument("model.p must be at least 1");
}

namespace {

// Ordered distinct k-tuples from [0, n) by partial Fisher-Yates on a scratch
// permutation that is restored after every draw.
class TupleSampler {
public:
  explicit TupleSampler(std::size_t n) : perm_(n) {
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  }

  void draw(Engine& eng, std::size_t k, std::vector<std::size_t>& out) {
    const std::size_t n = perm_.size();
    swaps_.clear();
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = r + uniform_index(eng, n - r);
      std::swap(perm_[r], perm_[j]);
      swaps_.push_back(j);
      out.push_back(perm_[r]);
    }
    for (std::size_t r = k; r-- > 0;) std::swap(perm_[r], perm_[swaps_[r]]);
  }

private:
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> swaps_;
};

long poisson(Engine& eng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<long>(mean)(eng);
}

std::vector<Clause> sample_clauses(Engine& eng, const DisorderSpec& disorder, std::size_t n,
                                   std::size_t count, std::size_t arity) {
  TupleSampler tuples(n);
  DisorderSampler g(disorder);
  std::vector<Clause> out(count);
  for (auto& c : out) {
    c.sites.reserve(arity);
    tuples.draw(eng, arity, c.sites);
    c.weights.resize(arity);
    for (auto& w : c.weights) w = g(eng);
  }
  return out;
}

bool is_identity(const FactorModel& m) { return m.params.beta == 0.0 || m.clauses.empty(); }

}  // namespace

FactorModel sample_model(const ModelParams& params, const DisorderSpec& disorder,
                         std::size_t n_sites, const Stream& stream) {
  params.validate();
  if (n_sites < static_cast<std::size_t>(params.p))
    throw DimensionError("n_sites (" + std::to_string(n_sites) + ") is smaller than p (" +
                         std::to_string(params.p) + ")");
  Engine eng = stream.engine();
  FactorModel m;
  m.n_sites = n_sites;
  m.params = params;
  m.disorder = disorder;
  const auto count = static_cast<std::size_t>(poisson(eng, params.alpha * n_sites));
  m.clauses = sample_clauses(eng, disorder, n_sites, count, params.p);
  return m;
}

SparseMatrix assemble_matrix(const FactorModel& model) {
  const auto n = static_cast<Eigen::Index>(model.n_sites);
  const double scale = 2.0 * model.params.beta;
  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t nnz = model.n_sites;
  for (const auto& c : model.clauses) nnz += c.sites.size() * c.sites.size();
  triplets.reserve(nnz);
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
  if (scale != 0.0) {
    for (const auto& c : model.clauses) {
      for (std::size_t r = 0; r < c.sites.size(); ++r)
        for (std::size_t s = 0; s < c.sites.size(); ++s)
          triplets.emplace_back(static_cast<Eigen::Index>(c.sites[r]),
                                static_cast<Eigen::Index>(c.sites[s]),
                                scale * (c.weights[r] * c.weights[s]));
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

double log_det(const FactorModel& model, Backend backend) {
  if (is_identity(model)) return 0.0;
  return SpdSolver(assemble_matrix(model), backend).log_det();
}

double log_det_incremental(const FactorModel& model) {
  const std::size_t n = model.n_sites;
  if (n > kIncrementalMaxSites)
    throw DimensionError("incremental log-det is limited to " +
                         std::to_string(kIncrementalMaxSites) + " sites");
  if (is_identity(model)) return 0.0;
  const double scale = 2.0 * model.params.beta;
  Eigen::MatrixXd s_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd u(n);
  double total = 0.0;
  for (const auto& c : model.clauses) {
    u.setZero();
    for (std::size_t r = 0; r < c.sites.size(); ++r)
      u += c.weights[r] * s_inv.col(static_cast<Eigen::Index>(c.sites[r]));
    double quad = 0.0;
    for (std::size_t r = 0; r < c.sites.size(); ++r)
      quad += c.weights[r] * u[static_cast<Eigen::Index>(c.sites[r])];
    const double denom = 1.0 + scale * quad;
    total += std::log(denom);
    s_inv.noalias() -= (scale / denom) * u * u.transpose();
  }
  return total;
}

std::vector<double> inverse_diagonal(const FactorModel& model, std::span<const std::size_t> sites,
                                     Backend backend) {
  for (auto s : sites)
    if (s >= model.n_sites) throw DimensionError("site index out of range");
  if (is_identity(model)) return std::vector<double>(sites.size(), 1.0);
  const SpdSolver solver(assemble_matrix(model), backend);
  std::vector<double> out(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i)
    out[i] = solver.inverse_diagonal(static_cast<Eigen::Index>(sites[i]));
  return out;
}

std::vector<double> inverse_diagonal(const FactorModel& model, Backend backend) {
  std::vector<std::size_t> all(model.n_sites);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return inverse_diagonal(model, all, backend);
}

double ones_quadratic_form(const FactorModel& model, Backend backend) {
  if (is_identity(model)) return 1.0;
  const SpdSolver solver(assemble_matrix(model), backend);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.n_sites));
  return ones.dot(solver.solve(ones)) / static_cast<double>(model.n_sites);
}

double finite_free_energy(const FactorModel& model, Backend backend) {
  const double h2 = model.params.h * model.params.h;
  if (is_identity(model)) return 0.5 * h2;
  const SpdSolver solver(assemble_matrix(model), backend);
  const auto n = static_cast<double>(model.n_sites);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.n_sites));
  const double quad = ones.dot(solver.solve(ones)) / n;
  return 0.5 * h2 * quad + solver.log_det() / (2.0 * n);
}

double log_partition(const FactorModel& model, Backend backend) {
  const double h2 = model.params.h * model.params.h;
  if (is_identity(model)) return 0.5 * h2;
  const SpdSolver solver(assemble_matrix(model), backend);
  const auto n = static_cast<double>(model.n_sites);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.n_sites));
  const double quad = ones.dot(solver.solve(ones)) / n;
  return 0.5 * h2 * quad - solver.log_det() / (2.0 * n);
}

Eigen::VectorXd spin_mean(const FactorModel& model) {
  const auto n = static_cast<Eigen::Index>(model.n_sites);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  if (is_identity(model)) return model.params.h * ones;
  return model.params.h * SpdSolver(assemble_matrix(model)).solve(ones);
}

Eigen::MatrixXd sample_spins(const FactorModel& model, std::size_t n_samples,
                             const Stream& stream) {
  if (n_samples == 0) throw std::invalid_argument("n_samples must be positive");
  const auto n = static_cast<Eigen::Index>(model.n_sites);
  const SpdSolver solver(assemble_matrix(model));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd mean = model.params.h * solver.solve(ones);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_samples), n);
  parallel_chunks(n_samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = stream.child(chunk).engine();
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n);
    for (std::size_t s = begin; s < end; ++s) {
      for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(eng);
      out.row(static_cast<Eigen::Index>(s)) = (mean + solver.color_inverse(z)).transpose();
    }
  }, 256);
  return out;
}

OffdiagMoments offdiag_moments(const ModelParams& params, const DisorderSpec& disorder,
                               std::size_t n_sites, std::size_t n_replicates,
                               const Stream& stream) {
  if (n_sites < 4) throw DimensionError("offdiag_moments needs at least 4 sites");
  if (n_replicates == 0) throw std::invalid_argument("n_replicates must be positive");
  std::vector<double> a12(n_replicates), a12a13(n_replicates), a12a34(n_replicates),
      sq(n_replicates);
  parallel_tasks(n_replicates, [&](std::size_t rep) {
    const FactorModel m = sample_model(params, disorder, n_sites, stream.child(rep));
    double x12 = 0.0, x13 = 0.0, x34 = 0.0;
    if (!is_identity(m)) {
      const SpdSolver solver(assemble_matrix(m));
      const Eigen::VectorXd c2 = solver.inverse_column(1);
      const Eigen::VectorXd c4 = solver.inverse_column(3);
      x12 = c2[0];
      x13 = solver.inverse_column(2)[0];
      x34 = c4[2];
    }
    a12[rep] = x12;
    a12a13[rep] = x12 * x13;
    a12a34[rep] = x12 * x34;
    sq[rep] = static_cast<double>(n_sites - 1) * x12 * x12;
  });
  return {estimate_mean(a12, stream.key()), estimate_mean(a12a13, stream.key()),
          estimate_mean(a12a34, stream.key()), estimate_mean(sq, stream.key())};
}

CavitySplit cavity_split(const ModelParams& params, const DisorderSpec& disorder,
                         std::size_t n_sites, const Stream& stream) {
  params.validate();
  const auto p = static_cast<std::size_t>(params.p);
  if (n_sites <= p)
    throw DimensionError("cavity_split needs n_sites > p");
  Engine eng = stream.engine();
  CavitySplit split;
  split.n_sites = n_sites;
  split.bulk.n_sites = n_sites - 1;
  split.bulk.params = params;
  split.bulk.disorder = disorder;
  const auto bulk_count =
      static_cast<std::size_t>(poisson(eng, params.alpha * static_cast<double>(n_sites - p)));
  split.bulk.clauses = sample_clauses(eng, disorder, n_sites - 1, bulk_count, p);

  const auto boundary_count =
      static_cast<std::size_t>(poisson(eng, params.alpha * static_cast<double>(p)));
  TupleSampler tuples(n_sites - 1);
  DisorderSampler g(disorder);
  split.boundary.resize(boundary_count);
  for (auto& c : split.boundary) {
    c.sites.push_back(n_sites - 1);
    tuples.draw(eng, p - 1, c.sites);
    c.weights.resize(p);
    for (auto& w : c.weights) w = g(eng);
  }
  return split;
}

FactorModel reassemble(const CavitySplit& split) {
  FactorModel m = split.bulk;
  m.n_sites = split.n_sites;
  m.clauses.insert(m.clauses.end(), split.boundary.begin(), split.boundary.end());
  return m;
}

WoodburyResidual woodbury_residual(const CavitySplit& split) {
  WoodburyResidual out;
  const std::size_t r_count = split.boundary.size();
  if (r_count == 0) return out;
  const double scale = 2.0 * split.bulk.params.beta;

  const FactorModel full = reassemble(split);
  out.direct = inverse_diagonal(full, std::vector<std::size_t>{split.n_sites - 1})[0];

  // B^{-1} columns at the interior sites of the boundary clauses.
  std::map<std::size_t, Eigen::VectorXd> columns;
  const bool bulk_identity = split.bulk.clauses.empty() || scale == 0.0;
  std::unique_ptr<SpdSolver> bulk_solver;
  if (!bulk_identity) bulk_solver = std::make_unique<SpdSolver>(assemble_matrix(split.bulk));
  for (const auto& c : split.boundary) {
    for (std::size_t r = 1; r < c.sites.size(); ++r) {
      const std::size_t site = c.sites[r];
      if (columns.count(site)) continue;
      if (bulk_identity) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(split.n_sites - 1));
        e[static_cast<Eigen::Index>(site)] = 1.0;
        columns.emplace(site, std::move(e));
      } else {
        columns.emplace(site, bulk_solver->inverse_column(static_cast<Eigen::Index>(site)));
      }
    }
  }
  auto b_inv = [&](std::size_t i, std::size_t j) {
    return columns.at(j)[static_cast<Eigen::Index>(i)];
  };

  Eigen::MatrixXd e_mat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r_count),
                                                static_cast<Eigen::Index>(r_count));
  double zeta_sq = 0.0;
  double cavity_sum = 0.0;
  for (std::size_t k = 0; k < r_count; ++k) {
    const Clause& ck = split.boundary[k];
    const double zeta = ck.weights[0];
    zeta_sq += zeta * zeta;
    double d = 1.0;
    for (std::size_t r = 1; r < ck.sites.size(); ++r)
      d += scale * ck.weights[r] * ck.weights[r] * b_inv(ck.sites[r], ck.sites[r]);
    cavity_sum += scale * zeta * zeta / d;
    for (std::size_t l = 0; l < r_count; ++l) {
      const Clause& cl = split.boundary[l];
      double e = 0.0;
      for (std::size_t r = 1; r < ck.sites.size(); ++r)
        for (std::size_t s = 1; s < cl.sites.size(); ++s) {
          if (k == l && r == s) continue;
          e += ck.weights[r] * cl.weights[s] * b_inv(ck.sites[r], cl.sites[s]);
        }
      e_mat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = scale * e;
    }
  }
  // B^{-1} is only symmetric up to solver rounding.
  const Eigen::MatrixXd e_sym = 0.5 * (e_mat + e_mat.transpose());
  const double e_norm =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e_sym, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .cwiseAbs()
          .maxCoeff();
  out.approx = 1.0 / (1.0 + cavity_sum);
  out.residual = std::abs(out.direct - out.approx);
  out.bound = zeta_sq * e_norm;
  return out;
}

}  // namespace dqsg
