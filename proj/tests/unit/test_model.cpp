#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dqsg/model.hpp"
#include "dqsg/model_io.hpp"
#include "dqsg/stats.hpp"

using namespace dqsg;

namespace {

const DisorderSpec kRad = DisorderSpec::rademacher();
const DisorderSpec kGauss = DisorderSpec::gaussian(1.0);

Eigen::MatrixXd dense_matrix(const FactorModel& m) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m.n_sites, m.n_sites);
  for (const auto& c : m.clauses) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_sites);
    for (std::size_t r = 0; r < c.sites.size(); ++r) v[c.sites[r]] += c.weights[r];
    a += 2.0 * m.params.beta * v * v.transpose();
  }
  return a;
}

FactorModel hand_model(std::size_t n, ModelParams params, std::vector<Clause> clauses) {
  FactorModel m;
  m.n_sites = n;
  m.params = params;
  m.clauses = std::move(clauses);
  m.disorder = kGauss;
  return m;
}

}  // namespace

TEST_CASE("empty clause list gives the identity") {
  ModelParams params{1e-6, 0.7, 0.3, 2};
  FactorModel m;
  for (std::uint64_t s = 0;; ++s) {
    m = sample_model(params, kRad, 10, Stream(s));
    if (m.clauses.empty()) break;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd(assemble_matrix(m));
  CHECK(a.isApprox(Eigen::MatrixXd::Identity(10, 10), 0.0));
  CHECK(log_det(m) == 0.0);
  CHECK(finite_free_energy(m) == 0.5 * 0.3 * 0.3);
}

TEST_CASE("clause count is Poisson(alpha N)") {
  ModelParams params{1.0, 1.0, 0.0, 2};
  std::vector<double> counts;
  for (std::uint64_t s = 0; s < 200; ++s)
    counts.push_back(static_cast<double>(sample_model(params, kRad, 1000, Stream(s)).clauses.size()));
  CHECK(std::abs(oracle::mean(counts) - 1000.0) < 4.0 * std::sqrt(1000.0) / std::sqrt(200.0));
}

TEST_CASE("clause tuples are distinct, in range, and uniform over ordered tuples") {
  ModelParams params{5.0, 1.0, 0.0, 3};
  std::vector<double> first_site_counts(10, 0.0);
  std::size_t total = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto m = sample_model(params, kRad, 10, Stream(s));
    for (const auto& c : m.clauses) {
      REQUIRE(c.sites.size() == 3);
      REQUIRE(c.weights.size() == 3);
      CHECK(std::set<std::size_t>(c.sites.begin(), c.sites.end()).size() == 3);
      for (auto i : c.sites) CHECK(i < 10);
      first_site_counts[c.sites[2]] += 1.0;
      ++total;
    }
  }
  // Each position is uniform on the 10 sites: chi-square with 9 dof.
  double chi2 = 0.0;
  const double expected = static_cast<double>(total) / 10.0;
  for (double c : first_site_counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 27.9);  // 0.999 quantile
}

TEST_CASE("sampling validates dimensions and parameters") {
  CHECK_THROWS_AS(sample_model({1.0, 1.0, 0.0, 3}, kRad, 2, Stream(0)), DimensionError);
  CHECK_THROWS_AS(sample_model({1.0, 1.0, 0.0, 0}, kRad, 5, Stream(0)), std::invalid_argument);
  CHECK_THROWS_AS(sample_model({0.0, 1.0, 0.0, 2}, kRad, 5, Stream(0)), std::invalid_argument);
  CHECK_THROWS_AS(sample_model({1.0, -1.0, 0.0, 2}, kRad, 5, Stream(0)), std::invalid_argument);
}

TEST_CASE("single clause log det follows the determinant lemma") {
  const ModelParams params{1.0, 0.8, 0.0, 3};
  const auto m = hand_model(5, params, {{{4, 0, 2}, {0.3, -1.2, 2.0}}});
  const double expect = std::log1p(2.0 * 0.8 * (0.09 + 1.44 + 4.0));
  CHECK(log_det(m) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(log_det(m, Backend::dense) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(log_det_incremental(m) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("log det matches dense eigenvalues") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = sample_model({1.5, 0.9, 0.0, 2}, kGauss, 6, Stream(s));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense_matrix(m));
    const double oracle = eig.eigenvalues().array().log().sum();
    CHECK(std::abs(log_det(m) - oracle) < 1e-9);
    CHECK(std::abs(log_det(m, Backend::dense) - oracle) < 1e-9);
  }
}

TEST_CASE("factorization and incremental log det agree on 100 instances") {
  std::mt19937_64 pick(5);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 5 + pick() % 196;
    const int p = 1 + static_cast<int>(pick() % 4);
    const auto m = sample_model({1.2, 1.5, 0.0, p}, s % 2 ? kGauss : kRad, n, Stream(s));
    const double a = log_det(m), b = log_det_incremental(m);
    CHECK(std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a)));
  }
  CHECK_THROWS_AS(log_det_incremental(sample_model({1, 1, 0, 2}, kRad, 201, Stream(0))),
                  DimensionError);
}

TEST_CASE("assembled matrix is symmetric with spectrum at least one") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = sample_model({2.0, 3.0, 0.0, 1 + static_cast<int>(s % 3)}, kGauss, 50, Stream(s));
    const Eigen::MatrixXd a = Eigen::MatrixXd(assemble_matrix(m));
    CHECK(a == a.transpose());
    CHECK((a - dense_matrix(m)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-9);
  }
}

TEST_CASE("inverse diagonal") {
  SUBCASE("beta = 0 gives ones") {
    const auto m = sample_model({2.0, 0.0, 0.0, 2}, kGauss, 30, Stream(1));
    for (double d : inverse_diagonal(m)) CHECK(d == 1.0);
  }
  SUBCASE("p = 1 is diagonal") {
    const auto m = sample_model({2.0, 0.6, 0.0, 1}, kGauss, 40, Stream(2));
    std::vector<double> chi(40, 0.0);
    for (const auto& c : m.clauses) chi[c.sites[0]] += c.weights[0] * c.weights[0];
    const auto d = inverse_diagonal(m);
    for (std::size_t i = 0; i < 40; ++i) CHECK(std::abs(d[i] - 1.0 / (1.0 + 1.2 * chi[i])) < 1e-13);
  }
  SUBCASE("values lie in (0, 1] and match a dense inverse") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto m = sample_model({1.5, 2.0, 0.0, 3}, kGauss, 40, Stream(s));
      const Eigen::MatrixXd inv = dense_matrix(m).inverse();
      const auto d = inverse_diagonal(m);
      const std::vector<std::size_t> some{3, 17, 39};
      const auto d_some = inverse_diagonal(m, some, Backend::dense);
      for (std::size_t i = 0; i < 40; ++i) {
        CHECK(d[i] > 0.0);
        CHECK(d[i] <= 1.0 + 1e-12);
        CHECK(std::abs(d[i] - inv(i, i)) < 1e-12);
      }
      for (std::size_t j = 0; j < some.size(); ++j) CHECK(std::abs(d_some[j] - d[some[j]]) < 1e-12);
    }
  }
  SUBCASE("site out of range") {
    const auto m = sample_model({1.0, 1.0, 0.0, 2}, kGauss, 5, Stream(0));
    const std::vector<std::size_t> bad{5};
    CHECK_THROWS_AS(inverse_diagonal(m, bad), DimensionError);
  }
}

TEST_CASE("ones quadratic form") {
  CHECK(ones_quadratic_form(sample_model({1.0, 0.0, 0.0, 2}, kGauss, 12, Stream(0))) == 1.0);
  const auto one = hand_model(1, {1.0, 0.7, 0.0, 1}, {{{0}, {1.3}}});
  CHECK(ones_quadratic_form(one) == doctest::Approx(1.0 / (1.0 + 1.4 * 1.69)).epsilon(1e-14));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = sample_model({2.0, 1.1, 0.0, 2}, kGauss, 8, Stream(s));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
    const double oracle_value = ones.dot(oracle::conjugate_gradient(dense_matrix(m), ones)) / 8.0;
    CHECK(std::abs(ones_quadratic_form(m) - oracle_value) < 1e-8);
    CHECK(std::abs(ones_quadratic_form(m, Backend::dense) - oracle_value) < 1e-8);
  }
}

TEST_CASE("finite free energy closed forms") {
  CHECK(finite_free_energy(sample_model({3.0, 0.0, 1.7, 2}, kGauss, 20, Stream(0))) ==
        0.5 * 1.7 * 1.7);
  const double beta = 0.7, h = 0.9, g = 1.3;
  const auto one = hand_model(1, {1.0, beta, h, 1}, {{{0}, {g}}});
  const double k = 1.0 + 2.0 * beta * g * g;
  CHECK(finite_free_energy(one) == doctest::Approx(h * h / (2.0 * k) + std::log(k) / 2.0));
  CHECK(log_partition(one) == doctest::Approx(h * h / (2.0 * k) - std::log(k) / 2.0));
}

TEST_CASE("Gaussian integral matches brute-force Monte Carlo for N = 2") {
  const double beta = 0.3, h = 0.4;
  const auto m = hand_model(2, {1.0, beta, h, 2}, {{{0, 1}, {1.0, -1.0}}, {{1, 0}, {0.5, 1.0}}});
  std::mt19937_64 eng(2024);
  std::normal_distribution<double> normal;
  const std::size_t n = 10'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s0 = normal(eng), s1 = normal(eng);
    double minus_h = h * (s0 + s1);
    for (const auto& c : m.clauses) {
      const double dot = c.weights[0] * (c.sites[0] == 0 ? s0 : s1) +
                         c.weights[1] * (c.sites[1] == 0 ? s0 : s1);
      minus_h -= beta * dot * dot;
    }
    const double w = std::exp(minus_h);
    sum += w;
    sum_sq += w * w;
  }
  const double z = sum / n;
  const double se_z = std::sqrt((sum_sq / n - z * z) / n);
  const double estimate = std::log(z) / 2.0, se = se_z / z / 2.0;
  CHECK(std::abs(estimate - log_partition(m)) < 3.0 * se);
  // F_N carries the determinant with the opposite sign.
  CHECK(finite_free_energy(m) - log_partition(m) == doctest::Approx(log_det(m) / 2.0));
}

TEST_CASE("free energy is invariant under site relabelling") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = sample_model({1.0, 1.3, 0.6, 3}, kGauss, 80, Stream(s));
    std::vector<std::size_t> perm(80);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(s));
    auto relabelled = m;
    for (auto& c : relabelled.clauses)
      for (auto& i : c.sites) i = perm[i];
    const double f = finite_free_energy(m);
    CHECK(std::abs(finite_free_energy(relabelled) - f) < 1e-12 * std::max(1.0, std::abs(f)));
  }
}

TEST_CASE("p = 1 diagonal entries are uncorrelated across sites") {
  const auto report = independence_check({1.0, 0.5, 0.0, 1}, kRad, 50, 4, 400, Stream(77));
  CHECK_FALSE(report.degenerate);
  for (std::size_t k = 0; k < report.pairs.size(); ++k)
    CHECK(std::abs(report.correlations[k]) < 4.0 * report.std_errors[k]);
}

TEST_CASE("spin samples") {
  SUBCASE("beta = 0 gives shifted standard normals") {
    const double h = 0.7;
    const auto m = sample_model({1.0, 0.0, h, 2}, kRad, 3, Stream(0));
    const Eigen::MatrixXd x = sample_spins(m, 100000, Stream(1));
    std::vector<double> col(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[i] = x(i, 0);
    const double ks = ks_distance(col, [h](double t) { return 0.5 * std::erfc(-(t - h) / std::sqrt(2.0)); });
    CHECK(ks < 0.01);
  }
  SUBCASE("moments match the Gibbs mean and inverse diagonal") {
    const auto m = sample_model({1.0, 1.0, 0.8, 2}, kGauss, 10, Stream(4));
    const std::size_t n = 100000;
    const Eigen::MatrixXd x = sample_spins(m, n, Stream(5));
    const Eigen::VectorXd mu = spin_mean(m);
    const auto diag = inverse_diagonal(m);
    for (Eigen::Index j = 0; j < 10; ++j) {
      std::vector<double> col(n), dev2(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
      CHECK(std::abs(oracle::mean(col) - mu[j]) < 4.0 * oracle::std_error(col));
      const double mc = oracle::mean(col);
      for (std::size_t i = 0; i < n; ++i) dev2[i] = (col[i] - mc) * (col[i] - mc);
      CHECK(std::abs(oracle::mean(dev2) - diag[j]) < 4.0 * oracle::std_error(dev2));
    }
  }
  SUBCASE("same stream, same draws") {
    const auto m = sample_model({1.0, 1.0, 0.8, 2}, kGauss, 10, Stream(4));
    CHECK(sample_spins(m, 5000, Stream(9)) == sample_spins(m, 5000, Stream(9)));
  }
}

TEST_CASE("off-diagonal moments") {
  SUBCASE("beta = 0 is exactly zero") {
    const auto r = offdiag_moments({1.0, 0.0, 0.0, 2}, kRad, 10, 20, Stream(0));
    CHECK(r.a12.value == 0.0);
    CHECK(r.a12_a13.value == 0.0);
    CHECK(r.a12_a34.value == 0.0);
    CHECK(r.scaled_sq12.value == 0.0);
  }
  SUBCASE("small-scale symmetry and second-moment bound") {
    const auto r = offdiag_moments({1.0, 1.0, 0.0, 2}, kRad, 60, 400, Stream(1));
    CHECK(std::abs(r.a12.value) < 4.0 * r.a12.std_error);
    CHECK(std::abs(r.a12_a13.value) < 4.0 * r.a12_a13.std_error);
    CHECK(std::abs(r.a12_a34.value) < 4.0 * r.a12_a34.std_error);
    CHECK(r.scaled_sq12.value <= 1.05);
  }
  CHECK_THROWS_AS(offdiag_moments({1.0, 1.0, 0.0, 2}, kRad, 3, 5, Stream(0)), DimensionError);
}

TEST_CASE("cavity split structure") {
  const ModelParams params{1.3, 1.0, 0.0, 3};
  std::vector<double> totals;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const auto split = cavity_split(params, kGauss, 50, Stream(s));
    CHECK(split.n_sites == 50);
    CHECK(split.bulk.n_sites == 49);
    for (const auto& c : split.bulk.clauses)
      for (auto i : c.sites) CHECK(i < 49);
    for (const auto& c : split.boundary) {
      REQUIRE(c.sites.size() == 3);
      CHECK(c.sites[0] == 49);
      CHECK(c.sites[1] < 49);
      CHECK(c.sites[2] < 49);
      CHECK(c.sites[1] != c.sites[2]);
    }
    totals.push_back(static_cast<double>(split.bulk.clauses.size() + split.boundary.size()));
  }
  CHECK(std::abs(oracle::mean(totals) - 1.3 * 50) < 4.0 * std::sqrt(1.3 * 50 / 400.0));

  const auto p1 = cavity_split({2.0, 1.0, 0.0, 1}, kGauss, 20, Stream(3));
  for (const auto& c : p1.boundary) CHECK(c.sites == std::vector<std::size_t>{19});
}

TEST_CASE("reassembled split has the law of a sampled model") {
  // 300 replicates put the two-sample KS noise floor near 0.07, so the 0.02
  // threshold is checked at 20000 replicates per side.
  const ModelParams params{1.0, 0.5, 0.5, 2};
  const std::size_t reps = 20000;
  std::vector<double> direct(reps), thinned(reps);
  const Stream a(101), b(202);
  for (std::size_t i = 0; i < reps; ++i) {
    direct[i] = finite_free_energy(sample_model(params, kRad, 300, a.child(i)));
    thinned[i] = finite_free_energy(reassemble(cavity_split(params, kRad, 300, b.child(i))));
  }
  CHECK(ks_distance(direct, thinned) < 0.02);
}

TEST_CASE("Woodbury residual") {
  SUBCASE("no boundary clauses") {
    CavitySplit split;
    split.n_sites = 5;
    split.bulk = sample_model({1.0, 1.0, 0.0, 2}, kGauss, 4, Stream(1));
    const auto r = woodbury_residual(split);
    CHECK(r.residual == 0.0);
    CHECK(r.direct == 1.0);
    CHECK(r.approx == 1.0);
  }
  SUBCASE("empty bulk with disjoint interiors is exact") {
    CavitySplit split;
    split.n_sites = 7;
    split.bulk = hand_model(6, {1.0, 0.9, 0.0, 3}, {});
    split.boundary = {{{6, 0, 1}, {1.2, -0.7, 0.4}}, {{6, 2, 3}, {-0.5, 1.1, 0.9}},
                      {{6, 5, 4}, {0.8, 0.3, -1.6}}};
    const auto r = woodbury_residual(split);
    CHECK(r.bound == doctest::Approx(0.0));
    CHECK(r.residual <= 1e-12);
  }
  SUBCASE("matches a dense Woodbury oracle") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const double beta = 0.8;
      const auto split = cavity_split({1.5, beta, 0.0, 3}, kGauss, 40, Stream(s));
      const auto r = woodbury_residual(split);
      const Eigen::MatrixXd binv = dense_matrix(split.bulk).inverse();
      const std::size_t k_count = split.boundary.size();
      Eigen::VectorXd zeta(k_count), dvec(k_count);
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k_count, k_count);
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto& ck = split.boundary[k];
        zeta[k] = ck.weights[0];
        for (std::size_t l = 0; l < k_count; ++l) {
          const auto& cl = split.boundary[l];
          for (std::size_t i = 1; i < ck.sites.size(); ++i)
            for (std::size_t j = 1; j < cl.sites.size(); ++j)
              g(k, l) += ck.weights[i] * cl.weights[j] * binv(ck.sites[i], cl.sites[j]);
        }
      }
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto& ck = split.boundary[k];
        dvec[k] = 1.0;
        for (std::size_t i = 1; i < ck.sites.size(); ++i)
          dvec[k] += 2.0 * beta * ck.weights[i] * ck.weights[i] * binv(ck.sites[i], ck.sites[i]);
      }
      const Eigen::MatrixXd full = Eigen::MatrixXd::Identity(k_count, k_count) + 2.0 * beta * g;
      const Eigen::MatrixXd e = full - Eigen::MatrixXd(dvec.asDiagonal());
      const double direct =
          k_count ? 1.0 / (1.0 + 2.0 * beta * zeta.dot(full.ldlt().solve(zeta))) : 1.0;
      const double approx =
          k_count ? 1.0 / (1.0 + 2.0 * beta * zeta.dot(zeta.cwiseQuotient(dvec))) : 1.0;
      const double e_norm =
          k_count ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e).eigenvalues().cwiseAbs().maxCoeff()
                  : 0.0;
      const double full_inverse = dense_matrix(reassemble(split)).inverse()(39, 39);
      CHECK(std::abs(r.direct - full_inverse) < 1e-10);
      CHECK(std::abs(direct - full_inverse) < 1e-10);
      CHECK(std::abs(r.approx - approx) < 1e-10);
      CHECK(std::abs(r.bound - zeta.squaredNorm() * e_norm) < 1e-10);
      CHECK(r.residual <= 2.0 * beta * r.bound + 1e-12);
    }
  }
}

TEST_CASE("model text format round-trips") {
  const auto m = sample_model({1.3, 0.7, -0.2, 3}, DisorderSpec(DisorderFamily::gaussian, 1.1, 2.5),
                              30, Stream(8));
  std::stringstream ss;
  write_model(ss, m);
  const auto back = read_model(ss);
  CHECK(back.n_sites == m.n_sites);
  CHECK(back.params == m.params);
  CHECK(back.disorder == m.disorder);
  REQUIRE(back.clauses.size() == m.clauses.size());
  for (std::size_t k = 0; k < m.clauses.size(); ++k) {
    CHECK(back.clauses[k].sites == m.clauses[k].sites);
    CHECK(back.clauses[k].weights == m.clauses[k].weights);
  }
  std::stringstream again;
  write_model(again, back);
  std::stringstream first;
  write_model(first, m);
  CHECK(again.str() == first.str());

  std::stringstream bad("3 1 1 1 0 2 rademacher:1:inf\n1 1 1.0 1.0\n");
  CHECK_THROWS_WITH_AS(read_model(bad), doctest::Contains("line 2"), std::runtime_error);
}
