#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

#include "dqsg/estimate.hpp"
#include "dqsg/stats.hpp"

using namespace dqsg;

namespace {

const DisorderSpec kRad = DisorderSpec::rademacher();

// Closed-form simple regression of log y on log x.
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("slope fit") {
  std::vector<double> xs, ys;
  for (double x = 10; x <= 1000; x *= 1.6) {
    xs.push_back(x);
    ys.push_back(3.0 / std::sqrt(x));
  }
  CHECK(std::abs(slope_fit(xs, ys).slope + 0.5) < 1e-12);
  CHECK(slope_fit(xs, ys).r2 == doctest::Approx(1.0));
  const std::vector<double> flat(xs.size(), 2.5);
  CHECK(std::abs(slope_fit(xs, flat).slope) < 1e-14);

  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> eps(-0.05, 0.05);
  std::vector<double> nx, ny;
  for (int i = 0; i < 10; ++i) {
    const double x = std::pow(10.0, 1.0 + 2.0 * i / 9.0);
    nx.push_back(x);
    ny.push_back(std::pow(x, -0.5) * (1.0 + eps(eng)));
  }
  const auto fit = slope_fit(nx, ny);
  CHECK(fit.slope >= -0.6);
  CHECK(fit.slope <= -0.4);
  CHECK(fit.slope == doctest::Approx(ls_slope(nx, ny)).epsilon(1e-12));

  const std::vector<double> two{1, 2}, bad{1, -1, 2};
  CHECK_THROWS(slope_fit(two, two));
  CHECK_THROWS(slope_fit(std::vector<double>{1, 2, 3}, bad));
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  const std::vector<double> a{0.1, 0.4, 0.4, 0.9}, b{2.0, 3.0};
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(a, b) == 1.0);
  std::mt19937_64 eng(4);
  std::normal_distribution<double> g;
  std::vector<double> xs(100000);
  for (auto& x : xs) x = g(eng);
  CHECK(ks_distance(xs, [](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }) < 0.006);
}

TEST_CASE("correlation and mean estimates") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10}, c{5, 4, 3, 2, 1};
  CHECK(correlation(a, b).first == doctest::Approx(1.0));
  CHECK(correlation(a, c).first == doctest::Approx(-1.0));
  const auto e = estimate_mean(a);
  CHECK(e.value == 3.0);
  CHECK(e.std_error == doctest::Approx(std::sqrt(2.5 / 5.0)));
  CHECK(e.n_samples == 5);
  std::vector<double> xs(1000);
  std::mt19937_64 eng(5);
  std::normal_distribution<double> g;
  for (auto& x : xs) x = g(eng);
  const auto jk = jackknife_mean(xs, 20);
  CHECK(jk.value == doctest::Approx(estimate_mean(xs).value));
  CHECK(jk.std_error == doctest::Approx(estimate_mean(xs).std_error).epsilon(0.5));
}

TEST_CASE("Poisson-uniform identity") {
  SUBCASE("tiny rate") {
    const auto r = poisson_uniform_check(1e-9, 100000, Stream(1));
    CHECK(r.tv < 1e-6);
  }
  SUBCASE("rate three") {
    const auto r = poisson_uniform_check(3.0, 1000000, Stream(2));
    const double p0 = (1.0 - std::exp(-3.0)) / 3.0;
    CHECK(std::abs(r.p0_l.value - p0) < 4.0 * r.p0_l.std_error);
    CHECK(r.tv < 0.01);
    CHECK(r.pmf_l[0] == r.p0_l.value);
    double total = 0.0;
    for (double v : r.pmf_l_prime) total += v;
    CHECK(total == doctest::Approx(1.0));
  }
  SUBCASE("TV shrinks with sample size") {
    int smaller = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const double small_n = poisson_uniform_check(3.0, 10000, Stream(100 + s)).tv;
      const double large_n = poisson_uniform_check(3.0, 1000000, Stream(200 + s)).tv;
      smaller += large_n < small_n;
    }
    CHECK(smaller >= 9);
  }
}

TEST_CASE("diagonal law distance") {
  SUBCASE("beta = 0") {
    CHECK(diag_law_distance({1.0, 0.0, 0.0, 2}, kRad, 50, 3, Population::constant(1.0, 1000), Stream(1)) == 0.0);
  }
  SUBCASE("self distance") {
    const ModelParams params{1.0, 0.7, 0.0, 2};
    Population pooled;
    pooled.values = pooled_inverse_diagonals(params, kRad, 200, 4, Stream(2));
    CHECK(pooled.values.size() == 800);
    CHECK(diag_law_distance(params, kRad, 200, 4, pooled, Stream(2)) == 0.0);
  }
  SUBCASE("p = 1 exact law") {
    const ModelParams params{1.0, 0.5, 0.0, 1};
    Population direct;
    direct.values = oracle::direct_p1_law(1.0, 0.5, false, 1.0, 1000000, 9);
    CHECK(diag_law_distance(params, kRad, 2000, 10, direct, Stream(3)) < 0.01);
  }
}

TEST_CASE("independence check") {
  SUBCASE("beta = 0 is degenerate") {
    CHECK(independence_check({1.0, 0.0, 0.0, 2}, kRad, 20, 4, 30, Stream(1)).degenerate);
  }
  SUBCASE("p = 1") {
    const auto r = independence_check({1.0, 0.5, 0.0, 1}, kRad, 500, 4, 400, Stream(2));
    CHECK_FALSE(r.degenerate);
    CHECK(r.pairs.size() == 6);
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
      CHECK(std::abs(r.correlations[k]) <= 1.0);
      CHECK(std::abs(r.correlations[k]) < 4.0 * r.std_errors[k]);
    }
  }
  SUBCASE("preconditions") {
    CHECK_THROWS(independence_check({1.0, 0.5, 0.0, 1}, kRad, 3, 4, 10, Stream(0)));
    CHECK_THROWS(independence_check({1.0, 0.5, 0.0, 1}, kRad, 30, 1, 10, Stream(0)));
  }
}

TEST_CASE("estimators are pure given the stream") {
  const ModelParams params{1.0, 0.7, 0.0, 2};
  CHECK(pooled_inverse_diagonals(params, kRad, 100, 3, Stream(5)) ==
        pooled_inverse_diagonals(params, kRad, 100, 3, Stream(5)));
  CHECK(poisson_uniform_check(2.0, 5000, Stream(6)).pmf_l == poisson_uniform_check(2.0, 5000, Stream(6)).pmf_l);
  const auto a = independence_check(params, kRad, 50, 3, 40, Stream(7));
  const auto b = independence_check(params, kRad, 50, 3, 40, Stream(7));
  CHECK(a.correlations == b.correlations);
}
