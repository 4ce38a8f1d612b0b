#include "dqsg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dqsg/parallel.hpp"

namespace dqsg {

Estimate estimate_mean(std::span<const double> xs, std::uint64_t stream_key) {
  if (xs.empty()) throw std::invalid_argument("estimate_mean: empty sample");
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  Estimate e;
  e.value = mean;
  e.std_error = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  e.n_samples = xs.size();
  e.provenance.stream_key = stream_key;
  return e;
}

Estimate jackknife_mean(std::span<const double> xs, std::size_t blocks, std::uint64_t stream_key) {
  if (xs.empty()) throw std::invalid_argument("jackknife_mean: empty sample");
  blocks = std::min(blocks, xs.size());
  Estimate e = estimate_mean(xs, stream_key);
  if (blocks < 2) return e;
  std::vector<double> block_sum(blocks, 0.0);
  std::vector<std::size_t> block_n(blocks, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t b = i * blocks / xs.size();
    block_sum[b] += xs[i];
    ++block_n[b];
  }
  double total = 0.0;
  for (double s : block_sum) total += s;
  std::vector<double> leave_out(blocks);
  for (std::size_t b = 0; b < blocks; ++b)
    leave_out[b] = (total - block_sum[b]) / static_cast<double>(xs.size() - block_n[b]);
  double mean_lo = 0.0;
  for (double v : leave_out) mean_lo += v;
  mean_lo /= static_cast<double>(blocks);
  double ss = 0.0;
  for (double v : leave_out) ss += (v - mean_lo) * (v - mean_lo);
  const auto k = static_cast<double>(blocks);
  e.std_error = std::sqrt((k - 1.0) / k * ss);
  return e;
}

SlopeFit slope_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("slope_fit: size mismatch");
  if (xs.size() < 3) throw std::invalid_argument("slope_fit: need at least 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("slope_fit: inputs must be positive");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const auto n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope_fit: all x values coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return fit;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<double> s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  const auto n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::pair<double, double> correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 3)
    throw std::invalid_argument("correlation: need >= 3 paired samples");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  const double r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  return {r, std::sqrt((1.0 - r * r) / (n - 2.0))};
}

std::vector<double> pooled_inverse_diagonals(const ModelParams& params,
                                             const DisorderSpec& disorder, std::size_t n_sites,
                                             std::size_t n_replicates, const Stream& stream) {
  if (n_replicates == 0) throw std::invalid_argument("n_replicates must be positive");
  std::vector<double> pooled(n_sites * n_replicates);
  parallel_tasks(n_replicates, [&](std::size_t rep) {
    const FactorModel m = sample_model(params, disorder, n_sites, stream.child(rep));
    const std::vector<double> diag = inverse_diagonal(m);
    std::copy(diag.begin(), diag.end(), pooled.begin() + static_cast<long>(rep * n_sites));
  });
  return pooled;
}

double diag_law_distance(const ModelParams& params, const DisorderSpec& disorder,
                         std::size_t n_sites, std::size_t n_replicates,
                         const Population& fixed_point, const Stream& stream) {
  const std::vector<double> pooled =
      pooled_inverse_diagonals(params, disorder, n_sites, n_replicates, stream);
  return wasserstein(pooled, fixed_point.values, 1.0);
}

CorrelationReport independence_check(const ModelParams& params, const DisorderSpec& disorder,
                                     std::size_t n_sites, std::size_t n_entries,
                                     std::size_t n_replicates, const Stream& stream) {
  if (n_entries < 2) throw std::invalid_argument("independence_check: n_entries must be >= 2");
  if (n_sites < n_entries) throw DimensionError("independence_check: n_sites < n_entries");
  if (n_replicates < 3) throw std::invalid_argument("independence_check: need >= 3 replicates");
  std::vector<std::vector<double>> entries(n_entries, std::vector<double>(n_replicates));
  std::vector<std::size_t> sites(n_entries);
  for (std::size_t i = 0; i < n_entries; ++i) sites[i] = i;
  parallel_tasks(n_replicates, [&](std::size_t rep) {
    const FactorModel m = sample_model(params, disorder, n_sites, stream.child(rep));
    const std::vector<double> diag = inverse_diagonal(m, sites);
    for (std::size_t i = 0; i < n_entries; ++i) entries[i][rep] = diag[i];
  });
  CorrelationReport report;
  for (const auto& e : entries) {
    const Estimate est = estimate_mean(e);
    const double var = est.std_error * est.std_error * static_cast<double>(n_replicates);
    if (var < 1e-14) report.degenerate = true;
  }
  if (report.degenerate) return report;
  for (std::size_t i = 0; i < n_entries; ++i)
    for (std::size_t j = i + 1; j < n_entries; ++j) {
      const auto [r, se] = correlation(entries[i], entries[j]);
      report.pairs.emplace_back(i, j);
      report.correlations.push_back(r);
      report.std_errors.push_back(se);
    }
  return report;
}

PoissonUniformReport poisson_uniform_check(double lambda, std::size_t n_samples,
                                           const Stream& stream) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_uniform_check: lambda must be positive");
  if (n_samples == 0) throw std::invalid_argument("poisson_uniform_check: n_samples must be positive");
  std::vector<long> l(n_samples), l_prime(n_samples);
  const Stream s_l = stream.child("L"), s_lp = stream.child("L'");
  parallel_chunks(n_samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = s_l.child(chunk).engine();
    std::poisson_distribution<long> total(lambda);
    for (std::size_t i = begin; i < end; ++i) {
      const long m = total(eng);
      l[i] = static_cast<long>(uniform_index(eng, static_cast<std::size_t>(m) + 1));
    }
  });
  parallel_chunks(n_samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = s_lp.child(chunk).engine();
    for (std::size_t i = begin; i < end; ++i) {
      const double mean = lambda * uniform01(eng);
      l_prime[i] = mean > 0.0 ? std::poisson_distribution<long>(mean)(eng) : 0;
    }
  });
  const long top = std::max(*std::max_element(l.begin(), l.end()),
                            *std::max_element(l_prime.begin(), l_prime.end()));
  PoissonUniformReport report;
  std::vector<std::size_t> count_l(static_cast<std::size_t>(top) + 1, 0),
      count_lp(static_cast<std::size_t>(top) + 1, 0);
  for (long v : l) ++count_l[static_cast<std::size_t>(v)];
  for (long v : l_prime) ++count_lp[static_cast<std::size_t>(v)];
  const auto n = static_cast<double>(n_samples);
  for (std::size_t k = 0; k < count_l.size(); ++k) {
    report.pmf_l.push_back(static_cast<double>(count_l[k]) / n);
    report.pmf_l_prime.push_back(static_cast<double>(count_lp[k]) / n);
  }
  for (std::size_t k = 0; k < report.pmf_l.size(); ++k)
    report.tv += 0.5 * std::abs(report.pmf_l[k] - report.pmf_l_prime[k]);
  std::vector<double> zero(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) zero[i] = l[i] == 0 ? 1.0 : 0.0;
  report.p0_l = estimate_mean(zero, stream.key());
  return report;
}

}  // namespace dqsg
