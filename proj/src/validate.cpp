#include "dqsg/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "dqsg/experiments.hpp"
#include "dqsg/free_energy.hpp"
#include "dqsg/parallel.hpp"
#include "dqsg/stats.hpp"

namespace dqsg {

namespace fs = std::filesystem;

namespace {

struct Scales {
  std::size_t a2_n = 2000, a2_seeds = 10, a2_draws = 1000000;
  std::size_t a3_n = 2000, a3_seeds = 20;
  std::vector<std::size_t> a4_grid{250, 500, 1000, 2000};
  std::size_t a4_reps = 20;
  std::size_t a5_n = 500, a5_reps = 500;
  std::vector<std::size_t> a6_grid{250, 1000, 4000};
  std::size_t a6_seeds = 50;
  std::size_t a8_samples = 1000000;
  std::size_t a9_n = 2000, a9_splits = 1000;
  std::size_t a10_n = 1000, a10_reps = 500;
  std::size_t a12_gens = 200;
  RdeOptions rde;
  std::size_t nodes = 16;
  std::size_t n_mc = 200000;
  std::size_t contraction_n_mc = 1000000;
};

Scales scales_for(const ExperimentConfig& cfg) {
  Scales s;
  s.rde = cfg.rde;
  s.nodes = cfg.quadrature_nodes;
  s.n_mc = cfg.n_mc;
  s.contraction_n_mc = cfg.contraction_n_mc;
  if (cfg.validate_preset == ValidatePreset::quick) {
    s.a2_n = 1000;
    s.a2_seeds = 5;
    s.a2_draws = 200000;
    s.a3_n = 1000;
    s.a3_seeds = 10;
    s.a4_grid = {125, 250, 500, 1000};
    s.a5_n = 200;
    s.a5_reps = 300;
    s.a6_grid = {100, 400, 1600};
    s.a8_samples = 200000;
    s.a9_n = 1000;
    s.a9_splits = 300;
    s.a10_n = 500;
    s.a10_reps = 300;
    s.a12_gens = 100;
    // Smaller populations pooled over a longer window keep the same
    // convergence noise floor.
    s.rde.pop_size = std::min<std::size_t>(cfg.rde.pop_size, 30000);
    s.rde.window = std::max<std::size_t>(cfg.rde.window, 30);
    s.nodes = std::min<std::size_t>(cfg.quadrature_nodes, 8);
    s.n_mc = std::min<std::size_t>(cfg.n_mc, 50000);
    s.contraction_n_mc = std::min<std::size_t>(cfg.contraction_n_mc, 200000);
  }
  return s;
}

CriterionResult row(std::string id, std::string description, std::string threshold) {
  CriterionResult r;
  r.id = std::move(id);
  r.description = std::move(description);
  r.threshold = std::move(threshold);
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

LimitOptions limit_opts(const Scales& s) {
  LimitOptions o;
  o.rde = s.rde;
  o.n_mc = s.n_mc;
  return o;
}

// Fixed point of T at rate alpha p as a pooled sample.
std::vector<double> fixed_point_pool(const ModelParams& params, const DisorderSpec& disorder,
                                     const RdeOptions& rde, const Stream& stream,
                                     double init = 1.0) {
  return solve_fixed_point(params, disorder, 1.0, rde, Population::constant(init, rde.pop_size),
                           stream)
      .window_pool;
}

std::vector<std::vector<double>> replicate_diagonals(const ModelParams& params,
                                                     const DisorderSpec& disorder,
                                                     std::size_t n, std::size_t reps,
                                                     const Stream& stream) {
  std::vector<std::vector<double>> out(reps);
  parallel_tasks(reps, [&](std::size_t r) {
    out[r] = inverse_diagonal(sample_model(params, disorder, n, stream.child(r)));
  });
  return out;
}

std::vector<double> sorted_concat(const std::vector<std::vector<double>>& parts,
                                  std::size_t skip = static_cast<std::size_t>(-1)) {
  std::vector<double> v;
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (i != skip) v.insert(v.end(), parts[i].begin(), parts[i].end());
  std::sort(v.begin(), v.end());
  return v;
}

double std_dev(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (n - 1.0));
}

std::vector<double> free_energies(const ModelParams& params, const DisorderSpec& disorder,
                                  std::size_t n, std::size_t seeds, const Stream& stream) {
  std::vector<double> f(seeds);
  parallel_tasks(seeds, [&](std::size_t s) {
    f[s] = finite_free_energy(sample_model(params, disorder, n, stream.child(s)));
  });
  return f;
}

CriterionResult a1(const ExperimentConfig& cfg, const Scales&, const Stream& st) {
  CriterionResult r = row("A1", "beta = 0 free energies equal h^2/2", "< 1e-12 and < 1 s");
  ModelParams m = cfg.model;
  m.beta = 0.0;
  const double exact = 0.5 * m.h * m.h;
  const double fn = finite_free_energy(sample_model(m, cfg.disorder, 200, st.child("finite")));
  LimitOptions o;
  o.rde.pop_size = 1000;
  o.n_mc = 1000;
  const double lim =
      limiting_free_energy(m, cfg.disorder, gauss_legendre(4), o, st.child("limit")).value.value;
  r.measured = std::max(std::abs(fn - exact), std::abs(lim - exact));
  r.pass = r.measured < 1e-12;
  r.detail = "F_N=" + fmt(fn) + " F=" + fmt(lim) + " h^2/2=" + fmt(exact);
  return r;
}

double direct_p1_quantile_w1(const ModelParams& m, const DisorderSpec& disorder, std::size_t draws,
                             std::vector<double> pooled, const Stream& st) {
  std::vector<double> direct(draws);
  const double two_beta = 2.0 * m.beta;
  parallel_chunks(draws, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = st.child(chunk).engine();
    DisorderSampler g(disorder);
    std::poisson_distribution<std::size_t> count(m.alpha);
    for (std::size_t i = begin; i < end; ++i) {
      double s = 0.0;
      for (std::size_t k = count(eng); k > 0; --k) {
        const double z = g(eng);
        s += z * z;
      }
      direct[i] = 1.0 / (1.0 + two_beta * s);
    }
  });
  std::sort(direct.begin(), direct.end());
  std::sort(pooled.begin(), pooled.end());
  return wasserstein(direct, pooled);
}

CriterionResult a2(const ExperimentConfig&, const Scales& s, const Stream& st) {
  CriterionResult r = row("A2", "p = 1 diagonal law matches the direct sampler", "< 0.01 and < 120 s");
  const ModelParams m{1.0, 0.5, 0.0, 1};
  const auto disorder = DisorderSpec::rademacher();
  const auto pooled = pooled_inverse_diagonals(m, disorder, s.a2_n, s.a2_seeds, st.child("pool"));
  r.measured = direct_p1_quantile_w1(m, disorder, s.a2_draws, pooled, st.child("direct"));
  r.pass = r.measured < 0.01;
  r.detail = "N=" + std::to_string(s.a2_n) + " seeds=" + std::to_string(s.a2_seeds);
  return r;
}

CriterionResult a3(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A3", "mean F_N matches the limiting free energy", "< max(0.01, 3 SE) and < 600 s");
  const auto f = free_energies(cfg.model, cfg.disorder, s.a3_n, s.a3_seeds, st.child("finite"));
  const Estimate fn = estimate_mean(f);
  const auto lim = limiting_free_energy(cfg.model, cfg.disorder, gauss_legendre(s.nodes),
                                        limit_opts(s), st.child("limit"));
  const double se = std::hypot(fn.std_error, lim.value.std_error);
  const double tol = std::max(0.01, 3.0 * se);
  r.measured = std::abs(fn.value - lim.value.value);
  r.pass = r.measured < tol;
  r.threshold = "< " + fmt(tol) + " and < 600 s";
  r.detail = "F_N=" + fmt(fn.value) + " F=" + fmt(lim.value.value) + " SE=" + fmt(se) +
             " disorder=" + describe(cfg.disorder) +
             (lim.converged ? "" : " (some nodes did not converge)");
  return r;
}

CriterionResult a4(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A4", "W1(diagonal law, fixed point) decreases in N", "decreasing within 1 SE, final < 0.02");
  const auto fp = fixed_point_pool(cfg.model, cfg.disorder, s.rde, st.child("fixed-point"));
  std::vector<double> w, se;
  for (std::size_t n : s.a4_grid) {
    const auto parts = replicate_diagonals(cfg.model, cfg.disorder, n, s.a4_reps, st.child(n));
    w.push_back(wasserstein(sorted_concat(parts), fp));
    // Jackknife over replicates.
    std::vector<double> loo(parts.size());
    parallel_tasks(parts.size(), [&](std::size_t i) { loo[i] = wasserstein(sorted_concat(parts, i), fp); });
    const double k = static_cast<double>(loo.size());
    const double m = std::accumulate(loo.begin(), loo.end(), 0.0) / k;
    double ss = 0.0;
    for (double x : loo) ss += (x - m) * (x - m);
    se.push_back(std::sqrt((k - 1.0) / k * ss));
  }
  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    decreasing = decreasing && w[i + 1] < w[i] + std::hypot(se[i], se[i + 1]);
  r.measured = w.back();
  r.pass = decreasing && w.back() < 0.02;
  std::ostringstream d;
  for (std::size_t i = 0; i < w.size(); ++i)
    d << (i ? " " : "") << "N=" << s.a4_grid[i] << ":" << fmt(w[i]) << "+-" << fmt(se[i]);
  r.detail = d.str();
  return r;
}

CriterionResult a5(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A5", "off-diagonal cross moments vanish, (N-1)E|A12|^2 <= 1", "|mean|/SE < 4 and scaled second moment <= 1.05");
  const auto mo = offdiag_moments(cfg.model, cfg.disorder, s.a5_n, s.a5_reps, st);
  double worst = 0.0;
  for (const Estimate* e : {&mo.a12, &mo.a12_a13, &mo.a12_a34})
    worst = std::max(worst, e->std_error > 0.0 ? std::abs(e->value) / e->std_error
                                               : (e->value == 0.0 ? 0.0 : HUGE_VAL));
  r.measured = worst;
  r.pass = worst < 4.0 && mo.scaled_sq12.value <= 1.05;
  r.detail = "A12=" + fmt(mo.a12.value) + " A12A13=" + fmt(mo.a12_a13.value) +
             " A12A34=" + fmt(mo.a12_a34.value) + " (N-1)A12^2=" + fmt(mo.scaled_sq12.value);
  return r;
}

CriterionResult a6(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A6", "log-log slope of std(F_N) in N", "in [-0.65, -0.35]");
  std::vector<double> xs, ys;
  for (std::size_t n : s.a6_grid) {
    xs.push_back(static_cast<double>(n));
    ys.push_back(std_dev(free_energies(cfg.model, cfg.disorder, n, s.a6_seeds, st.child(n))));
  }
  const auto fit = slope_fit(xs, ys);
  r.measured = fit.slope;
  r.pass = fit.slope >= -0.65 && fit.slope <= -0.35;
  std::ostringstream d;
  for (std::size_t i = 0; i < xs.size(); ++i) d << "std(N=" << xs[i] << ")=" << fmt(ys[i]) << " ";
  d << "r2=" << fmt(fit.r2);
  r.detail = d.str();
  return r;
}

CriterionResult a7(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A7", "fixed point unique: extreme starts meet, T contracts in W_q", "< 0.002 and a contractive q");
  const ModelParams m{1.0, 1.0, 0.0, 2};
  const auto disorder = DisorderSpec::rademacher();
  const auto hi = solve_fixed_point(m, disorder, 1.0, s.rde, Population::constant(1.0, s.rde.pop_size),
                                    st.child("high"));
  const auto lo = solve_fixed_point(m, disorder, 1.0, s.rde,
                                    Population::constant(1e-3, s.rde.pop_size), st.child("low"));
  r.measured = wasserstein(hi.window_pool, lo.window_pool);
  const auto q = find_contractive_q(m, disorder, cfg.q_grid, s.contraction_n_mc, st.child("q"));
  r.pass = r.measured < 2e-3 && q.q.has_value();
  std::ostringstream d;
  if (q.q) {
    const auto i = static_cast<std::size_t>(
        std::find(q.grid.begin(), q.grid.end(), *q.q) - q.grid.begin());
    d << "q=" << *q.q << " modulus=" << fmt(q.estimates[i].value) << "+-"
      << fmt(q.estimates[i].std_error);
  } else {
    d << "no contractive q on the grid";
  }
  d << " converged=" << (hi.converged && lo.converged ? "yes" : "no");
  r.detail = d.str();
  return r;
}

CriterionResult a8(const ExperimentConfig&, const Scales& s, const Stream& st) {
  CriterionResult r = row("A8", "Poisson-uniform identity at lambda = 3", "TV < 0.01 and P(L=0) within 4 SE");
  const auto rep = poisson_uniform_check(3.0, s.a8_samples, st);
  const double p0 = (1.0 - std::exp(-3.0)) / 3.0;
  const double z = std::abs(rep.p0_l.value - p0) / rep.p0_l.std_error;
  r.measured = rep.tv;
  r.pass = rep.tv < 0.01 && z < 4.0;
  r.detail = "P(L=0)=" + fmt(rep.p0_l.value) + " exact=" + fmt(p0) + " z=" + fmt(z);
  return r;
}

CriterionResult a9(const ExperimentConfig&, const Scales& s, const Stream& st) {
  CriterionResult r = row("A9", "median Woodbury residual, residual <= C |zeta|^2 |E|", "median < 0.02 and coverage >= 0.99");
  const ModelParams m{1.0, 1.0, 0.0, 2};
  const auto disorder = DisorderSpec::rademacher();
  std::vector<WoodburyResidual> res(s.a9_splits);
  parallel_tasks(s.a9_splits, [&](std::size_t i) {
    res[i] = woodbury_residual(cavity_split(m, disorder, s.a9_n, st.child(i)));
  });
  // With D >= I and D + E >= I the two reciprocals differ by at most
  // 2 beta |zeta|^2 |E|, so C = 2 beta.
  const double c = 2.0 * m.beta;
  std::vector<double> resid;
  std::size_t covered = 0;
  double max_ratio = 0.0;
  for (const auto& w : res) {
    resid.push_back(w.residual);
    if (w.residual <= c * w.bound + 1e-12) ++covered;
    if (w.bound > 0.0) max_ratio = std::max(max_ratio, w.residual / w.bound);
  }
  std::nth_element(resid.begin(), resid.begin() + resid.size() / 2, resid.end());
  const double median = resid[resid.size() / 2];
  const double coverage = static_cast<double>(covered) / static_cast<double>(res.size());
  r.measured = median;
  r.pass = median < 0.02 && coverage >= 0.99;
  r.detail = "C=" + fmt(c) + " coverage=" + fmt(coverage) + " max residual/bound=" + fmt(max_ratio);
  return r;
}

CriterionResult a10(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A10", "first four diagonals uncorrelated", "max |corr|/SE < 4");
  ModelParams m = cfg.model;
  m.p = 2;
  const auto rep = independence_check(m, cfg.disorder, s.a10_n, 4, s.a10_reps, st);
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.correlations.size(); ++i)
    worst = std::max(worst, std::abs(rep.correlations[i]) / rep.std_errors[i]);
  r.measured = worst;
  r.pass = worst < 4.0 && !rep.degenerate;
  r.detail = std::to_string(rep.pairs.size()) + " pairs" + (rep.degenerate ? " (degenerate)" : "");
  return r;
}

std::map<std::string, std::string> read_outputs(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(bytes);
      j.erase("wall_time_seconds");
      bytes = j.dump();
    }
    files[fs::relative(e.path(), dir).string()] = bytes;
  }
  return files;
}

CriterionResult a11(const ExperimentConfig& cfg, const Scales&, const Stream&) {
  CriterionResult r = row("A11", "outputs byte-identical across worker counts", "0 differing files");
  const fs::path root = fs::path(cfg.output_dir) / "determinism";
  std::vector<ExperimentConfig> runs;
  {
    ExperimentConfig c = cfg;
    c.kind = ExperimentKind::simulate;
    c.n_sites = {200, 400};
    c.replicates = 3;
    runs.push_back(c);
    c.kind = ExperimentKind::rde;
    c.rde.pop_size = 20000;
    c.rde.max_gens = 40;
    c.contraction_n_mc = 50000;
    runs.push_back(c);
    c.kind = ExperimentKind::free_energy;
    c.rde.pop_size = 5000;
    c.quadrature_nodes = 4;
    c.n_mc = 20000;
    runs.push_back(c);
  }
  const std::size_t saved = worker_count();
  std::vector<std::map<std::string, std::string>> outputs;
  std::ostringstream sink;
  for (std::size_t workers : {1, 3}) {
    set_worker_count(workers);
    const fs::path dir = root / ("workers" + std::to_string(workers));
    fs::remove_all(dir);
    for (auto c : runs) {
      c.output_dir = (dir / std::string(to_string(c.kind))).string();
      if (run(c, sink, sink) != kExitOk) {
        set_worker_count(saved);
        throw std::runtime_error("determinism sub-run failed: " + sink.str());
      }
    }
    outputs.push_back(read_outputs(dir));
  }
  set_worker_count(saved);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : outputs[0]) {
    const auto it = outputs[1].find(name);
    if (it == outputs[1].end() || it->second != bytes) ++differing;
  }
  differing += outputs[1].size() > outputs[0].size() ? outputs[1].size() - outputs[0].size() : 0;
  r.measured = static_cast<double>(differing);
  r.pass = differing == 0;
  r.detail = std::to_string(outputs[0].size()) + " files compared between 1 and 3 workers";
  return r;
}

CriterionResult a12(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A12", "pair RDE: X marginal matches the fixed point, E U = 1", "W1 < 0.01 and E U within 4 SE of 1");
  ModelParams m = cfg.model;
  m.p = 2;
  std::vector<PairSample> pairs(s.rde.pop_size);
  for (std::size_t g = 0; g < s.a12_gens; ++g)
    pairs = pair_rde_step(pairs, m, cfg.disorder, s.rde.pop_size, st.child("pairs", g));
  std::vector<double> x, u;
  for (const auto& p : pairs) {
    x.push_back(p.x);
    u.push_back(p.u);
  }
  std::sort(x.begin(), x.end());
  const auto fp = fixed_point_pool(m, cfg.disorder, s.rde, st.child("fixed-point"));
  const Estimate eu = estimate_mean(u);
  const double z = std::abs(eu.value - 1.0) / eu.std_error;
  r.measured = wasserstein(x, fp);
  r.pass = r.measured < 0.01 && z < 4.0;
  r.detail = "E U=" + fmt(eu.value) + " z=" + fmt(z) + " generations=" + std::to_string(s.a12_gens);
  return r;
}

CriterionResult a13(const ExperimentConfig& cfg, const Scales& s, const Stream& st) {
  CriterionResult r = row("A13", "|F(c) - F(inf)| decreases in the truncation c", "strictly decreasing over c = 1, 2, 4");
  const double sigma =
      cfg.disorder.family() == DisorderFamily::gaussian ? cfg.disorder.param() : 1.0;
  const auto base = DisorderSpec::gaussian(sigma);
  // Every level reuses one stream: truncation zeroes the same draws, so the
  // differences are not swamped by Monte Carlo noise.
  auto limit = [&](const DisorderSpec& d) {
    return limiting_free_energy(cfg.model, d, gauss_legendre(s.nodes), limit_opts(s), st)
        .value.value;
  };
  const double f_inf = limit(base);
  std::vector<double> gaps;
  std::ostringstream d;
  d << "F(inf)=" << fmt(f_inf);
  for (double c : {1.0, 2.0, 4.0}) {
    gaps.push_back(std::abs(limit(truncate_spec(base, c)) - f_inf));
    d << " gap(c=" << c << ")=" << fmt(gaps.back());
  }
  r.measured = gaps.back();
  r.pass = gaps[0] > gaps[1] && gaps[1] > gaps[2];
  r.detail = d.str();
  return r;
}

}  // namespace

std::string format_row(const CriterionResult& r) {
  std::ostringstream os;
  os << r.id << " " << (r.pass ? "PASS" : "FAIL") << " measured=" << fmt(r.measured)
     << " threshold=" << r.threshold << " (" << fmt(r.seconds) << " s) " << r.detail;
  return os.str();
}

std::string format_table(const std::vector<CriterionResult>& rows) {
  std::string out;
  for (const auto& r : rows) out += format_row(r) + "\n";
  return out;
}

std::vector<CriterionResult> validate_suite(const ExperimentConfig& cfg, std::ostream* progress) {
  using Fn = std::function<CriterionResult(const ExperimentConfig&, const Scales&, const Stream&)>;
  const std::vector<std::pair<std::string, Fn>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3},   {"A4", a4},   {"A5", a5},   {"A6", a6}, {"A7", a7},
      {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}, {"A12", a12}, {"A13", a13}};
  const std::map<std::string, double> time_limit{{"A1", 1.0}, {"A2", 120.0}, {"A3", 600.0}};
  const Scales scales = scales_for(cfg);
  const Stream root = Stream(cfg.seed).child("validate");
  std::vector<CriterionResult> rows;
  for (const auto& [id, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn(cfg, scales, root.child(id));
    } catch (const std::exception& e) {
      r.id = id;
      r.pass = false;
      r.measured = std::nan("");
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (const auto it = time_limit.find(id); it != time_limit.end() && r.seconds >= it->second) {
      r.pass = false;
      r.detail += " (over the " + fmt(it->second) + " s budget)";
    }
    if (progress) *progress << format_row(r) << std::endl;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dqsg
