#include "dqsg/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "dqsg/manifest.hpp"
#include "dqsg/model_io.hpp"
#include "dqsg/parallel.hpp"
#include "dqsg/validate.hpp"

namespace dqsg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

QuadratureRule make_rule(const ExperimentConfig& cfg) {
  return cfg.quadrature_rule == "midpoint" ? midpoint(cfg.quadrature_nodes)
                                           : gauss_legendre(cfg.quadrature_nodes);
}

LimitOptions limit_options(const ExperimentConfig& cfg) {
  LimitOptions o;
  o.rde = cfg.rde;
  o.n_mc = cfg.n_mc;
  return o;
}

namespace {

// Collects output files so the manifest can list them.
class Outputs {
public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct ModelSummary {
  std::size_t n_clauses = 0;
  double log_det = 0.0;
  double ones_quadratic_form = 0.0;
  double free_energy = 0.0;
  double mean_inverse_diagonal = 0.0;
};

ModelSummary summarize(const FactorModel& m) {
  ModelSummary s;
  s.n_clauses = m.clauses.size();
  s.log_det = log_det(m);
  s.ones_quadratic_form = ones_quadratic_form(m);
  s.free_energy = finite_free_energy(m);
  const auto d = inverse_diagonal(m);
  s.mean_inverse_diagonal = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  return s;
}

std::string summary_cells(const ModelSummary& s) {
  return std::to_string(s.n_clauses) + "," + format_real(s.log_det) + "," +
         format_real(s.ones_quadratic_form) + "," + format_real(s.free_energy) + "," +
         format_real(s.mean_inverse_diagonal);
}

void run_simulate(const ExperimentConfig& cfg, Outputs& outs, std::ostream& out) {
  const Stream root = Stream(cfg.seed).child("simulate");
  auto os = outs.open("simulate.csv");
  os << "n_sites,replicate,n_clauses,log_det,ones_quadratic_form,free_energy,"
        "mean_inverse_diagonal\n";
  for (std::size_t n : cfg.n_sites) {
    std::vector<ModelSummary> rows(cfg.replicates);
    parallel_tasks(cfg.replicates, [&](std::size_t r) {
      rows[r] = summarize(sample_model(cfg.model, cfg.disorder, n, root.child(n, r)));
    });
    for (std::size_t r = 0; r < rows.size(); ++r)
      os << n << "," << r << "," << summary_cells(rows[r]) << "\n";
    double mean_f = 0.0;
    for (const auto& s : rows) mean_f += s.free_energy / static_cast<double>(rows.size());
    out << "N=" << n << " mean F_N=" << format_real(mean_f) << "\n";
  }
}

void run_rde(const ExperimentConfig& cfg, const std::string& digest, Outputs& outs,
             std::ostream& out) {
  const Stream root = Stream(cfg.seed).child("rde");
  const auto report =
      solve_fixed_point(cfg.model, cfg.disorder, cfg.rate_scale, cfg.rde,
                        Population::constant(1.0, cfg.rde.pop_size), root.child("solve"));
  {
    auto os = outs.open("rde.csv");
    os << "generation,w1_gap,window_gap\n";
    const std::size_t first_window = 2 * cfg.rde.window;
    for (std::size_t g = 0; g < report.gaps.size(); ++g) {
      os << g + 1 << "," << format_real(report.gaps[g]) << ",";
      if (g + 1 >= first_window) os << format_real(report.window_gaps[g + 1 - first_window]);
      os << "\n";
    }
  }
  {
    auto os = outs.open("population.txt");
    write_population(os, report.population);
  }
  json contractive = nullptr;
  if (cfg.model.beta > 0.0) {
    const auto q = find_contractive_q(cfg.model, cfg.disorder, cfg.q_grid, cfg.contraction_n_mc,
                                      root.child("contraction"));
    auto os = outs.open("contraction.csv");
    os << "q,estimate,std_error\n";
    for (std::size_t i = 0; i < q.grid.size(); ++i)
      os << format_real(q.grid[i]) << "," << format_real(q.estimates[i].value) << ","
         << format_real(q.estimates[i].std_error) << "\n";
    if (q.q) contractive = *q.q;
  }
  outs.write_json("rde_summary.json", {{"converged", report.converged},
                                       {"generations", report.generations},
                                       {"population_mean", report.population.mean()},
                                       {"contractive_q", contractive},
                                       {"config_digest", digest}});
  out << "generations=" << report.generations << " converged=" << report.converged
      << " mean=" << format_real(report.population.mean()) << "\n";
}

void run_free_energy(const ExperimentConfig& cfg, const std::string& digest, Outputs& outs,
                     std::ostream& out) {
  const auto r = limiting_free_energy(cfg.model, cfg.disorder, make_rule(cfg), limit_options(cfg),
                                      Stream(cfg.seed).child("free-energy"));
  json nodes = json::array();
  for (const auto& n : r.nodes)
    nodes.push_back({{"x", n.x},
                     {"rate", n.rate},
                     {"edge_term", n.edge_term.value},
                     {"se", n.edge_term.std_error},
                     {"converged", n.converged}});
  outs.write_json("free_energy.json", {{"value", r.value.value},
                                       {"std_error", r.value.std_error},
                                       {"nodes", nodes},
                                       {"h_term", r.h_term.value},
                                       {"converged", r.converged},
                                       {"failing_nodes", r.failing_nodes},
                                       {"config_digest", digest}});
  out << "F=" << format_real(r.value.value) << " se=" << format_real(r.value.std_error)
      << (r.converged ? "" : " (some nodes did not converge)") << "\n";
}

void run_convergence(const ExperimentConfig& cfg, const std::string& digest, Outputs& outs,
                     std::ostream& out) {
  const auto t = convergence_study(cfg.model, cfg.disorder, cfg.n_sites, cfg.replicates,
                                   make_rule(cfg), limit_options(cfg),
                                   Stream(cfg.seed).child("convergence"));
  auto os = outs.open("convergence.csv");
  os << "N,mean_F,std_F,limit,gap\n";
  for (const auto& row : t.rows)
    os << row.n_sites << "," << format_real(row.mean_f) << "," << format_real(row.std_f) << ","
       << format_real(row.limit) << "," << format_real(row.gap) << "\n";
  json slope = nullptr, r2 = nullptr;
  if (t.std_slope) {
    slope = t.std_slope->slope;
    r2 = t.std_slope->r2;
  }
  outs.write_json("convergence_summary.json", {{"std_slope", slope},
                                               {"std_slope_r2", r2},
                                               {"limit", t.limit.value.value},
                                               {"limit_se", t.limit.value.std_error},
                                               {"converged", t.limit.converged},
                                               {"config_digest", digest}});
  out << "limit=" << format_real(t.limit.value.value);
  if (t.std_slope) out << " std slope=" << format_real(t.std_slope->slope);
  out << "\n";
}

bool run_validate(const ExperimentConfig& cfg, Outputs& outs, std::ostream& out) {
  const auto rows = validate_suite(cfg, &out);
  auto os = outs.open("validate.csv");
  os << "criterion,measured,threshold,pass,seconds,detail\n";
  bool all = true;
  for (const auto& r : rows) {
    os << r.id << "," << format_real(r.measured) << "," << "\"" << r.threshold << "\","
       << (r.pass ? "true" : "false") << "," << format_real(r.seconds) << ",\"" << r.detail
       << "\"\n";
    all = all && r.pass;
  }
  return all;
}

void run_dump(const ExperimentConfig& cfg, Outputs& outs, std::ostream& out) {
  const auto m = sample_model(cfg.model, cfg.disorder, cfg.n_sites.front(),
                              Stream(cfg.seed).child("dump"));
  auto os = outs.open("model.txt");
  write_model(os, m);
  out << "N=" << m.n_sites << " M=" << m.clauses.size() << "\n";
}

void run_load(const ExperimentConfig& cfg, Outputs& outs, std::ostream& out) {
  std::ifstream in(cfg.model_file);
  if (!in) throw ConfigError("load.model_file: cannot open " + cfg.model_file);
  FactorModel m;
  try {
    m = read_model(in);
  } catch (const std::runtime_error& e) {
    throw ConfigError(cfg.model_file + ": " + e.what());
  }
  const auto s = summarize(m);
  auto os = outs.open("load.csv");
  os << "n_sites,n_clauses,log_det,ones_quadratic_form,free_energy,mean_inverse_diagonal\n";
  os << m.n_sites << "," << summary_cells(s) << "\n";
  out << "N=" << m.n_sites << " M=" << m.clauses.size() << " F_N=" << format_real(s.free_energy)
      << "\n";
}

}  // namespace

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto start = std::chrono::steady_clock::now();
  const std::string digest = sha256_hex(canonical_text(cfg));
  Outputs outs(cfg.output_dir);
  bool passed = true;
  try {
    fs::create_directories(outs.dir());
    switch (cfg.kind) {
      case ExperimentKind::simulate: run_simulate(cfg, outs, out); break;
      case ExperimentKind::rde: run_rde(cfg, digest, outs, out); break;
      case ExperimentKind::free_energy: run_free_energy(cfg, digest, outs, out); break;
      case ExperimentKind::convergence: run_convergence(cfg, digest, outs, out); break;
      case ExperimentKind::validate: passed = run_validate(cfg, outs, out); break;
      case ExperimentKind::dump: run_dump(cfg, outs, out); break;
      case ExperimentKind::load: run_load(cfg, outs, out); break;
    }
    RunManifest m = make_manifest(outs.dir(), outs.files());
    m.config_digest = digest;
    m.experiment = std::string(to_string(cfg.kind));
    m.seed = cfg.seed;
    m.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(outs.dir() / "manifest.json", m);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure in " << to_string(cfg.kind) << ": " << e.what() << "\n";
    return kExitNumerical;
  }
  return passed ? kExitOk : kExitValidate;
}

}  // namespace dqsg
