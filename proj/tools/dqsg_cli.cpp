#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "dqsg/experiments.hpp"
#include "dqsg/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the diluted quadratic spin glass"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::size_t workers = 0;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");

  for (auto kind : {dqsg::ExperimentKind::simulate, dqsg::ExperimentKind::rde,
                    dqsg::ExperimentKind::free_energy, dqsg::ExperimentKind::convergence,
                    dqsg::ExperimentKind::validate, dqsg::ExperimentKind::dump,
                    dqsg::ExperimentKind::load})
    app.add_subcommand(std::string(dqsg::to_string(kind)))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dqsg::kExitConfig;
  }

  dqsg::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = dqsg::load_config(config_path);
    cfg.kind = dqsg::parse_experiment_kind(app.get_subcommands().front()->get_name());
  } catch (const dqsg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dqsg::kExitConfig;
  }
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.output_dir = *out_dir;
  dqsg::set_worker_count(workers);
  return dqsg::run(cfg, std::cout, std::cerr);
}
