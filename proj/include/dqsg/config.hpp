#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dqsg/disorder.hpp"
#include "dqsg/model.hpp"
#include "dqsg/rde.hpp"

namespace dqsg {

// Bad config text or values; the CLI maps it to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { simulate, rde, free_energy, convergence, validate, dump, load };
std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);  // throws ConfigError

enum class ValidatePreset { desk, quick };

// Flat key=value file, one entry per line, '#' starts a comment:
//
//   model.alpha=0.5
//   disorder.family=rademacher
//   experiment.n_sites=250,1000,4000
//
// Keys not listed in config_keys() are rejected.
struct ExperimentConfig {
  ModelParams model{0.5, 0.25, 1.0, 2};
  DisorderSpec disorder = DisorderSpec::rademacher();
  ExperimentKind kind = ExperimentKind::simulate;
  std::vector<std::size_t> n_sites{1000};
  std::size_t replicates = 20;
  RdeOptions rde;
  double rate_scale = 1.0;
  std::size_t quadrature_nodes = 16;
  std::string quadrature_rule = "gauss_legendre";
  std::size_t n_mc = 200000;
  std::vector<double> q_grid{1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::size_t contraction_n_mc = 1000000;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string model_file;
  ValidatePreset validate_preset = ValidatePreset::desk;

  // Checks every field against the preconditions of the experiment it feeds;
  // throws ConfigError naming the offending key.
  void validate() const;
};

const std::vector<std::string>& config_keys();

ExperimentConfig parse_config(std::istream& in, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key with its effective value, sorted by key, one "key=value" per
// line. Reals use 17 significant digits. This is what gets digested.
// output.dir is left out: where results land does not change them.
std::string canonical_text(const ExperimentConfig& cfg);

}  // namespace dqsg
