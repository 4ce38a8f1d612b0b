#pragma once

#include <ostream>
#include <string>

#include "dqsg/config.hpp"
#include "dqsg/free_energy.hpp"
#include "dqsg/quadrature.hpp"

namespace dqsg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidate = 3;
inline constexpr int kExitNumerical = 4;

// Validates `cfg`, runs the experiment it names, and writes its outputs plus
// manifest.json into cfg.output_dir. Returns one of the exit codes above;
// diagnostics go to `err`, a short summary to `out`.
//
// Outputs per experiment:
//   simulate     simulate.csv
//   rde          rde.csv, population.txt, contraction.csv, rde_summary.json
//   free-energy  free_energy.json
//   convergence  convergence.csv, convergence_summary.json
//   validate     validate.csv (plus sub-runs of the determinism check)
//   dump         model.txt
//   load         load.csv
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

// "%.17g": what every CSV cell uses.
std::string format_real(double v);

QuadratureRule make_rule(const ExperimentConfig& cfg);
LimitOptions limit_options(const ExperimentConfig& cfg);

}  // namespace dqsg
