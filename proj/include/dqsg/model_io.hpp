#pragma once

#include <iosfwd>

#include "dqsg/model.hpp"

namespace dqsg {

// Portable text format. Header line:
//   N M alpha beta h p family:param:truncation
// then one line per clause: p site indices (1-based), then p weights.
// Reals are written with 17 significant digits, so write/read round-trips.
void write_model(std::ostream& os, const FactorModel& model);
FactorModel read_model(std::istream& is);  // throws std::runtime_error with a line number

}  // namespace dqsg
