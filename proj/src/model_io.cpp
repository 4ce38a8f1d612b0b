#include "dqsg/model_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace dqsg {

void write_model(std::ostream& os, const FactorModel& model) {
  const auto old_precision = os.precision(17);
  const auto& pr = model.params;
  os << model.n_sites << ' ' << model.clauses.size() << ' ' << pr.alpha << ' ' << pr.beta << ' '
     << pr.h << ' ' << pr.p << ' ' << describe(model.disorder) << '\n';
  for (const auto& c : model.clauses) {
    for (std::size_t s : c.sites) os << s + 1 << ' ';
    for (std::size_t r = 0; r < c.weights.size(); ++r)
      os << c.weights[r] << (r + 1 < c.weights.size() ? ' ' : '\n');
  }
  os.precision(old_precision);
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw std::runtime_error("model file line " + std::to_string(line) + ": " + what);
}

}  // namespace

FactorModel read_model(std::istream& is) {
  std::string text;
  if (!std::getline(is, text)) fail(1, "missing header");
  FactorModel m;
  std::size_t count = 0;
  std::string disorder;
  {
    std::istringstream header(text);
    if (!(header >> m.n_sites >> count >> m.params.alpha >> m.params.beta >> m.params.h >>
          m.params.p >> disorder))
      fail(1, "expected 'N M alpha beta h p disorder'");
    try {
      m.params.validate();
      m.disorder = parse_disorder(disorder);
    } catch (const std::invalid_argument& e) {
      fail(1, e.what());
    }
  }
  const auto p = static_cast<std::size_t>(m.params.p);
  if (m.n_sites < p) fail(1, "N is smaller than p");
  m.clauses.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t line = k + 2;
    if (!std::getline(is, text)) fail(line, "expected " + std::to_string(count) + " clauses");
    std::istringstream row(text);
    Clause& c = m.clauses[k];
    c.sites.resize(p);
    c.weights.resize(p);
    for (auto& s : c.sites) {
      if (!(row >> s) || s < 1 || s > m.n_sites) fail(line, "bad site index");
      --s;
    }
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t t = r + 1; t < p; ++t)
        if (c.sites[r] == c.sites[t]) fail(line, "repeated site in clause");
    for (auto& w : c.weights)
      if (!(row >> w)) fail(line, "bad weight");
    std::string extra;
    if (row >> extra) fail(line, "trailing field '" + extra + "'");
  }
  return m;
}

}  // namespace dqsg
