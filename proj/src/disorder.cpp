#include "dqsg/disorder.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dqsg {

std::string_view to_string(DisorderFamily f) {
  switch (f) {
    case DisorderFamily::rademacher: return "rademacher";
    case DisorderFamily::gaussian: return "gaussian";
    case DisorderFamily::uniform_symmetric: return "uniform_symmetric";
    case DisorderFamily::two_point_symmetric: return "two_point_symmetric";
  }
  return "?";
}

DisorderFamily parse_disorder_family(std::string_view name) {
  for (auto f : {DisorderFamily::rademacher, DisorderFamily::gaussian,
                 DisorderFamily::uniform_symmetric, DisorderFamily::two_point_symmetric}) {
    if (name == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown disorder family '" + std::string(name) + "'");
}

DisorderSpec::DisorderSpec(DisorderFamily family, double param, double truncation)
    : family_(family), param_(param), truncation_(truncation) {
  if (family_ == DisorderFamily::rademacher) param_ = 1.0;
  if (!(param_ > 0.0) || !std::isfinite(param_))
    throw std::invalid_argument("disorder.param must be positive and finite");
  if (!(truncation_ > 0.0))
    throw std::invalid_argument("disorder.truncation must be positive");
  // Atomic families lose all their mass when truncated below the atom.
  const bool atomic = family_ == DisorderFamily::rademacher ||
                      family_ == DisorderFamily::two_point_symmetric;
  if (atomic && truncation_ < param_)
    throw std::invalid_argument("disorder.truncation below the support of " +
                                std::string(to_string(family_)) +
                                " leaves all mass at 0");
}

DisorderSpec DisorderSpec::rademacher() { return {DisorderFamily::rademacher, 1.0}; }
DisorderSpec DisorderSpec::gaussian(double sigma) { return {DisorderFamily::gaussian, sigma}; }
DisorderSpec DisorderSpec::uniform_symmetric(double a) {
  return {DisorderFamily::uniform_symmetric, a};
}
DisorderSpec DisorderSpec::two_point_symmetric(double m) {
  return {DisorderFamily::two_point_symmetric, m};
}

DisorderSampler::DisorderSampler(const DisorderSpec& spec)
    : spec_(spec), normal_(0.0, spec.param()) {}

double DisorderSampler::operator()(Engine& eng) {
  double g = 0.0;
  switch (spec_.family()) {
    case DisorderFamily::rademacher:
      g = (eng() >> 63) ? 1.0 : -1.0;
      break;
    case DisorderFamily::two_point_symmetric:
      g = (eng() >> 63) ? spec_.param() : -spec_.param();
      break;
    case DisorderFamily::uniform_symmetric:
      g = (2.0 * uniform01(eng) - 1.0) * spec_.param();
      break;
    case DisorderFamily::gaussian:
      g = normal_(eng);
      break;
  }
  return std::abs(g) <= spec_.truncation() ? g : 0.0;
}

std::vector<double> sample_disorder(const DisorderSpec& spec, std::size_t n, Engine& eng) {
  DisorderSampler draw(spec);
  std::vector<double> out(n);
  for (auto& g : out) g = draw(eng);
  return out;
}

double second_moment(const DisorderSpec& spec) {
  const double a = spec.param();
  const double c = spec.truncation();
  switch (spec.family()) {
    case DisorderFamily::rademacher:
    case DisorderFamily::two_point_symmetric:
      return a * a;  // construction guarantees c >= a
    case DisorderFamily::uniform_symmetric:
      return c >= a ? a * a / 3.0 : c * c * c / (3.0 * a);
    case DisorderFamily::gaussian: {
      if (!spec.truncated()) return a * a;
      // sigma^2 (erf(t/sqrt2) - 2 t phi(t)), t = c/sigma
      const double t = c / a;
      const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
      return a * a * (std::erf(t / std::numbers::sqrt2) - 2.0 * t * phi);
    }
  }
  return 0.0;
}

DisorderSpec truncate_spec(const DisorderSpec& spec, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("truncation level must be positive");
  return {spec.family(), spec.param(), std::min(spec.truncation(), c)};
}

namespace {

std::string format_real(double x) {
  if (std::isinf(x)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double parse_real(std::string_view s) {
  if (s == "inf" || s == "Inf" || s == "INF") return kNoTruncation;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string describe(const DisorderSpec& spec) {
  return std::string(to_string(spec.family())) + ":" + format_real(spec.param()) + ":" +
         format_real(spec.truncation());
}

DisorderSpec parse_disorder(std::string_view text) {
  const auto p1 = text.find(':');
  const auto p2 = p1 == std::string_view::npos ? p1 : text.find(':', p1 + 1);
  if (p2 == std::string_view::npos)
    throw std::invalid_argument("disorder must be family:param:truncation");
  return {parse_disorder_family(text.substr(0, p1)),
          parse_real(text.substr(p1 + 1, p2 - p1 - 1)), parse_real(text.substr(p2 + 1))};
}

}  // namespace dqsg
