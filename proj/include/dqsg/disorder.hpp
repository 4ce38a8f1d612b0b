#pragma once

#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dqsg/rng.hpp"

namespace dqsg {

enum class DisorderFamily { rademacher, gaussian, uniform_symmetric, two_point_symmetric };

std::string_view to_string(DisorderFamily f);
DisorderFamily parse_disorder_family(std::string_view name);  // throws std::invalid_argument

inline constexpr double kNoTruncation = std::numeric_limits<double>::infinity();

// Symmetric disorder law D, optionally truncated as g -> g * 1(|g| <= c).
//
// `param` is the family scale: sigma for gaussian, the half-width for
// uniform_symmetric, the magnitude for two_point_symmetric; it is fixed to 1
// for rademacher. Construction rejects laws that put all their mass at 0.
class DisorderSpec {
public:
  static DisorderSpec rademacher();
  static DisorderSpec gaussian(double sigma);
  static DisorderSpec uniform_symmetric(double halfwidth);
  static DisorderSpec two_point_symmetric(double magnitude);

  // Generic constructor used by config parsing; validates everything.
  DisorderSpec(DisorderFamily family, double param, double truncation = kNoTruncation);

  DisorderFamily family() const { return family_; }
  double param() const { return param_; }
  double truncation() const { return truncation_; }
  bool truncated() const { return truncation_ != kNoTruncation; }

  bool operator==(const DisorderSpec&) const = default;

private:
  DisorderFamily family_;
  double param_;
  double truncation_;
};

// Stateful sampler; keep one per engine so the gaussian path can reuse its
// cached second normal.
class DisorderSampler {
public:
  explicit DisorderSampler(const DisorderSpec& spec);
  double operator()(Engine& eng);

private:
  DisorderSpec spec_;
  std::normal_distribution<double> normal_;
};

std::vector<double> sample_disorder(const DisorderSpec& spec, std::size_t n, Engine& eng);

// Exact E[g^2 1(|g| <= c)]; closed forms for every family.
double second_moment(const DisorderSpec& spec);

// Truncation composes: truncating at c' after c gives min(c, c').
DisorderSpec truncate_spec(const DisorderSpec& spec, double c);

// "family:param:truncation", e.g. "gaussian:1:inf".
std::string describe(const DisorderSpec& spec);
DisorderSpec parse_disorder(std::string_view text);

}  // namespace dqsg
