#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace dqsg {

struct Provenance {
  std::uint64_t stream_key = 0;
  std::string config_digest;
};

// Monte Carlo scalar result.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  Provenance provenance;
};

// Sample mean with standard error sd/sqrt(n); SE is 0 for n == 1.
Estimate estimate_mean(std::span<const double> xs, std::uint64_t stream_key = 0);

// Mean with jackknife SE over `blocks` contiguous blocks.
Estimate jackknife_mean(std::span<const double> xs, std::size_t blocks,
                        std::uint64_t stream_key = 0);

}  // namespace dqsg
