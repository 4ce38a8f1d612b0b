#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dqsg {

using Engine = std::mt19937_64;

// Node in the seed-derivation tree.
//
// Every random computation is keyed by a path from the experiment seed, e.g.
// seed -> "rde" -> generation 17 -> chunk 3. Keys are mixed with splitmix64:
//
//   child(k, i)     = splitmix64(k ^ splitmix64(i + 0x9e3779b97f4a7c15))
//   child(k, label) = child(k, fnv1a64(label))
//
// so results depend only on the path, never on scheduling or worker count.
class Stream {
public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  Stream child(std::uint64_t index) const;
  Stream child(std::string_view label) const;

  template <typename... Rest>
  Stream child(std::string_view label, Rest... rest) const {
    return child(label).child(rest...);
  }
  template <typename... Rest>
  Stream child(std::uint64_t index, Rest... rest) const {
    return child(index).child(rest...);
  }

  Engine engine() const { return Engine(key_); }
  std::uint64_t key() const { return key_; }

  bool operator==(const Stream&) const = default;

private:
  std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

// Uniform index in [0, n) without the implementation-defined
// std::uniform_int_distribution, so populations resample identically
// across standard libraries.
inline std::size_t uniform_index(Engine& eng, std::size_t n) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = eng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = -static_cast<std::uint64_t>(n) % n;
    while (low < threshold) {
      x = eng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace dqsg
