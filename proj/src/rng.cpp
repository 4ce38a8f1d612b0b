#include "dqsg/rng.hpp"

namespace dqsg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Stream Stream::child(std::uint64_t index) const {
  return Stream(splitmix64(key_ ^ splitmix64(index + 0x9e3779b97f4a7c15ULL)));
}

Stream Stream::child(std::string_view label) const {
  return child(fnv1a64(label));
}

}  // namespace dqsg
