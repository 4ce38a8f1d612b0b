#include "dqsg/parallel.hpp"

namespace dqsg {

namespace {
std::atomic<std::size_t> g_workers{0};
}

std::size_t worker_count() {
  const std::size_t n = g_workers.load();
  if (n != 0) return n;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_worker_count(std::size_t n) { g_workers.store(n); }

}  // namespace dqsg
