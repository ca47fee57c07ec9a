#include "iatforge/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace iatforge::par {

namespace {
bool initial_enabled() {
#ifdef _OPENMP
  const char* env = std::getenv("IATFORGE_SERIAL");
  return env == nullptr || std::strcmp(env, "1") != 0;
#else
  return false;
#endif
}

std::atomic<bool>& flag() {
  static std::atomic<bool> value{initial_enabled()};
  return value;
}
}  // namespace

bool enabled() noexcept { return flag().load(std::memory_order_relaxed); }

void set_enabled(bool value) noexcept {
#ifndef _OPENMP
  value = false;
#endif
  flag().store(value, std::memory_order_relaxed);
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace iatforge::par
