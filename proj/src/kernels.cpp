#include "cpl/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "cpl/error.hpp"

namespace cpl::kern {

#if defined(CPL_HAVE_AVX2_TU)
const Ops& avx2_ops_impl();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CPL_HAVE_AVX2_TU)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

// Honors CPL_KERNEL=scalar|avx2; otherwise picks the widest backend the CPU
// supports. Evaluated once, on first kernel use.
Backend pick_initial() {
  if (const char* env = std::getenv("CPL_KERNEL")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2") {
      if (!cpu_has_avx2())
        fail(ErrorKind::config,
             "CPL_KERNEL=avx2 requested but AVX2 kernels are unavailable");
      return Backend::avx2;
    }
    fail(ErrorKind::config,
         "unknown CPL_KERNEL value '" + v + "' (expected scalar or avx2)");
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{pick_initial()};
  return b;
}

}  // namespace

bool backend_available(Backend b) {
  return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b))
    fail(ErrorKind::config, "requested kernel backend is unavailable");
  current().store(b, std::memory_order_relaxed);
}

const Ops& ops() {
  switch (active_backend()) {
#if defined(CPL_HAVE_AVX2_TU)
    case Backend::avx2:
      return avx2_ops_impl();
#endif
    default:
      return scalar_ops();
  }
}

}  // namespace cpl::kern
