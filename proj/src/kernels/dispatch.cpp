#include <cstdlib>
#include <string>

#include "lgan/kernels/kernels.hpp"

namespace lgan::kern {

const KernelTable* avx2_table_impl();  // defined in kernels_avx2.cpp

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Selection {
  const KernelTable* active;
  std::string name;
};

const Selection& selection() {
  static const Selection sel = [] {
    Selection s{&scalar_table(), "scalar"};
    const KernelTable* avx2 = cpu_has_avx2_fma() ? avx2_table_impl() : nullptr;
    const char* force = std::getenv("LGAN_SIMD");
    if (force && std::string(force) == "scalar") return s;
    if (force && std::string(force) == "avx2" && !avx2) return s;  // unlisted fallback
    if (avx2) {
      s.active = avx2;
      s.name = "avx2";
    }
    return s;
  }();
  return sel;
}

}  // namespace

const KernelTable& table() { return *selection().active; }

const std::string& backend_name() { return selection().name; }

const KernelTable* avx2_table() { return cpu_has_avx2_fma() ? avx2_table_impl() : nullptr; }

}  // namespace lgan::kern
