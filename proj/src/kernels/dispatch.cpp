#include <cstdlib>
#include <string_view>

#include "semcube/kernels.hpp"

namespace semcube::kernels {

#if defined(SEMCUBE_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

const KernelTable* avx2() {
#if defined(SEMCUBE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [&]() -> const KernelTable& {
    const char* forced = std::getenv("SEMCUBE_KERNELS");
    if (forced && std::string_view(forced) == "scalar") return scalar();
    if (const auto* t = avx2()) return *t;
    return scalar();
  }();
  return chosen;
}

}  // namespace semcube::kernels
