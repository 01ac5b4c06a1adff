#include "kanae/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace kanae::simd {

#if defined(KANAE_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
  case Isa::scalar: return "scalar";
  case Isa::avx2: return "avx2";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar")
    return Isa::scalar;
  if (name == "avx2")
    return Isa::avx2;
  return std::nullopt;
}

const KernelTable* avx2_kernels() {
#if defined(KANAE_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("KANAE_SIMD")) {
    if (auto isa = parse_isa(env)) {
      if (*isa == Isa::scalar)
        return &scalar_kernels();
      if (const KernelTable* t = avx2_kernels())
        return t;
    }
  }
  if (const KernelTable* t = avx2_kernels())
    return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

} // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool set_active_isa(Isa isa) {
  const KernelTable* t = isa == Isa::scalar ? &scalar_kernels() : avx2_kernels();
  if (t == nullptr)
    return false;
  active().store(t, std::memory_order_release);
  return true;
}

Isa active_isa() { return kernels().isa; }

} // namespace kanae::simd
