#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2/FMA version chosen at runtime. The rest of the library
// only calls through `kernels()`.

#include <cstddef>
#include <optional>
#include <string_view>

namespace kanae::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1; // 1 - beta1^t
  double bias_correction2; // 1 - beta2^t
};

struct KernelTable {
  Isa isa;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // out[r] = dot(w, x[r]) for r in 0..3
  void (*dot4)(const double* w, const double* const* x, std::size_t n, double* out);

  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // y += a[0]*x[0] + a[1]*x[1] + a[2]*x[2] + a[3]*x[3]
  void (*axpy4)(const double* a, const double* const* x, double* y, std::size_t n);

  // sum_i (a_i - b_i)^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);

  // Bias-corrected Adam update, in place. Elementwise, so every ISA gives
  // bitwise-identical results.
  void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary was built without AVX2 or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// The table in use. Picks the best supported ISA on first call unless
/// KANAE_SIMD=scalar|avx2 is set in the environment.
const KernelTable& kernels();

/// Switch the active table; returns false if `isa` is unavailable here.
bool set_active_isa(Isa isa);

Isa active_isa();

} // namespace kanae::simd
