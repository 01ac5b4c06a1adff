// AVX2 + FMA variants. Compiled with -mavx2 -mfma -ffp-contract=off; only
// reached through the dispatch table after a CPUID check.

#include "kanae/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace kanae::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    s += a[i] * b[i];
  return s;
}

void dot4_avx2(const double* w, const double* const* x, std::size_t n, double* out) {
  const double* x0 = x[0];
  const double* x1 = x[1];
  const double* x2 = x[2];
  const double* x3 = x[3];
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  __m256d t0 = _mm256_setzero_pd(), t1 = _mm256_setzero_pd();
  __m256d t2 = _mm256_setzero_pd(), t3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d wa = _mm256_loadu_pd(w + i);
    const __m256d wb = _mm256_loadu_pd(w + i + 4);
    s0 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x0 + i), s0);
    s1 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x1 + i), s1);
    s2 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x2 + i), s2);
    s3 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x3 + i), s3);
    t0 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x0 + i + 4), t0);
    t1 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x1 + i + 4), t1);
    t2 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x2 + i + 4), t2);
    t3 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(x3 + i + 4), t3);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_loadu_pd(w + i);
    s0 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x0 + i), s0);
    s1 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x1 + i), s1);
    s2 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x2 + i), s2);
    s3 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(x3 + i), s3);
  }
  double r0 = hsum(_mm256_add_pd(s0, t0));
  double r1 = hsum(_mm256_add_pd(s1, t1));
  double r2 = hsum(_mm256_add_pd(s2, t2));
  double r3 = hsum(_mm256_add_pd(s3, t3));
  for (; i < n; ++i) {
    const double wi = w[i];
    r0 += wi * x0[i];
    r1 += wi * x1[i];
    r2 += wi * x2[i];
    r3 += wi * x3[i];
  }
  out[0] = r0;
  out[1] = r1;
  out[2] = r2;
  out[3] = r3;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i)
    y[i] += a * x[i];
}

void axpy4_avx2(const double* a, const double* const* x, double* y, std::size_t n) {
  const __m256d a0 = _mm256_set1_pd(a[0]);
  const __m256d a1 = _mm256_set1_pd(a[1]);
  const __m256d a2 = _mm256_set1_pd(a[2]);
  const __m256d a3 = _mm256_set1_pd(a[3]);
  const double* x0 = x[0];
  const double* x1 = x[1];
  const double* x2 = x[2];
  const double* x3 = x[3];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(x0 + i), acc);
    acc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(x1 + i), acc);
    acc = _mm256_fmadd_pd(a2, _mm256_loadu_pd(x2 + i), acc);
    acc = _mm256_fmadd_pd(a3, _mm256_loadu_pd(x3 + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i)
    y[i] += a[0] * x0[i] + a[1] * x1[i] + a[2] * x2[i] + a[3] * x3[i];
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void adam_update_avx2(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  // Mul/add only (no FMA) so results match the scalar reference bit for bit.
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

} // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      Isa::avx2, dot_avx2, dot4_avx2, axpy_avx2, axpy4_avx2, squared_distance_avx2, adam_update_avx2,
  };
  return table;
}

} // namespace kanae::simd
