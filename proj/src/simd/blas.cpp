#include "kanae/simd/blas.hpp"

#include "kanae/simd/kernels.hpp"

#include <algorithm>

namespace kanae::simd {
namespace {
constexpr std::size_t kRowBlock = 64;
}

void matmul_nt(const double* x, std::size_t rows, const double* w, std::size_t outs, std::size_t inner,
               double* y) {
  const KernelTable& k = kernels();
  for (std::size_t r0 = 0; r0 < rows; r0 += kRowBlock) {
    const std::size_t r1 = std::min(rows, r0 + kRowBlock);
    for (std::size_t o = 0; o < outs; ++o) {
      const double* wo = w + o * inner;
      std::size_t r = r0;
      for (; r + 4 <= r1; r += 4) {
        const double* xs[4] = {x + r * inner, x + (r + 1) * inner, x + (r + 2) * inner,
                               x + (r + 3) * inner};
        double out[4];
        k.dot4(wo, xs, inner, out);
        for (std::size_t j = 0; j < 4; ++j)
          y[(r + j) * outs + o] = out[j];
      }
      for (; r < r1; ++r)
        y[r * outs + o] = k.dot(wo, x + r * inner, inner);
    }
  }
}

void matmul_acc_tn(const double* g, std::size_t rows, std::size_t outs, const double* x,
                   std::size_t inner, double* acc) {
  const KernelTable& k = kernels();
  for (std::size_t r0 = 0; r0 < rows; r0 += kRowBlock) {
    const std::size_t r1 = std::min(rows, r0 + kRowBlock);
    for (std::size_t o = 0; o < outs; ++o) {
      double* ao = acc + o * inner;
      std::size_t r = r0;
      for (; r + 4 <= r1; r += 4) {
        const double coeff[4] = {g[r * outs + o], g[(r + 1) * outs + o], g[(r + 2) * outs + o],
                                 g[(r + 3) * outs + o]};
        const double* xs[4] = {x + r * inner, x + (r + 1) * inner, x + (r + 2) * inner,
                               x + (r + 3) * inner};
        k.axpy4(coeff, xs, ao, inner);
      }
      for (; r < r1; ++r)
        k.axpy(g[r * outs + o], x + r * inner, ao, inner);
    }
  }
}

void matmul_acc_nn(const double* g, std::size_t rows, std::size_t outs, const double* w,
                   std::size_t inner, double* acc) {
  const KernelTable& k = kernels();
  for (std::size_t r0 = 0; r0 < rows; r0 += kRowBlock) {
    const std::size_t r1 = std::min(rows, r0 + kRowBlock);
    std::size_t o = 0;
    for (; o + 4 <= outs; o += 4) {
      const double* ws[4] = {w + o * inner, w + (o + 1) * inner, w + (o + 2) * inner,
                             w + (o + 3) * inner};
      for (std::size_t r = r0; r < r1; ++r)
        k.axpy4(g + r * outs + o, ws, acc + r * inner, inner);
    }
    for (; o < outs; ++o)
      for (std::size_t r = r0; r < r1; ++r)
        k.axpy(g[r * outs + o], w + o * inner, acc + r * inner, inner);
  }
}

} // namespace kanae::simd
