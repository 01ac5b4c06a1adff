#pragma once

// Row-major matrix products built from the dispatched kernels. Reduction
// order depends only on the shapes and the active ISA, never on timing.

#include <cstddef>

namespace kanae::simd {

/// y[r][o] = sum_i x[r][i] * w[o][i]   (y = x * w^T, y overwritten)
void matmul_nt(const double* x, std::size_t rows, const double* w, std::size_t outs, std::size_t inner,
               double* y);

/// acc[o][i] += sum_r g[r][o] * x[r][i]   (acc += g^T * x)
void matmul_acc_tn(const double* g, std::size_t rows, std::size_t outs, const double* x,
                   std::size_t inner, double* acc);

/// acc[r][i] += sum_o g[r][o] * w[o][i]   (acc += g * w)
void matmul_acc_nn(const double* g, std::size_t rows, std::size_t outs, const double* w,
                   std::size_t inner, double* acc);

} // namespace kanae::simd
