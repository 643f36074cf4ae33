#pragma once

#include <cstddef>

namespace qpf::engine {

// C[m x n] += A[m x k] * B[k x n]; row-major with leading dimensions.
//
// Every C(i, j) is accumulated as c = c + a(i,0)*b(0,j), then k = 1, 2, ... in
// ascending order, independent of blocking. Convolution results are therefore
// reproducible by a plain nested loop with the same order.
template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                     const T* b, std::size_t ldb, T* c, std::size_t ldc);

// out[cols x rows] = transpose of in[rows x cols].
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out);

}  // namespace qpf::engine
