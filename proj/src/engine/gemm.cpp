#include "qpf/engine/gemm.hpp"

#include <algorithm>

namespace qpf::engine {
namespace {

constexpr std::size_t kVectorBytes = 64;
constexpr std::size_t kDepthBlock = 128;
constexpr std::size_t kTileRows = 6;
constexpr std::size_t kTileVecs = 4;

template <typename T>
struct Lanes {
  typedef T type __attribute__((vector_size(kVectorBytes)));
  // Same vector, element-aligned, for unaligned loads and stores.
  typedef T unaligned __attribute__((vector_size(kVectorBytes), aligned(sizeof(T)), may_alias));
  static constexpr std::size_t count = kVectorBytes / sizeof(T);
};

template <typename V, typename T>
inline V load(const T* p) {
  return *reinterpret_cast<const typename Lanes<T>::unaligned*>(p);
}

template <typename V, typename T>
inline void store(T* p, const V& v) {
  *reinterpret_cast<typename Lanes<T>::unaligned*>(p) = v;
}

// Register tile of `rows` x (`vecs` * lanes) outputs over a depth slice.
template <typename T, std::size_t rows, std::size_t vecs>
inline void tile(std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c,
                 std::size_t ldc) {
  using V = typename Lanes<T>::type;
  constexpr std::size_t L = Lanes<T>::count;
  V acc[rows][vecs];
#pragma GCC unroll 8
  for (std::size_t r = 0; r < rows; ++r) {
#pragma GCC unroll 8
    for (std::size_t v = 0; v < vecs; ++v) acc[r][v] = load<V>(c + r * ldc + v * L);
  }
  for (std::size_t kk = 0; kk < k; ++kk) {
    V bv[vecs];
#pragma GCC unroll 8
    for (std::size_t v = 0; v < vecs; ++v) bv[v] = load<V>(b + kk * ldb + v * L);
#pragma GCC unroll 8
    for (std::size_t r = 0; r < rows; ++r) {
      const T s = a[r * lda + kk];
#pragma GCC unroll 8
      for (std::size_t v = 0; v < vecs; ++v) acc[r][v] += s * bv[v];
    }
  }
#pragma GCC unroll 8
  for (std::size_t r = 0; r < rows; ++r) {
#pragma GCC unroll 8
    for (std::size_t v = 0; v < vecs; ++v) store(c + r * ldc + v * L, acc[r][v]);
  }
}

template <typename T, std::size_t vecs>
inline void column_panel(std::size_t m, std::size_t k, const T* a, std::size_t lda, const T* b,
                         std::size_t ldb, T* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + kTileRows <= m; i += kTileRows) {
    tile<T, kTileRows, vecs>(k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
  }
  for (; i < m; ++i) tile<T, 1, vecs>(k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
}

// One depth slice of the product.
template <typename T>
void gemm_slice(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
                std::size_t ldb, T* c, std::size_t ldc) {
  constexpr std::size_t L = Lanes<T>::count;
  std::size_t j = 0;
  if (m < kTileRows) {
    // Skinny outputs: wider panels keep enough independent accumulators in flight.
    for (; j + 8 * L <= n; j += 8 * L) {
      for (std::size_t i = 0; i < m; ++i) tile<T, 1, 8>(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    }
  }
  for (; j + kTileVecs * L <= n; j += kTileVecs * L) {
    column_panel<T, kTileVecs>(m, k, a, lda, b + j, ldb, c + j, ldc);
  }
  for (; j + L <= n; j += L) column_panel<T, 1>(m, k, a, lda, b + j, ldb, c + j, ldc);
  for (; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      T acc = c[i * ldc + j];
      for (std::size_t kk = 0; kk < k; ++kk) acc += a[i * lda + kk] * b[kk * ldb + j];
      c[i * ldc + j] = acc;
    }
  }
}

}  // namespace

template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                     const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  // Depth slices run in ascending order, so per-element summation order is
  // unchanged by the blocking.
  for (std::size_t k0 = 0; k0 < k; k0 += kDepthBlock) {
    const std::size_t kb = std::min(kDepthBlock, k - k0);
    gemm_slice(m, n, kb, a + k0, lda, b + k0 * ldb, ldb, c, ldc);
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t r1 = std::min(r0 + kBlock, rows);
      const std::size_t c1 = std::min(c0 + kBlock, cols);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t cc = c0; cc < c1; ++cc) out[cc * rows + r] = in[r * cols + cc];
      }
    }
  }
}

template void gemm_accumulate<float>(std::size_t, std::size_t, std::size_t, const float*, std::size_t,
                                     const float*, std::size_t, float*, std::size_t);
template void gemm_accumulate<double>(std::size_t, std::size_t, std::size_t, const double*,
                                      std::size_t, const double*, std::size_t, double*, std::size_t);
template void transpose<float>(std::size_t, std::size_t, const float*, float*);
template void transpose<double>(std::size_t, std::size_t, const double*, double*);

}  // namespace qpf::engine
