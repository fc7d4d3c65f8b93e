// AVX2 + FMA kernels. Compiled with per-function target attributes so the rest
// of the library stays baseline x86-64; only called after a cpuid check.

#include "mbvd/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#define MBVD_AVX2 __attribute__((target("avx2,fma")))

namespace mbvd::simd::detail {
namespace {

MBVD_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

MBVD_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

MBVD_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// C[rows x n] += sum_d A(r, d) * B[d, :], with A(r, d) = a[r * rs + d * ds].
// Register-blocked 4 rows x 8 columns; covers both A*B and A^T*B.
MBVD_AVX2 void gemm_rank_update(std::size_t rows, std::size_t n, std::size_t depth, const double* a,
                                std::size_t rs, std::size_t ds, const double* b, double* c) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* a0 = a + (r + 0) * rs;
    const double* a1 = a + (r + 1) * rs;
    const double* a2 = a + (r + 2) * rs;
    const double* a3 = a + (r + 3) * rs;
    double* c0 = c + (r + 0) * n;
    double* c1 = c + (r + 1) * n;
    double* c2 = c + (r + 2) * n;
    double* c3 = c + (r + 3) * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d x00 = _mm256_loadu_pd(c0 + j), x01 = _mm256_loadu_pd(c0 + j + 4);
      __m256d x10 = _mm256_loadu_pd(c1 + j), x11 = _mm256_loadu_pd(c1 + j + 4);
      __m256d x20 = _mm256_loadu_pd(c2 + j), x21 = _mm256_loadu_pd(c2 + j + 4);
      __m256d x30 = _mm256_loadu_pd(c3 + j), x31 = _mm256_loadu_pd(c3 + j + 4);
      for (std::size_t d = 0; d < depth; ++d) {
        const double* brow = b + d * n + j;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        const std::size_t off = d * ds;
        __m256d av = _mm256_broadcast_sd(a0 + off);
        x00 = _mm256_fmadd_pd(av, b0, x00);
        x01 = _mm256_fmadd_pd(av, b1, x01);
        av = _mm256_broadcast_sd(a1 + off);
        x10 = _mm256_fmadd_pd(av, b0, x10);
        x11 = _mm256_fmadd_pd(av, b1, x11);
        av = _mm256_broadcast_sd(a2 + off);
        x20 = _mm256_fmadd_pd(av, b0, x20);
        x21 = _mm256_fmadd_pd(av, b1, x21);
        av = _mm256_broadcast_sd(a3 + off);
        x30 = _mm256_fmadd_pd(av, b0, x30);
        x31 = _mm256_fmadd_pd(av, b1, x31);
      }
      _mm256_storeu_pd(c0 + j, x00);
      _mm256_storeu_pd(c0 + j + 4, x01);
      _mm256_storeu_pd(c1 + j, x10);
      _mm256_storeu_pd(c1 + j + 4, x11);
      _mm256_storeu_pd(c2 + j, x20);
      _mm256_storeu_pd(c2 + j + 4, x21);
      _mm256_storeu_pd(c3 + j, x30);
      _mm256_storeu_pd(c3 + j + 4, x31);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d x0 = _mm256_loadu_pd(c0 + j);
      __m256d x1 = _mm256_loadu_pd(c1 + j);
      __m256d x2 = _mm256_loadu_pd(c2 + j);
      __m256d x3 = _mm256_loadu_pd(c3 + j);
      for (std::size_t d = 0; d < depth; ++d) {
        const __m256d bv = _mm256_loadu_pd(b + d * n + j);
        const std::size_t off = d * ds;
        x0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + off), bv, x0);
        x1 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + off), bv, x1);
        x2 = _mm256_fmadd_pd(_mm256_broadcast_sd(a2 + off), bv, x2);
        x3 = _mm256_fmadd_pd(_mm256_broadcast_sd(a3 + off), bv, x3);
      }
      _mm256_storeu_pd(c0 + j, x0);
      _mm256_storeu_pd(c1 + j, x1);
      _mm256_storeu_pd(c2 + j, x2);
      _mm256_storeu_pd(c3 + j, x3);
    }
    for (; j < n; ++j) {
      double s0 = c0[j], s1 = c1[j], s2 = c2[j], s3 = c3[j];
      for (std::size_t d = 0; d < depth; ++d) {
        const double bv = b[d * n + j];
        const std::size_t off = d * ds;
        s0 += a0[off] * bv;
        s1 += a1[off] * bv;
        s2 += a2[off] * bv;
        s3 += a3[off] * bv;
      }
      c0[j] = s0;
      c1[j] = s1;
      c2[j] = s2;
      c3[j] = s3;
    }
  }
  for (; r < rows; ++r) {
    const double* ar = a + r * rs;
    double* cr = c + r * n;
    for (std::size_t d = 0; d < depth; ++d) axpy_avx2(ar[d * ds], b + d * n, cr, n);
  }
}

MBVD_AVX2 void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                            const double* b, double* c) {
  gemm_rank_update(m, n, k, a, k, 1, b, c);
}

MBVD_AVX2 void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                            const double* b, double* c) {
  // Output row p gathers column p of A across the m rows.
  gemm_rank_update(k, n, m, a, 1, k, b, c);
}

MBVD_AVX2 void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                            const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += dot_avx2(arow, b + j * k, k);
  }
}

}  // namespace

const KernelTable kAvx2Table = {dot_avx2, axpy_avx2, gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2};

}  // namespace mbvd::simd::detail

#endif
