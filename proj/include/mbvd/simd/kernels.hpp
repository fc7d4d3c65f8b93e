#pragma once
// Dense double-precision kernels used by every matrix product in the library.
//
// Each primitive has a scalar reference implementation and vectorized
// variants (AVX2+FMA on x86-64, NEON on aarch64). The variant is picked once
// at startup from the host CPU; MBVD_SIMD=scalar in the environment forces the
// reference path. All matrices are row-major and densely packed.

#include <cstddef>
#include <string_view>

namespace mbvd::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend backend);

// Best backend the running CPU supports.
Backend detect_backend();

// Backend currently used by the dispatched entry points below.
Backend active_backend();

// Overrides the dispatch target. Throws UsageError if the CPU (or the build)
// lacks the requested instruction set.
void set_backend(Backend backend);

bool backend_available(Backend backend);

// Dispatched primitives.
double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);

// Per-backend tables, exposed so equivalence tests can call each variant directly.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*gemm_nn)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
  void (*gemm_nt)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
  void (*gemm_tn)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
};

const KernelTable& kernels_for(Backend backend);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Table;
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace mbvd::simd
