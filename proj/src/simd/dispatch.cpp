#include <cstdlib>
#include <cstring>

#include "mbvd/core/errors.hpp"
#include "mbvd/simd/kernels.hpp"

namespace mbvd::simd {
namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  const char* forced = std::getenv("MBVD_SIMD");
  if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return Backend::kScalar;
  return detect_backend();
}

struct Dispatch {
  Backend backend = initial_backend();
  const KernelTable* table = &kernels_for(backend);
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
    case Backend::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect_backend() {
  if (backend_available(Backend::kAvx2)) return Backend::kAvx2;
  if (backend_available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

const KernelTable& kernels_for(Backend backend) {
  if (!backend_available(backend)) {
    throw UsageError("simd backend '" + std::string(backend_name(backend)) +
                     "' is not available on this host");
  }
  switch (backend) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::kAvx2:
      return detail::kAvx2Table;
#endif
#if defined(__aarch64__)
    case Backend::kNeon:
      return detail::kNeonTable;
#endif
    default:
      return detail::kScalarTable;
  }
}

Backend active_backend() { return dispatch().backend; }

void set_backend(Backend backend) {
  const KernelTable& table = kernels_for(backend);
  dispatch().backend = backend;
  dispatch().table = &table;
}

double dot(const double* a, const double* b, std::size_t n) { return dispatch().table->dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  dispatch().table->gemm_nn(m, n, k, a, b, c);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  dispatch().table->gemm_nt(m, n, k, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  dispatch().table->gemm_tn(m, n, k, a, b, c);
}

}  // namespace mbvd::simd
