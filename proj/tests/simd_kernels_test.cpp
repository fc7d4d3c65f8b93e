#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mbvd/core/errors.hpp"
#include "mbvd/simd/kernels.hpp"

namespace mbvd::simd {
namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

std::vector<Backend> vector_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::kAvx2, Backend::kNeon}) {
    if (backend_available(b)) out.push_back(b);
  }
  return out;
}

// FMA and lane-parallel accumulation reorder roundings; bound the difference
// by the magnitude of the summed terms.
void expect_close(double ref, double got, double magnitude) {
  EXPECT_LE(std::abs(ref - got), 1e-13 * (1.0 + magnitude)) << "ref=" << ref << " got=" << got;
}

TEST(SimdKernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(backend_available(Backend::kScalar));
  EXPECT_TRUE(backend_available(detect_backend()));
}

TEST(SimdKernels, UnavailableBackendRejected) {
  for (Backend b : {Backend::kAvx2, Backend::kNeon}) {
    if (!backend_available(b)) {
      EXPECT_THROW(set_backend(b), UsageError);
    }
  }
}

TEST(SimdKernels, DotAndAxpyMatchScalar) {
  std::mt19937_64 rng(11);
  const KernelTable& ref = kernels_for(Backend::kScalar);
  for (Backend b : vector_backends()) {
    const KernelTable& k = kernels_for(b);
    for (std::size_t n = 0; n <= 67; ++n) {
      auto x = random_vec(n, rng);
      auto y = random_vec(n, rng);
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * y[i]);
      expect_close(ref.dot(x.data(), y.data(), n), k.dot(x.data(), y.data(), n), mag);

      auto y_ref = y;
      auto y_vec = y;
      ref.axpy(0.37, x.data(), y_ref.data(), n);
      k.axpy(0.37, x.data(), y_vec.data(), n);
      for (std::size_t i = 0; i < n; ++i) expect_close(y_ref[i], y_vec[i], std::abs(y[i]) + std::abs(x[i]));
    }
  }
}

TEST(SimdKernels, GemmVariantsMatchScalar) {
  std::mt19937_64 rng(12);
  const KernelTable& ref = kernels_for(Backend::kScalar);
  const std::size_t dims[] = {1, 3, 4, 5, 8, 9, 13, 17, 33};
  for (Backend b : vector_backends()) {
    const KernelTable& k = kernels_for(b);
    for (std::size_t m : dims) {
      for (std::size_t n : dims) {
        for (std::size_t depth : {1, 7, 16, 29}) {
          auto a = random_vec(m * depth, rng);
          auto bm = random_vec(depth * n, rng);
          auto c0 = random_vec(m * n, rng);
          auto c_ref = c0;
          auto c_vec = c0;
          ref.gemm_nn(m, n, depth, a.data(), bm.data(), c_ref.data());
          k.gemm_nn(m, n, depth, a.data(), bm.data(), c_vec.data());
          for (std::size_t i = 0; i < m * n; ++i) expect_close(c_ref[i], c_vec[i], 10.0 * depth);

          auto bt = random_vec(n * depth, rng);
          c_ref = c0;
          c_vec = c0;
          ref.gemm_nt(m, n, depth, a.data(), bt.data(), c_ref.data());
          k.gemm_nt(m, n, depth, a.data(), bt.data(), c_vec.data());
          for (std::size_t i = 0; i < m * n; ++i) expect_close(c_ref[i], c_vec[i], 10.0 * depth);

          // a is m x depth here; output is depth x n
          auto bb = random_vec(m * n, rng);
          auto d0 = random_vec(depth * n, rng);
          auto d_ref = d0;
          auto d_vec = d0;
          ref.gemm_tn(m, n, depth, a.data(), bb.data(), d_ref.data());
          k.gemm_tn(m, n, depth, a.data(), bb.data(), d_vec.data());
          for (std::size_t i = 0; i < depth * n; ++i) expect_close(d_ref[i], d_vec[i], 10.0 * m);
        }
      }
    }
  }
}

TEST(SimdKernels, ScalarGemmMatchesNaiveDefinition) {
  std::mt19937_64 rng(13);
  const std::size_t m = 5, n = 6, k = 7;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * n, rng);
  std::vector<double> c(m * n, 0.0);
  kernels_for(Backend::kScalar).gemm_nn(m, n, k, a.data(), b.data(), c.data());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      EXPECT_NEAR(c[i * n + j], s, 1e-12);
    }
  }
}

TEST(SimdKernels, DispatchSwitchIsObservable) {
  const Backend original = active_backend();
  set_backend(Backend::kScalar);
  EXPECT_EQ(active_backend(), Backend::kScalar);
  const double x[3] = {1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(dot(x, x, 3), 14.0);
  set_backend(original);
  EXPECT_EQ(active_backend(), original);
}

}  // namespace
}  // namespace mbvd::simd
