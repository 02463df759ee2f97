// AVX2+FMA variants. Compiled with -mavx2 -mfma in its own translation
// unit; callers reach these only through the runtime dispatch in
// simd_kernels.cpp, so the binary stays runnable on non-AVX2 hosts.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "simd_kernels.h"

namespace profit::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
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
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void max_sub(double* m, const double* x, double c, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), vc);
    _mm256_storeu_pd(m + i, _mm256_max_pd(_mm256_loadu_pd(m + i), v));
  }
  for (; i < n; ++i) {
    const double v = x[i] - c;
    if (v > m[i]) m[i] = v;
  }
}

void rank1_upper(double* c, const double* y, double w, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    const double wy = w * y[r];
    axpy(wy, y + r, c + r * n + r, n - r);
  }
}

std::size_t count_greater(const double* x, double thr, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(thr);
  std::size_t k = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d cmp = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vt, _CMP_GT_OQ);
    k += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(cmp)));
  }
  for (; i < n; ++i)
    if (x[i] > thr) ++k;
  return k;
}

}  // namespace profit::simd::avx2

#endif  // x86-64
