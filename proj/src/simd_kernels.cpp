#include "simd_kernels.h"

#include <cstdlib>

namespace profit::simd {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void max_sub(double* m, const double* x, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i] - c;
    if (v > m[i]) m[i] = v;
  }
}

void rank1_upper(double* c, const double* y, double w, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    const double wy = w * y[r];
    double* row = c + r * n;
    for (std::size_t s = r; s < n; ++s) row[s] += wy * y[s];
  }
}

std::size_t count_greater(const double* x, double thr, std::size_t n) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > thr) ++k;
  return k;
}

}  // namespace scalar

namespace {

bool use_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  if (const char* env = std::getenv("PROFIT_NO_SIMD"); env && env[0] == '1') return false;
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const bool kAvx2 = use_avx2();

}  // namespace

const char* active_isa() { return kAvx2 ? "avx2" : "scalar"; }

#if defined(__x86_64__) || defined(_M_X64)
#define PROFIT_DISPATCH(fn, ...) \
  do { if (kAvx2) return avx2::fn(__VA_ARGS__); return scalar::fn(__VA_ARGS__); } while (0)
#else
#define PROFIT_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) { PROFIT_DISPATCH(dot, a, b, n); }
double sum(const double* x, std::size_t n) { PROFIT_DISPATCH(sum, x, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { PROFIT_DISPATCH(axpy, alpha, x, y, n); }
void max_sub(double* m, const double* x, double c, std::size_t n) { PROFIT_DISPATCH(max_sub, m, x, c, n); }
void rank1_upper(double* c, const double* y, double w, std::size_t n) { PROFIT_DISPATCH(rank1_upper, c, y, w, n); }
std::size_t count_greater(const double* x, double thr, std::size_t n) { PROFIT_DISPATCH(count_greater, x, thr, n); }

#undef PROFIT_DISPATCH

}  // namespace profit::simd
