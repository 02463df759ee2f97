#pragma once
#include <cstddef>

// Data-parallel kernels behind the estimation pipeline's inner loops:
// grid projections, raw-covariance accumulation and the simulated null
// distribution. Every kernel has a scalar reference implementation and,
// on x86-64 with AVX2+FMA, a vectorized variant selected once at runtime.
// The dispatched and scalar paths are equivalence-tested against each
// other; PROFIT_NO_SIMD=1 forces the scalar path.

namespace profit::simd {

// Scalar reference implementations. These define the semantics; the
// vectorized variants may reassociate sums (results agree to rounding).
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
// m[i] = max(m[i], x[i] - c)
void max_sub(double* m, const double* x, double c, std::size_t n);
// C (row-major, dim n) += w * y * y^T, upper triangle only
void rank1_upper(double* c, const double* y, double w, std::size_t n);
std::size_t count_greater(const double* x, double thr, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void max_sub(double* m, const double* x, double c, std::size_t n);
void rank1_upper(double* c, const double* y, double w, std::size_t n);
std::size_t count_greater(const double* x, double thr, std::size_t n);
}  // namespace avx2
#endif

// Runtime-dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void max_sub(double* m, const double* x, double c, std::size_t n);
void rank1_upper(double* c, const double* y, double w, std::size_t n);
std::size_t count_greater(const double* x, double thr, std::size_t n);

// Name of the active instruction set ("scalar" or "avx2").
const char* active_isa();

}  // namespace profit::simd
