#pragma once

#include <cstddef>
#include <vector>

// Dense vector kernels behind the iterative solvers. Scalar reference
// implementations always exist; on x86-64 an AVX2+FMA variant and on arm64 a
// NEON variant are compiled in and selected once at startup by CPU probe.
// The active backend is fixed for the lifetime of the process (overridable via
// set_backend or the DIRLAP_SIMD environment variable), so summation order --
// and therefore every downstream result for a fixed seed -- is deterministic.

namespace dirlap::kernels {

enum class Backend { scalar, avx2, neon };

Backend active_backend();
const char* backend_name(Backend b);
// returns false if the requested backend is not available on this CPU
bool set_backend(Backend b);

// scalar reference kernels (the semantics contract; SIMD variants must agree
// to rounding-level tolerance, tested in tests/test_kernels.cpp)
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double nrm2sq(const double* x, std::size_t n);
double asum(const double* x, std::size_t n);
double vsum(const double* x, std::size_t n);
double amax(const double* x, std::size_t n);
void axpby(double a, const double* x, double b, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
}  // namespace scalar

#if defined(DIRLAP_BUILD_AVX2)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double nrm2sq(const double* x, std::size_t n);
double asum(const double* x, std::size_t n);
double vsum(const double* x, std::size_t n);
double amax(const double* x, std::size_t n);
void axpby(double a, const double* x, double b, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
}  // namespace avx2
#endif

#if defined(DIRLAP_BUILD_NEON)
namespace neon {
double dot(const double* x, const double* y, std::size_t n);
double nrm2sq(const double* x, std::size_t n);
double asum(const double* x, std::size_t n);
double vsum(const double* x, std::size_t n);
double amax(const double* x, std::size_t n);
void axpby(double a, const double* x, double b, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
}  // namespace neon
#endif

// dispatched entry points
double dot(const double* x, const double* y, std::size_t n);
double nrm2sq(const double* x, std::size_t n);
double asum(const double* x, std::size_t n);
double vsum(const double* x, std::size_t n);
double amax(const double* x, std::size_t n);
void axpby(double a, const double* x, double b, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
// y = A x for row-major dense A (rows x cols)
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  return dot(x.data(), y.data(), x.size());
}
inline double nrm2sq(const std::vector<double>& x) { return nrm2sq(x.data(), x.size()); }
inline double asum(const std::vector<double>& x) { return asum(x.data(), x.size()); }
inline double vsum(const std::vector<double>& x) { return vsum(x.data(), x.size()); }
inline double amax(const std::vector<double>& x) { return amax(x.data(), x.size()); }
inline void axpby(double a, const std::vector<double>& x, double b, std::vector<double>& y) {
  axpby(a, x.data(), b, y.data(), x.size());
}
inline void scale(double a, std::vector<double>& x) { scale(a, x.data(), x.size()); }

}  // namespace dirlap::kernels
