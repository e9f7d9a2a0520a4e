#include "dirlap/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace dirlap::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double nrm2sq(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double asum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i]);
  return acc;
}

double vsum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double amax(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  if (b == 1.0) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
  }
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(A + r * cols, x, cols);
}

}  // namespace scalar

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*nrm2sq)(const double*, std::size_t);
  double (*asum)(const double*, std::size_t);
  double (*vsum)(const double*, std::size_t);
  double (*amax)(const double*, std::size_t);
  void (*axpby)(double, const double*, double, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*matvec)(const double*, const double*, double*, std::size_t, std::size_t);
};

constexpr Vtable kScalar{scalar::dot, scalar::nrm2sq, scalar::asum,  scalar::vsum,
                         scalar::amax, scalar::axpby, scalar::scale, scalar::matvec};

#if defined(DIRLAP_BUILD_AVX2)
constexpr Vtable kAvx2{avx2::dot, avx2::nrm2sq, avx2::asum,  avx2::vsum,
                       avx2::amax, avx2::axpby, avx2::scale, avx2::matvec};
#endif
#if defined(DIRLAP_BUILD_NEON)
constexpr Vtable kNeon{neon::dot, neon::nrm2sq, neon::asum,  neon::vsum,
                       neon::amax, neon::axpby, neon::scale, neon::matvec};
#endif

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(DIRLAP_BUILD_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(DIRLAP_BUILD_NEON)
      return true;  // NEON is baseline on arm64
#else
      return false;
#endif
  }
  return false;
}

Backend pick_backend() {
  if (const char* env = std::getenv("DIRLAP_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && backend_available(Backend::avx2)) return Backend::avx2;
    if (std::strcmp(env, "neon") == 0 && backend_available(Backend::neon)) return Backend::neon;
    return Backend::scalar;
  }
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const Vtable* vtable_for(Backend b) {
  switch (b) {
#if defined(DIRLAP_BUILD_AVX2)
    case Backend::avx2:
      return &kAvx2;
#endif
#if defined(DIRLAP_BUILD_NEON)
    case Backend::neon:
      return &kNeon;
#endif
    default:
      return &kScalar;
  }
}

Backend g_backend = pick_backend();
const Vtable* g_vt = vtable_for(g_backend);

}  // namespace

Backend active_backend() { return g_backend; }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool set_backend(Backend b) {
  if (!backend_available(b)) return false;
  g_backend = b;
  g_vt = vtable_for(b);
  return true;
}

double dot(const double* x, const double* y, std::size_t n) { return g_vt->dot(x, y, n); }
double nrm2sq(const double* x, std::size_t n) { return g_vt->nrm2sq(x, n); }
double asum(const double* x, std::size_t n) { return g_vt->asum(x, n); }
double vsum(const double* x, std::size_t n) { return g_vt->vsum(x, n); }
double amax(const double* x, std::size_t n) { return g_vt->amax(x, n); }
void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  g_vt->axpby(a, x, b, y, n);
}
void scale(double a, double* x, std::size_t n) { g_vt->scale(a, x, n); }
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols) {
  g_vt->matvec(A, x, y, rows, cols);
}

}  // namespace dirlap::kernels
