#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dirlap/kernels.hpp"
#include "dirlap/rng.hpp"

namespace k = dirlap::kernels;

namespace {

std::vector<double> randvec(int n, dirlap::Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.next_normal();
  return v;
}

// reduction results may differ from the reference by summation order only
void check_close(double a, double b, double scale) {
  CHECK(std::fabs(a - b) <= 1e-13 * (scale + std::fabs(a) + std::fabs(b)));
}

}  // namespace

TEST_CASE("scalar kernels match hand values") {
  std::vector<double> x{1.0, -2.0, 3.0};
  std::vector<double> y{4.0, 5.0, -6.0};
  CHECK(k::scalar::dot(x.data(), y.data(), 3) == doctest::Approx(-24.0));
  CHECK(k::scalar::nrm2sq(x.data(), 3) == doctest::Approx(14.0));
  CHECK(k::scalar::asum(x.data(), 3) == doctest::Approx(6.0));
  CHECK(k::scalar::vsum(x.data(), 3) == doctest::Approx(2.0));
  CHECK(k::scalar::amax(y.data(), 3) == doctest::Approx(6.0));
  k::scalar::axpby(2.0, x.data(), 1.0, y.data(), 3);
  CHECK(y[0] == doctest::Approx(6.0));
  CHECK(y[2] == doctest::Approx(0.0));
}

TEST_CASE("active backend agrees with scalar reference on random inputs") {
  INFO("active backend: ", k::backend_name(k::active_backend()));
  dirlap::Rng rng(7);
  // deliberately odd lengths to exercise the SIMD tails
  for (int n : {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 64, 101, 1024, 1333}) {
    std::vector<double> x = randvec(n, rng), y = randvec(n, rng);
    double sx = k::scalar::asum(x.data(), n) + k::scalar::asum(y.data(), n);
    check_close(k::dot(x.data(), y.data(), n), k::scalar::dot(x.data(), y.data(), n), sx);
    check_close(k::nrm2sq(x.data(), n), k::scalar::nrm2sq(x.data(), n), sx * sx);
    check_close(k::asum(x.data(), n), k::scalar::asum(x.data(), n), sx);
    check_close(k::vsum(x.data(), n), k::scalar::vsum(x.data(), n), sx);
    CHECK(k::amax(x.data(), n) == k::scalar::amax(x.data(), n));

    std::vector<double> ya = y, yb = y;
    k::axpby(0.7, x.data(), -1.3, ya.data(), n);
    k::scalar::axpby(0.7, x.data(), -1.3, yb.data(), n);
    for (int i = 0; i < n; ++i)
      CHECK(std::fabs(ya[i] - yb[i]) <= 1e-14 * (1.0 + std::fabs(yb[i])));

    ya = y;
    yb = y;
    k::axpby(2.5, x.data(), 1.0, ya.data(), n);
    k::scalar::axpby(2.5, x.data(), 1.0, yb.data(), n);
    for (int i = 0; i < n; ++i)
      CHECK(std::fabs(ya[i] - yb[i]) <= 1e-14 * (1.0 + std::fabs(yb[i])));

    std::vector<double> xa = x, xb = x;
    k::scale(-0.37, xa.data(), n);
    k::scalar::scale(-0.37, xb.data(), n);
    CHECK(xa == xb);
  }
}

TEST_CASE("matvec variants agree") {
  dirlap::Rng rng(11);
  for (int rows : {1, 3, 17}) {
    for (int cols : {1, 5, 33}) {
      std::vector<double> A = randvec(rows * cols, rng), x = randvec(cols, rng);
      std::vector<double> y1(rows), y2(rows);
      k::matvec(A.data(), x.data(), y1.data(), rows, cols);
      k::scalar::matvec(A.data(), x.data(), y2.data(), rows, cols);
      for (int i = 0; i < rows; ++i)
        check_close(y1[i], y2[i], k::scalar::asum(A.data(), A.size()));
    }
  }
}

TEST_CASE("backend can be forced to scalar and back") {
  k::Backend original = k::active_backend();
  REQUIRE(k::set_backend(k::Backend::scalar));
  CHECK(k::active_backend() == k::Backend::scalar);
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(k::dot(x.data(), x.data(), 5) == doctest::Approx(55.0));
  CHECK(k::set_backend(original));
}

TEST_CASE("rng determinism and rough normality") {
  dirlap::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  dirlap::Rng c(1), d(2);
  CHECK(c.next_u64() != d.next_u64());

  dirlap::Rng r(3);
  double mean = 0.0, var = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    double x = r.next_normal();
    mean += x;
    var += x * x;
  }
  mean /= trials;
  var = var / trials - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(std::fabs(var - 1.0) < 0.05);
}
