#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dirlap/errors.hpp"
#include "dirlap/oracles.hpp"
#include "dirlap/sdd.hpp"
#include "util.hpp"

using namespace dirlap;
using namespace testutil;

namespace {

SparseMatrix triangle_laplacian() {
  return symmetrization(SparseMatrix::add(cycle3().matrix(), 2.0,
                                          SparseMatrix::from_triplets(3, {}), 0.0));
}

std::vector<double> residual(const SparseMatrix& U, const std::vector<double>& x,
                             const std::vector<double>& b) {
  std::vector<double> r = U.matvec(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

}  // namespace

TEST_CASE("dense backend: residual and kernel on the triangle") {
  SparseMatrix U = triangle_laplacian();
  for (SddBackend be : {SddBackend::dense_factorization, SddBackend::pcg}) {
    PinvOperator op = build_sdd_operator(U, 1e-10, be);
    std::vector<double> x{1.0, -1.0, 0.0};
    std::vector<double> y = op.apply(x);
    CHECK(l2(residual(U, y, x)) <= 1e-8 * l2(x));

    std::vector<double> ones{1.0, 1.0, 1.0};
    CHECK(l2(op.apply(ones)) <= 1e-12);
  }
}

TEST_CASE("path graph: apply reproduces the known solution") {
  SparseMatrix U = symmetrization(path3().matrix());
  // unit path has U = [[1,-1,0],[-1,2,-1],[0,-1,1]]; U (1,0,-1) = (1,0,-1)
  PinvOperator op = build_sdd_operator(U);
  std::vector<double> x{1.0, 0.0, -1.0};
  std::vector<double> y = op.apply(x);
  double shift = y[1] - 0.0;
  CHECK(y[0] - shift == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(y[2] - shift == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("solve_sdd basics") {
  SparseMatrix U = SparseMatrix::from_triplets(2, {{0, 0, 2.0}, {1, 1, 2.0}});
  auto [x, rep] = solve_sdd(U, {2.0, 4.0});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
  CHECK(rep.converged);

  auto [z, rep0] = solve_sdd(triangle_laplacian(), {0.0, 0.0, 0.0});
  CHECK(l2(z) == 0.0);
}

TEST_CASE("solve_sdd matches the dense pseudoinverse on a random Laplacian") {
  Rng rng(21);
  DirectedLaplacian Ld = random_eulerian(20, 8, rng);
  SparseMatrix U = symmetrization(Ld.matrix());
  Eigen::MatrixXd P = oracles::dense_pinv(dense(U));
  for (SddBackend be : {SddBackend::dense_factorization, SddBackend::pcg}) {
    std::vector<double> b = random_vector_perp_ones(20, rng);
    auto [x, rep] = solve_sdd(U, b, 1e-10, be);
    Eigen::VectorXd xs = P * to_eigen(b);
    CHECK((to_eigen(x) - xs).norm() <= 1e-7 * xs.norm());
  }
}

TEST_CASE("validation errors") {
  SparseMatrix asym = SparseMatrix::from_triplets(2, {{0, 1, 1.0}, {0, 0, 2.0}, {1, 1, 2.0}});
  CHECK_THROWS_AS(build_sdd_operator(asym), Error);

  SparseMatrix notsdd = SparseMatrix::from_triplets(
      2, {{0, 0, 1.0}, {0, 1, -2.0}, {1, 0, -2.0}, {1, 1, 1.0}});
  try {
    build_sdd_operator(notsdd);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSDD);
  }
}

TEST_CASE("pcg backend: spectral sandwich at tol = 0.5") {
  // the implicit U~ must satisfy U/2 <= U~ <= U, i.e. quadratic forms of the
  // applied pseudoinverse lie within [1, 2] times the exact ones
  Rng rng(22);
  for (int rep = 0; rep < 5; ++rep) {
    DirectedLaplacian Ld = random_eulerian(10, 4, rng);
    SparseMatrix U = symmetrization(Ld.matrix());
    Eigen::MatrixXd P = oracles::dense_pinv(dense(U));
    PinvOperator op = build_sdd_operator(U, 0.5, SddBackend::pcg);
    for (int probe = 0; probe < 20; ++probe) {
      std::vector<double> b = random_vector_perp_ones(10, rng);
      double approx = 0.0;
      std::vector<double> y = op.apply(b);
      for (int i = 0; i < 10; ++i) approx += b[i] * y[i];
      double exact = to_eigen(b).dot(P * to_eigen(b));
      CHECK(approx >= exact * (1.0 - 1e-6));
      CHECK(approx <= 2.0 * exact * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("operator is deterministic and linear within tolerance") {
  Rng rng(23);
  DirectedLaplacian Ld = random_eulerian(12, 5, rng);
  SparseMatrix U = symmetrization(Ld.matrix());
  for (SddBackend be : {SddBackend::dense_factorization, SddBackend::pcg}) {
    PinvOperator op = build_sdd_operator(U, 1e-10, be);
    std::vector<double> a = random_vector_perp_ones(12, rng);
    std::vector<double> b = random_vector_perp_ones(12, rng);
    CHECK(op.apply(a) == op.apply(a));  // bitwise repeatability

    std::vector<double> ab(12);
    for (int i = 0; i < 12; ++i) ab[i] = 2.0 * a[i] - 3.0 * b[i];
    std::vector<double> lhs = op.apply(ab);
    std::vector<double> ya = op.apply(a), yb = op.apply(b);
    double err = 0.0;
    for (int i = 0; i < 12; ++i) {
      double d = lhs[i] - (2.0 * ya[i] - 3.0 * yb[i]);
      err += d * d;
    }
    CHECK(std::sqrt(err) <= 1e-6 * (l2(a) + l2(b)));
  }
}

TEST_CASE("multi-component Laplacian: per-component kernels") {
  // two disjoint edges
  SparseMatrix U = SparseMatrix::from_triplets(4, {{0, 0, 1.0},
                                                   {0, 1, -1.0},
                                                   {1, 0, -1.0},
                                                   {1, 1, 1.0},
                                                   {2, 2, 2.0},
                                                   {2, 3, -2.0},
                                                   {3, 2, -2.0},
                                                   {3, 3, 2.0}});
  PinvOperator op = build_sdd_operator(U);
  std::vector<double> b{1.0, -1.0, 2.0, -2.0};
  std::vector<double> y = op.apply(b);
  CHECK(y[0] + y[1] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(y[2] + y[3] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(l2(residual(U, y, b)) <= 1e-8);

  // constants on each component are in the kernel
  std::vector<double> c{5.0, 5.0, -1.0, -1.0};
  CHECK(l2(op.apply(c)) <= 1e-10);
}
