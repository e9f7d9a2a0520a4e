#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dirlap/graph.hpp"

// Ground-truth engines: dense pseudoinverse, Monte-Carlo walker, brute-force
// mixing times, power-iteration stationary. Compiled into the test surface
// (and the CLI's hidden --oracle debugging mode), never on the solve paths.
namespace dirlap::oracles {

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long trials = 0;
  std::uint64_t seed = 0;
};

// Moore-Penrose pseudoinverse by SVD, singular values below 1e-12 * sigma_max
// treated as zero
Eigen::MatrixXd dense_pinv(const Eigen::MatrixXd& M, int cap = 200);

Eigen::MatrixXd to_dense(const SparseMatrix& m);

McEstimate mc_hitting(const RandomWalkMatrix& W, int u, int v, long trials, std::uint64_t seed);

// probability that a walk from `start` reaches u before v
McEstimate mc_escape(const RandomWalkMatrix& W, int u, int v, int start, long trials,
                     std::uint64_t seed);

// smallest k with || W~^k p - s ||_1 <= 1/2 for all simplex p (lazy walk W~);
// the simplex maximum is attained at vertices so columns are checked
long brute_tmix(const RandomWalkMatrix& W, long cap = 1000000);

// smallest k >= 1 such that beta = 1/k gives || M_pp(beta) p - s ||_1 <= 1/2
long brute_tpp(const RandomWalkMatrix& W, long cap = 1000000);

std::vector<double> power_stationary(const RandomWalkMatrix& W, double tol);

// max column 1-norm and spectral norm of the dense pseudoinverse of I - W
double pinv_one_norm(const RandomWalkMatrix& W);
double pinv_two_norm(const RandomWalkMatrix& W);

}  // namespace dirlap::oracles
