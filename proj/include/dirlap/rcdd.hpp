#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dirlap/eulerian.hpp"
#include "dirlap/graph.hpp"
#include "dirlap/report.hpp"
#include "dirlap/sparse.hpp"

namespace dirlap {

struct RcddSystem {
  SparseMatrix A;
  double alpha = 0.0;           // certified: A is alpha-RCDD
  std::vector<double> D;        // diagonal of A
};

// validates and certifies the largest alpha (throws NotStrictlyRCDD if < 0)
RcddSystem make_rcdd_system(const SparseMatrix& A);

// (n+1) x n embedding L = C A C^T with C = (I; -1^T); Eulerian for strictly
// RCDD Z-matrices
SparseMatrix rcdd_embedding(const SparseMatrix& A);

// Reusable solver for a fixed strictly RCDD Z-matrix: builds the Eulerian
// embedding once, then serves solves. Guarantee per solve:
// ||x' - A^{-1} b||_{(A+A^T)/2} <= eps ||b||_{((A+A^T)/2)^{-1}}.
class RcddZSolver {
public:
  explicit RcddZSolver(const SparseMatrix& A, const EulerianConfig& cfg = {});
  std::pair<std::vector<double>, SolveReport> solve(const std::vector<double>& b,
                                                    double eps) const;
  double certified_alpha() const { return alpha_; }
  int n() const { return n_; }

private:
  int n_;
  double alpha_;
  std::shared_ptr<const EulerianSolver> inner_;
};

std::pair<std::vector<double>, SolveReport> solve_rcdd_z(const SparseMatrix& A,
                                                         const std::vector<double>& b, double eps,
                                                         const EulerianConfig& cfg = {});

// delivers ||x'-x||_D <= (eps/alpha) ||b||_{D^{-1}} with D_ii = A_ii/(1+alpha)
std::pair<std::vector<double>, SolveReport> solve_alpha_rcdd(const SparseMatrix& A,
                                                             const std::vector<double>& b,
                                                             double alpha, double eps,
                                                             const EulerianConfig& cfg = {});

// arbitrary invertible RCDD matrix (positive off-diagonals allowed) via the
// double cover; relative l2 guarantee ||x' - A^{-1}b||_2 <= eps ||A^{-1}b||_2
std::pair<std::vector<double>, SolveReport> solve_rcdd_general(const SparseMatrix& A,
                                                               const std::vector<double>& b,
                                                               double eps,
                                                               const EulerianConfig& cfg = {});

// pseudoinverse application for strongly connected directed Laplacians:
// ||x' - L^dag b||_2 <= eps ||L^dag b||_2. M_bound, when given, upper-bounds
// ||(I-W)^dag||_2; otherwise it is estimated internally.
std::pair<std::vector<double>, SolveReport> solve_lap_pinv(const DirectedLaplacian& L,
                                                           const std::vector<double>& b,
                                                           double eps,
                                                           std::optional<double> M_bound = {},
                                                           const EulerianConfig& cfg = {});

// arbitrary RDD or CDD system with b in the image; residual guarantee
// ||M x' - b||_2 <= eps ||b||_2 via K-doubling
std::pair<std::vector<double>, SolveReport> solve_dd(const SparseMatrix& M,
                                                     const std::vector<double>& b, double eps,
                                                     const EulerianConfig& cfg = {});

// Applies the pseudoinverse of I - W (or of its transpose) by iterative
// refinement with a boosted stationary-rescaled operator. b must lie in the
// image of the chosen operator; s_w is an accurate stationary of W (kernel
// data). Backbone of solve_lap_pinv and the escape-probability solve.
std::vector<double> walk_pinv_apply(const RandomWalkMatrix& W, const std::vector<double>& b,
                                    double eps, bool transpose,
                                    const std::vector<double>& s_w, const EulerianConfig& cfg,
                                    SolveReport* rep = nullptr);

}  // namespace dirlap
