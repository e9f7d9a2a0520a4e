#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dirlap/sparse.hpp"

namespace dirlap {

// column sums of a directed Laplacian must vanish to this relative tolerance
inline constexpr double kLaplacianRelTol = 1e-12;
// row sums of an Eulerian Laplacian must vanish relative to the max degree
inline constexpr double kEulerianRelTol = 1e-12;
inline constexpr double kWalkColumnTol = 1e-12;

struct Edge {
  int from;
  int to;
  double weight;
};

struct GraphDiagnostics {
  bool is_z_matrix = false;
  bool is_laplacian = false;
  bool is_eulerian = false;
  bool strongly_connected = false;
  // largest alpha such that the matrix is alpha-RCDD; +inf when no row or
  // column constrains it, -inf when no alpha qualifies
  double alpha_rcdd = 0.0;
};

// Z-matrix L with zero column sums; L = D - A^T for out-degree diagonal D.
// Immutable after construction.
class DirectedLaplacian {
public:
  static DirectedLaplacian from_matrix(SparseMatrix L);

  const SparseMatrix& matrix() const { return mat_; }
  const std::vector<double>& diag() const { return diag_; }
  int n() const { return mat_.n(); }
  std::size_t nnz() const { return mat_.nnz(); }
  bool is_eulerian() const;

private:
  DirectedLaplacian(SparseMatrix m, std::vector<double> d)
      : mat_(std::move(m)), diag_(std::move(d)) {}
  SparseMatrix mat_;
  std::vector<double> diag_;
};

// column-stochastic nonnegative matrix; W = A^T D^{-1}
class RandomWalkMatrix {
public:
  static RandomWalkMatrix from_matrix(SparseMatrix W);

  const SparseMatrix& matrix() const { return mat_; }
  int n() const { return mat_.n(); }

private:
  explicit RandomWalkMatrix(SparseMatrix m) : mat_(std::move(m)) {}
  SparseMatrix mat_;
};

// parallel edges sum; self-loops are rejected (they contribute nothing to L)
DirectedLaplacian from_edge_list(const std::vector<Edge>& edges, int n);

GraphDiagnostics validate(const SparseMatrix& m);

RandomWalkMatrix random_walk_matrix(const DirectedLaplacian& L);

// L = I - W for the walk's graph
DirectedLaplacian laplacian_from_walk(const RandomWalkMatrix& W);

// (L + L^T)/2
SparseMatrix symmetrization(const SparseMatrix& L);

bool strongly_connected(const DirectedLaplacian& L);
bool strongly_connected(const SparseMatrix& m);

// Text edge-list format: "u v w" per line, 0-based indices, float weight;
// '#'-prefixed lines are comments, except "# n=<count>" which pins the vertex
// count (otherwise max index + 1).
std::vector<Edge> parse_edge_list(std::istream& in, int* n_out);
DirectedLaplacian load_edge_list(const std::string& path);

}  // namespace dirlap
