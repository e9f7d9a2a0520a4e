#pragma once

#include <cstddef>
#include <vector>

namespace dirlap {

struct Triplet {
  int row;
  int col;
  double value;
  bool operator==(const Triplet&) const = default;
};

// Compressed sparse row matrix over doubles. Canonical form: rows in order,
// columns sorted within each row, duplicate coordinates summed, exact zeros
// dropped. Immutable after construction. Row-major and column-major traversal
// needs are served by an explicit transpose(), never lazily.
class SparseMatrix {
public:
  SparseMatrix() = default;

  // sums duplicates, drops entries that are exactly zero, checks index range
  static SparseMatrix from_triplets(int n, const std::vector<Triplet>& ts);
  static SparseMatrix identity(int n);

  int n() const { return n_; }
  std::size_t nnz() const { return val_.size(); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  double at(int r, int c) const;

  SparseMatrix transpose() const;

  // y = A x
  void matvec(const double* x, double* y) const;
  std::vector<double> matvec(const std::vector<double>& x) const;

  std::vector<double> diagonal() const;
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  std::vector<double> offdiag_abs_row_sums() const;
  std::vector<double> offdiag_abs_col_sums() const;
  std::vector<double> col_abs_sums() const;

  bool is_symmetric(double rtol = 1e-12) const;

  std::vector<Triplet> triplets() const;
  // row-major n*n dense copy (small n only)
  std::vector<double> to_dense() const;

  // A * diag(s) and diag(s) * A
  SparseMatrix scaled_cols(const std::vector<double>& s) const;
  SparseMatrix scaled_rows(const std::vector<double>& s) const;
  // A + diag(d)
  SparseMatrix plus_diag(const std::vector<double>& d) const;
  // alpha*A + beta*B
  static SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta);

private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
};

}  // namespace dirlap
