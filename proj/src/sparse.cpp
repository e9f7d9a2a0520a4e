#include "dirlap/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dirlap/errors.hpp"

namespace dirlap {

SparseMatrix SparseMatrix::from_triplets(int n, const std::vector<Triplet>& ts) {
  if (n < 0) throw Error(ErrorCode::BadParameter, "matrix dimension must be nonnegative");
  std::vector<Triplet> sorted = ts;
  for (const Triplet& t : sorted) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw Error(ErrorCode::IndexError, "triplet index out of range: (" + std::to_string(t.row) +
                                             "," + std::to_string(t.col) + ") with n=" +
                                             std::to_string(n));
  }
  std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  std::size_t i = 0;
  for (int r = 0; r < n; ++r) {
    while (i < sorted.size() && sorted[i].row == r) {
      int c = sorted[i].col;
      double v = 0.0;
      while (i < sorted.size() && sorted[i].row == r && sorted[i].col == c) v += sorted[i++].value;
      if (v != 0.0) {
        m.col_.push_back(c);
        m.val_.push_back(v);
      }
    }
    m.row_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.col_.size());
  }
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> ts;
  ts.reserve(n);
  for (int i = 0; i < n; ++i) ts.push_back({i, i, 1.0});
  return from_triplets(n, ts);
}

double SparseMatrix::at(int r, int c) const {
  if (r < 0 || r >= n_ || c < 0 || c >= n_)
    throw Error(ErrorCode::IndexError, "at(): index out of range");
  int lo = row_ptr_[r], hi = row_ptr_[r + 1];
  auto it = std::lower_bound(col_.begin() + lo, col_.begin() + hi, c);
  if (it != col_.begin() + hi && *it == c) return val_[it - col_.begin()];
  return 0.0;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t;
  t.n_ = n_;
  t.row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
  t.col_.resize(nnz());
  t.val_.resize(nnz());
  for (int c : col_) t.row_ptr_[c + 1]++;
  for (int r = 0; r < n_; ++r) t.row_ptr_[r + 1] += t.row_ptr_[r];
  std::vector<int> cursor(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (int r = 0; r < n_; ++r) {
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) {
      int pos = cursor[col_[i]]++;
      t.col_[pos] = r;
      t.val_[pos] = val_[i];
    }
  }
  return t;
}

void SparseMatrix::matvec(const double* x, double* y) const {
  for (int r = 0; r < n_; ++r) {
    double acc = 0.0;
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) acc += val_[i] * x[col_[i]];
    y[r] = acc;
  }
}

std::vector<double> SparseMatrix::matvec(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_) throw Error(ErrorCode::DimError, "matvec: size mismatch");
  std::vector<double> y(n_);
  matvec(x.data(), y.data());
  return y;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i)
      if (col_[i] == r) d[r] = val_[i];
  return d;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) s[r] += val_[i];
  return s;
}

std::vector<double> SparseMatrix::col_sums() const {
  std::vector<double> s(n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) s[col_[i]] += val_[i];
  return s;
}

std::vector<double> SparseMatrix::offdiag_abs_row_sums() const {
  std::vector<double> s(n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i)
      if (col_[i] != r) s[r] += std::fabs(val_[i]);
  return s;
}

std::vector<double> SparseMatrix::offdiag_abs_col_sums() const {
  std::vector<double> s(n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i)
      if (col_[i] != r) s[col_[i]] += std::fabs(val_[i]);
  return s;
}

std::vector<double> SparseMatrix::col_abs_sums() const {
  std::vector<double> s(n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) s[col_[i]] += std::fabs(val_[i]);
  return s;
}

bool SparseMatrix::is_symmetric(double rtol) const {
  SparseMatrix t = transpose();
  if (t.nnz() != nnz()) return false;
  double scale = 0.0;
  for (double v : val_) scale = std::max(scale, std::fabs(v));
  for (int r = 0; r < n_; ++r) {
    int a = row_ptr_[r], b = t.row_ptr_[r];
    if (row_ptr_[r + 1] - a != t.row_ptr_[r + 1] - b) return false;
    for (; a < row_ptr_[r + 1]; ++a, ++b) {
      if (col_[a] != t.col_[b]) return false;
      if (std::fabs(val_[a] - t.val_[b]) > rtol * scale) return false;
    }
  }
  return true;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> ts;
  ts.reserve(nnz());
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) ts.push_back({r, col_[i], val_[i]});
  return ts;
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> d(static_cast<std::size_t>(n_) * n_, 0.0);
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i)
      d[static_cast<std::size_t>(r) * n_ + col_[i]] = val_[i];
  return d;
}

SparseMatrix SparseMatrix::scaled_cols(const std::vector<double>& s) const {
  if (static_cast<int>(s.size()) != n_) throw Error(ErrorCode::DimError, "scaled_cols: size");
  SparseMatrix m = *this;
  for (std::size_t i = 0; i < m.val_.size(); ++i) m.val_[i] *= s[m.col_[i]];
  return m;
}

SparseMatrix SparseMatrix::scaled_rows(const std::vector<double>& s) const {
  if (static_cast<int>(s.size()) != n_) throw Error(ErrorCode::DimError, "scaled_rows: size");
  SparseMatrix m = *this;
  for (int r = 0; r < n_; ++r)
    for (int i = row_ptr_[r]; i < row_ptr_[r + 1]; ++i) m.val_[i] *= s[r];
  return m;
}

SparseMatrix SparseMatrix::plus_diag(const std::vector<double>& d) const {
  if (static_cast<int>(d.size()) != n_) throw Error(ErrorCode::DimError, "plus_diag: size");
  std::vector<Triplet> ts = triplets();
  for (int i = 0; i < n_; ++i)
    if (d[i] != 0.0) ts.push_back({i, i, d[i]});
  return from_triplets(n_, ts);
}

SparseMatrix SparseMatrix::add(const SparseMatrix& a, double alpha, const SparseMatrix& b,
                               double beta) {
  if (a.n_ != b.n_) throw Error(ErrorCode::DimError, "add: dimension mismatch");
  std::vector<Triplet> ts;
  ts.reserve(a.nnz() + b.nnz());
  for (const Triplet& t : a.triplets()) ts.push_back({t.row, t.col, alpha * t.value});
  for (const Triplet& t : b.triplets()) ts.push_back({t.row, t.col, beta * t.value});
  return from_triplets(a.n_, ts);
}

}  // namespace dirlap
