#include "dirlap/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dirlap/errors.hpp"
#include "dirlap/rng.hpp"

namespace dirlap::oracles {

namespace {

constexpr long kWalkStepCap = 1000000000L;

// per-column cumulative transition weights for walk sampling
struct ColumnSampler {
  std::vector<int> ptr;
  std::vector<int> row;
  std::vector<double> cum;

  explicit ColumnSampler(const RandomWalkMatrix& W) {
    SparseMatrix tr = W.matrix().transpose();
    int n = W.n();
    ptr.assign(n + 1, 0);
    row.reserve(tr.nnz());
    cum.reserve(tr.nnz());
    for (int c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int i = tr.row_ptr()[c]; i < tr.row_ptr()[c + 1]; ++i) {
        acc += tr.values()[i];
        row.push_back(tr.col_idx()[i]);
        cum.push_back(acc);
      }
      ptr[c + 1] = static_cast<int>(row.size());
    }
  }

  int step(int from, Rng& rng) const {
    int lo = ptr[from], hi = ptr[from + 1];
    if (lo == hi) throw Error(ErrorCode::IsolatedVertex, "walk reached a sink vertex");
    double total = cum[hi - 1];
    double x = rng.next_double() * total;
    auto it = std::lower_bound(cum.begin() + lo, cum.begin() + hi, x);
    if (it == cum.begin() + hi) --it;
    return row[it - cum.begin()];
  }
};

std::vector<double> high_precision_stationary(const RandomWalkMatrix& W) {
  return power_stationary(W, 1e-15);
}

double max_column_l1_distance(const Eigen::MatrixXd& M, const std::vector<double>& s) {
  double worst = 0.0;
  for (int j = 0; j < M.cols(); ++j) {
    double d = 0.0;
    for (int i = 0; i < M.rows(); ++i) d += std::fabs(M(i, j) - s[i]);
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

Eigen::MatrixXd to_dense(const SparseMatrix& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.n(), m.n());
  for (const Triplet& t : m.triplets()) d(t.row, t.col) += t.value;
  return d;
}

Eigen::MatrixXd dense_pinv(const Eigen::MatrixXd& M, int cap) {
  if (M.rows() > cap || M.cols() > cap)
    throw Error(ErrorCode::TooLarge, "dense_pinv: matrix exceeds cap " + std::to_string(cap));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  double cutoff = sv.size() > 0 ? 1e-12 * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

McEstimate mc_hitting(const RandomWalkMatrix& W, int u, int v, long trials, std::uint64_t seed) {
  McEstimate est;
  est.trials = trials;
  est.seed = seed;
  if (u == v) return est;
  ColumnSampler sampler(W);
  double sum = 0.0, sumsq = 0.0;
  Rng root(seed);
  for (long t = 0; t < trials; ++t) {
    Rng rng = root.child(1, static_cast<std::uint64_t>(t));
    long steps = 0;
    int cur = u;
    while (cur != v) {
      cur = sampler.step(cur, rng);
      if (++steps > kWalkStepCap)
        throw Error(ErrorCode::Nonterminating, "mc_hitting: walk exceeded step cap");
    }
    double x = static_cast<double>(steps);
    sum += x;
    sumsq += x * x;
  }
  est.mean = sum / static_cast<double>(trials);
  double var = std::max(0.0, sumsq / static_cast<double>(trials) - est.mean * est.mean);
  if (trials > 1) var *= static_cast<double>(trials) / static_cast<double>(trials - 1);
  est.stderr_ = std::sqrt(var / static_cast<double>(trials));
  return est;
}

McEstimate mc_escape(const RandomWalkMatrix& W, int u, int v, int start, long trials,
                     std::uint64_t seed) {
  McEstimate est;
  est.trials = trials;
  est.seed = seed;
  ColumnSampler sampler(W);
  double sum = 0.0;
  Rng root(seed);
  for (long t = 0; t < trials; ++t) {
    Rng rng = root.child(2, static_cast<std::uint64_t>(t));
    int cur = start;
    long steps = 0;
    while (cur != u && cur != v) {
      cur = sampler.step(cur, rng);
      if (++steps > kWalkStepCap)
        throw Error(ErrorCode::Nonterminating, "mc_escape: walk exceeded step cap");
    }
    if (cur == u) sum += 1.0;
  }
  est.mean = sum / static_cast<double>(trials);
  double p = est.mean;
  double var = p * (1.0 - p);
  if (trials > 1) var *= static_cast<double>(trials) / static_cast<double>(trials - 1);
  est.stderr_ = std::sqrt(var / static_cast<double>(trials));
  return est;
}

long brute_tmix(const RandomWalkMatrix& W, long cap) {
  int n = W.n();
  std::vector<double> s = high_precision_stationary(W);
  Eigen::MatrixXd Wl = 0.5 * (Eigen::MatrixXd::Identity(n, n) + to_dense(W.matrix()));
  Eigen::MatrixXd P = Wl;
  for (long k = 1; k <= cap; ++k) {
    if (max_column_l1_distance(P, s) <= 0.5 + 1e-12) return k;
    P = Wl * P;
  }
  throw Error(ErrorCode::NoConvergence, "brute_tmix: cap exceeded");
}

long brute_tpp(const RandomWalkMatrix& W, long cap) {
  int n = W.n();
  std::vector<double> s = high_precision_stationary(W);
  Eigen::MatrixXd Wd = to_dense(W.matrix());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (long k = 1; k <= cap; ++k) {
    double beta = 1.0 / static_cast<double>(k);
    Eigen::MatrixXd M = beta * (I - (1.0 - beta) * Wd).partialPivLu().solve(I);
    if (max_column_l1_distance(M, s) <= 0.5 + 1e-12) return k;
  }
  throw Error(ErrorCode::NoConvergence, "brute_tpp: cap exceeded");
}

std::vector<double> power_stationary(const RandomWalkMatrix& W, double tol) {
  int n = W.n();
  std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n);
  const SparseMatrix& M = W.matrix();
  for (long it = 0; it < 10000000L; ++it) {
    M.matvec(p.data(), next.data());
    double delta = 0.0, total = 0.0;
    for (int i = 0; i < n; ++i) {
      next[i] = 0.5 * (next[i] + p[i]);
      delta += std::fabs(next[i] - p[i]);
      total += next[i];
    }
    for (int i = 0; i < n; ++i) next[i] /= total;
    p.swap(next);
    if (delta <= tol) return p;
  }
  throw Error(ErrorCode::NoConvergence, "power_stationary: iteration cap exceeded");
}

double pinv_one_norm(const RandomWalkMatrix& W) {
  int n = W.n();
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n) - to_dense(W.matrix());
  Eigen::MatrixXd P = dense_pinv(L);
  double worst = 0.0;
  for (int j = 0; j < n; ++j) worst = std::max(worst, P.col(j).lpNorm<1>());
  return worst;
}

double pinv_two_norm(const RandomWalkMatrix& W) {
  int n = W.n();
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n) - to_dense(W.matrix());
  Eigen::MatrixXd P = dense_pinv(L);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
  return svd.singularValues()(0);
}

}  // namespace dirlap::oracles
