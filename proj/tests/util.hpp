#pragma once

// shared generators and helpers for the test suites

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dirlap/graph.hpp"
#include "dirlap/rng.hpp"
#include "dirlap/sparse.hpp"

namespace testutil {

using dirlap::DirectedLaplacian;
using dirlap::Edge;
using dirlap::RandomWalkMatrix;
using dirlap::Rng;
using dirlap::SparseMatrix;
using dirlap::Triplet;

inline std::vector<double> random_vector(int n, Rng& rng) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next_normal();
  return v;
}

inline std::vector<double> random_vector_perp_ones(int n, Rng& rng) {
  std::vector<double> v = random_vector(n, rng);
  double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  for (double& x : v) x -= m;
  return v;
}

// a random cycle through all vertices plus `extra` random edges
inline DirectedLaplacian random_strongly_connected(int n, int extra, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.next_below(i + 1)]);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    edges.push_back({perm[i], perm[(i + 1) % n], 0.2 + 1.8 * rng.next_double()});
  for (int e = 0; e < extra; ++e) {
    int u = static_cast<int>(rng.next_below(n));
    int v = static_cast<int>(rng.next_below(n));
    if (u == v) continue;
    edges.push_back({u, v, 0.1 + rng.next_double()});
  }
  return dirlap::from_edge_list(edges, n);
}

// union of weighted simple cycles; Eulerian by construction, strongly
// connected because the first cycle tours every vertex
inline DirectedLaplacian random_eulerian(int n, int cycles, Rng& rng) {
  std::vector<Edge> edges;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.next_below(i + 1)]);
  double w0 = 0.5 + rng.next_double();
  for (int i = 0; i < n; ++i) edges.push_back({perm[i], perm[(i + 1) % n], w0});
  for (int c = 0; c < cycles; ++c) {
    int len = 2 + static_cast<int>(rng.next_below(std::max(n - 1, 1)));
    std::vector<int> verts(n);
    std::iota(verts.begin(), verts.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(verts[i], verts[rng.next_below(i + 1)]);
    verts.resize(len);
    double w = 0.2 + rng.next_double();
    for (int i = 0; i < len; ++i) edges.push_back({verts[i], verts[(i + 1) % len], w});
  }
  return dirlap::from_edge_list(edges, n);
}

// strictly RCDD Z-matrix: random negative off-diagonals, diagonal set to
// (1 + alpha) times the larger of the row/column absolute sums (plus jitter)
inline SparseMatrix random_rcdd_z(int n, double alpha, Rng& rng, double density = 0.4) {
  std::vector<Triplet> ts;
  std::vector<double> row(n, 0.0), col(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || rng.next_double() > density) continue;
      double w = 0.1 + rng.next_double();
      ts.push_back({i, j, -w});
      row[i] += w;
      col[j] += w;
    }
  for (int i = 0; i < n; ++i) {
    double base = std::max({row[i], col[i], 0.25});
    ts.push_back({i, i, (1.0 + alpha) * base * (1.0 + 0.2 * rng.next_double())});
  }
  return SparseMatrix::from_triplets(n, ts);
}

// RCDD with mixed off-diagonal signs
inline SparseMatrix random_rcdd_mixed(int n, double alpha, Rng& rng, double density = 0.4) {
  std::vector<Triplet> ts;
  std::vector<double> row(n, 0.0), col(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || rng.next_double() > density) continue;
      double w = (0.1 + rng.next_double()) * rng.next_sign();
      ts.push_back({i, j, w});
      row[i] += std::fabs(w);
      col[j] += std::fabs(w);
    }
  for (int i = 0; i < n; ++i) {
    double base = std::max({row[i], col[i], 0.25});
    ts.push_back({i, i, (1.0 + alpha) * base * (1.0 + 0.2 * rng.next_double())});
  }
  return SparseMatrix::from_triplets(n, ts);
}

inline Eigen::MatrixXd dense(const SparseMatrix& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.n(), m.n());
  for (const Triplet& t : m.triplets()) d(t.row, t.col) += t.value;
  return d;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  Eigen::VectorXd x(static_cast<long>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<long>(i)) = v[i];
  return x;
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& v) {
  std::vector<double> x(v.size());
  for (long i = 0; i < v.size(); ++i) x[i] = v(i);
  return x;
}

inline double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double l1(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

// simple undirected path a-b-c with unit weights, as a walk graph
inline DirectedLaplacian path3() {
  return dirlap::from_edge_list(
      {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}}, 3);
}

inline DirectedLaplacian cycle3() {
  return dirlap::from_edge_list({{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}, 3);
}

inline DirectedLaplacian cycle2() {
  return dirlap::from_edge_list({{0, 1, 1.0}, {1, 0, 1.0}}, 2);
}

}  // namespace testutil
