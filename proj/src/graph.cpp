#include "dirlap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>

#include "dirlap/errors.hpp"

namespace dirlap {

namespace {

double max_abs_value(const SparseMatrix& m) {
  double s = 0.0;
  for (double v : m.values()) s = std::max(s, std::fabs(v));
  return s;
}

bool is_z_matrix(const SparseMatrix& m, double atol) {
  for (const Triplet& t : m.triplets())
    if (t.row != t.col && t.value > atol) return false;
  return true;
}

bool has_zero_col_sums(const SparseMatrix& m) {
  std::vector<double> cs = m.col_sums();
  std::vector<double> cas = m.col_abs_sums();
  for (int j = 0; j < m.n(); ++j)
    if (std::fabs(cs[j]) > kLaplacianRelTol * cas[j]) return false;
  return true;
}

double compute_alpha_rcdd(const SparseMatrix& m) {
  std::vector<double> d = m.diagonal();
  std::vector<double> orow = m.offdiag_abs_row_sums();
  std::vector<double> ocol = m.offdiag_abs_col_sums();
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.n(); ++i) {
    for (double s : {orow[i], ocol[i]}) {
      if (s > 0.0)
        alpha = std::min(alpha, d[i] / s - 1.0);
      else if (d[i] < 0.0)
        alpha = -std::numeric_limits<double>::infinity();
    }
  }
  return alpha;
}

}  // namespace

DirectedLaplacian DirectedLaplacian::from_matrix(SparseMatrix L) {
  double scale = max_abs_value(L);
  if (!is_z_matrix(L, kLaplacianRelTol * scale))
    throw Error(ErrorCode::BadParameter, "directed Laplacian must be a Z-matrix");
  if (!has_zero_col_sums(L))
    throw Error(ErrorCode::BadParameter, "directed Laplacian must have zero column sums");
  std::vector<double> d = L.diagonal();
  for (double v : d)
    if (v < 0.0) throw Error(ErrorCode::BadParameter, "directed Laplacian diagonal is negative");
  return DirectedLaplacian(std::move(L), std::move(d));
}

bool DirectedLaplacian::is_eulerian() const {
  double dmax = 0.0;
  for (double v : diag_) dmax = std::max(dmax, v);
  std::vector<double> rs = mat_.row_sums();
  for (double v : rs)
    if (std::fabs(v) > kEulerianRelTol * dmax) return false;
  return true;
}

RandomWalkMatrix RandomWalkMatrix::from_matrix(SparseMatrix W) {
  double scale = max_abs_value(W);
  for (double v : W.values())
    if (v < -kWalkColumnTol * scale)
      throw Error(ErrorCode::BadParameter, "random walk matrix entries must be nonnegative");
  std::vector<double> cs = W.col_sums();
  for (double s : cs)
    if (std::fabs(s - 1.0) > kWalkColumnTol)
      throw Error(ErrorCode::BadParameter, "random walk matrix columns must sum to 1");
  return RandomWalkMatrix(std::move(W));
}

DirectedLaplacian from_edge_list(const std::vector<Edge>& edges, int n) {
  std::vector<Triplet> ts;
  ts.reserve(2 * edges.size());
  for (const Edge& e : edges) {
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw Error(ErrorCode::InvalidWeight, "edge weight must be a positive finite number");
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      throw Error(ErrorCode::IndexError, "edge endpoint out of range");
    if (e.from == e.to)
      throw Error(ErrorCode::BadParameter, "self-loops contribute nothing to a Laplacian");
    ts.push_back({e.to, e.from, -e.weight});
    ts.push_back({e.from, e.from, e.weight});
  }
  return DirectedLaplacian::from_matrix(SparseMatrix::from_triplets(n, ts));
}

GraphDiagnostics validate(const SparseMatrix& m) {
  GraphDiagnostics d;
  double scale = max_abs_value(m);
  d.is_z_matrix = is_z_matrix(m, kLaplacianRelTol * scale);
  d.is_laplacian = d.is_z_matrix && has_zero_col_sums(m);
  if (d.is_laplacian) {
    double dmax = 0.0;
    for (double v : m.diagonal()) dmax = std::max(dmax, v);
    double rmax = 0.0;
    for (double v : m.row_sums()) rmax = std::max(rmax, std::fabs(v));
    d.is_eulerian = rmax <= kEulerianRelTol * dmax;
  }
  d.strongly_connected = strongly_connected(m);
  d.alpha_rcdd = compute_alpha_rcdd(m);
  return d;
}

RandomWalkMatrix random_walk_matrix(const DirectedLaplacian& L) {
  const std::vector<double>& d = L.diag();
  for (int i = 0; i < L.n(); ++i)
    if (d[i] <= 0.0)
      throw Error(ErrorCode::IsolatedVertex,
                  "vertex " + std::to_string(i) + " has no outgoing edges");
  std::vector<Triplet> ts;
  for (const Triplet& t : L.matrix().triplets())
    if (t.row != t.col) ts.push_back({t.row, t.col, -t.value / d[t.col]});
  return RandomWalkMatrix::from_matrix(SparseMatrix::from_triplets(L.n(), ts));
}

DirectedLaplacian laplacian_from_walk(const RandomWalkMatrix& W) {
  std::vector<Triplet> ts;
  for (const Triplet& t : W.matrix().triplets()) ts.push_back({t.row, t.col, -t.value});
  for (int i = 0; i < W.n(); ++i) ts.push_back({i, i, 1.0});
  return DirectedLaplacian::from_matrix(SparseMatrix::from_triplets(W.n(), ts));
}

SparseMatrix symmetrization(const SparseMatrix& L) {
  return SparseMatrix::add(L, 0.5, L.transpose(), 0.5);
}

// Tarjan with an explicit stack; out-neighbors of v are the nonzero rows of
// column v (both the Laplacian and the walk-matrix conventions store edges
// column-wise).
bool strongly_connected(const SparseMatrix& m) {
  int n = m.n();
  if (n <= 1) return true;
  SparseMatrix tr = m.transpose();
  const std::vector<int>& ptr = tr.row_ptr();
  const std::vector<int>& adj = tr.col_idx();

  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0), stack, call_v, call_edge;
  int next_index = 0, scc_count = 0;

  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call_v.push_back(root);
    call_edge.push_back(ptr[root]);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call_v.empty()) {
      int v = call_v.back();
      int& e = call_edge.back();
      bool advanced = false;
      while (e < ptr[v + 1]) {
        int w = adj[e];
        ++e;
        if (w == v) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call_v.push_back(w);
          call_edge.push_back(ptr[w]);
          advanced = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (advanced) continue;
      if (low[v] == index[v]) {
        ++scc_count;
        if (scc_count > 1) return false;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
        } while (w != v);
      }
      call_v.pop_back();
      call_edge.pop_back();
      if (!call_v.empty()) low[call_v.back()] = std::min(low[call_v.back()], low[v]);
    }
  }
  return scc_count == 1 && next_index == n;
}

bool strongly_connected(const DirectedLaplacian& L) { return strongly_connected(L.matrix()); }

std::vector<Edge> parse_edge_list(std::istream& in, int* n_out) {
  std::vector<Edge> edges;
  int declared_n = -1;
  int max_index = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '#') {
      std::size_t eq = line.find('=');
      std::size_t nkey = line.find('n');
      if (eq != std::string::npos && nkey != std::string::npos && nkey < eq) {
        std::string key = line.substr(start + 1, eq - start - 1);
        key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return std::isspace(c); }),
                  key.end());
        if (key == "n") {
          try {
            declared_n = std::stoi(line.substr(eq + 1));
          } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(lineno) + ": bad n= header");
          }
        }
      }
      continue;
    }
    std::istringstream ss(line);
    long long u, v;
    double w;
    if (!(ss >> u >> v >> w))
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(lineno) + ": expected 'u v w'");
    std::string rest;
    if (ss >> rest)
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(lineno) + ": trailing content '" + rest + "'");
    if (u < 0 || v < 0)
      throw Error(ErrorCode::IndexError, "line " + std::to_string(lineno) + ": negative index");
    if (u == v)
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(lineno) + ": self-loop rejected");
    if (!(w > 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::InvalidWeight,
                  "line " + std::to_string(lineno) + ": weight must be positive");
    edges.push_back({static_cast<int>(u), static_cast<int>(v), w});
    max_index = std::max(max_index, static_cast<int>(std::max(u, v)));
  }
  int n = declared_n >= 0 ? declared_n : max_index + 1;
  if (max_index >= n)
    throw Error(ErrorCode::IndexError, "edge index exceeds declared vertex count");
  if (n_out) *n_out = n;
  return edges;
}

DirectedLaplacian load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  int n = 0;
  std::vector<Edge> edges = parse_edge_list(in, &n);
  return from_edge_list(edges, n);
}

}  // namespace dirlap
