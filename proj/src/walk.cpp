#include "dirlap/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "dirlap/errors.hpp"
#include "dirlap/kernels.hpp"
#include "dirlap/rcdd.hpp"
#include "dirlap/rng.hpp"

namespace dirlap {

namespace {

constexpr std::uint64_t kSketchLabel = 0x5ce7;
// multiplicative stationary refinement cannot certify much below this with
// float64 inner solves
constexpr double kMinMultiplicativeEps = 1e-9;

double logn(int n) { return std::log(static_cast<double>(std::max(n, 2))); }

struct ResolvedBounds {
  double sigma = 0.0;
  double M = 0.0;
  double l2_bound = 0.0;  // upper bound on ||(I-W)^dag||_2 for inner solves
  ConditionEstimate est;
};

ResolvedBounds resolve_bounds(const RandomWalkMatrix& W, const WalkBounds& bounds,
                              const EulerianConfig& cfg) {
  ResolvedBounds r;
  int n = W.n();
  r.est = estimate_tpp(W, cfg.seed, cfg);
  r.M = bounds.M.value_or(r.est.tmix_bound);
  // ||(I-W)^dag||_2 <= sqrt(n) ||L^dag||_1 <= sqrt(n) * 4 sqrt(n) log2(n) t_mix
  r.l2_bound = std::min(r.est.l2_pinv_bound,
                        4.0 * n * std::log2(static_cast<double>(std::max(n, 2))) * r.M);
  if (bounds.sigma) {
    r.sigma = *bounds.sigma;
  } else {
    std::vector<double> s = refine_stationary_multiplicative(W, 0.5, r.est, cfg).first;
    r.sigma = *std::min_element(s.begin(), s.end()) / 1.5;
  }
  if (!(r.sigma > 0.0) || !(r.M >= 1.0))
    throw Error(ErrorCode::BadParameter, "invalid stationary/mixing bounds");
  return r;
}

void check_vertex(const RandomWalkMatrix& W, int v) {
  if (v < 0 || v >= W.n()) throw Error(ErrorCode::IndexError, "vertex index out of range");
}

std::vector<double> refine_multiplicative_widening(const RandomWalkMatrix& W, double eps_s,
                                                   const ConditionEstimate& est,
                                                   const EulerianConfig& cfg) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return refine_stationary_multiplicative(W, eps_s, est, cfg).first;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoConvergence || eps_s >= 0.1) throw;
      eps_s = std::min(eps_s * 4.0, 0.4);
    }
  }
  return refine_stationary_multiplicative(W, eps_s, est, cfg).first;
}

double hitting_with(const RandomWalkMatrix& W, int u, int v, double eps,
                    const ResolvedBounds& rb, const EulerianConfig& cfg) {
  if (u == v) return 0.0;
  int n = W.n();
  double n15 = std::pow(static_cast<double>(n), 1.5);
  double eps_z =
      std::max(eps * rb.sigma / (16.0 * std::sqrt(2.0) * rb.M * n15 * logn(n)),
               cfg.min_inner_eps);
  std::vector<double> b(n, 0.0);
  b[u] = 1.0;
  b[v] = -1.0;
  DirectedLaplacian L = laplacian_from_walk(W);
  std::vector<double> z = solve_lap_pinv(L, b, eps_z, rb.l2_bound, cfg).first;

  // the stationary enters only through z_v / s_v, so the multiplicative
  // accuracy it actually needs follows from the computed z; the demand keeps
  // a wide safety margin, so widen and retry if float64 cannot certify it
  double eps_s = eps * rb.sigma / (2.0 * (std::fabs(z[v]) + eps * rb.sigma));
  eps_s = std::clamp(std::max(eps_s, kMinMultiplicativeEps), 1e-7, 0.4);
  std::vector<double> s = refine_multiplicative_widening(W, eps_s, rb.est, cfg);

  return kernels::vsum(z) - z[v] / s[v];
}

}  // namespace

double hitting_time(const RandomWalkMatrix& W, int u, int v, double eps,
                    const WalkBounds& bounds, const EulerianConfig& cfg) {
  check_vertex(W, u);
  check_vertex(W, v);
  if (u == v) return 0.0;
  ResolvedBounds rb = resolve_bounds(W, bounds, cfg);
  return hitting_with(W, u, v, eps, rb, cfg);
}

double commute_time(const RandomWalkMatrix& W, int u, int v, double eps,
                    const WalkBounds& bounds, const EulerianConfig& cfg) {
  check_vertex(W, u);
  check_vertex(W, v);
  if (u == v) return 0.0;
  ResolvedBounds rb = resolve_bounds(W, bounds, cfg);
  return hitting_with(W, u, v, eps, rb, cfg) + hitting_with(W, v, u, eps, rb, cfg);
}

// Escape probabilities are harmonic for the walk's own transition direction:
// p_w = sum_j W_jw p_j off the boundary, p_u = 1, p_v = 0. The solution is
// p = (x - x_v 1) / ((1_u - 1_v)^T x) for x solving
// (I - W)^T x = S^{-1}(1_u - 1_v), which is consistent since the right-hand
// side is orthogonal to the stationary.
EscapeResult escape_probabilities(const RandomWalkMatrix& W, int u, int v, double eps,
                                  const WalkBounds& bounds, const EulerianConfig& cfg) {
  check_vertex(W, u);
  check_vertex(W, v);
  if (u == v) throw Error(ErrorCode::BadQuery, "escape probabilities need distinct u, v");
  int n = W.n();
  ResolvedBounds rb = resolve_bounds(W, bounds, cfg);

  double ln2 = logn(n) * logn(n);
  double eps_t = eps * rb.sigma * rb.sigma * rb.sigma / (2000.0 * rb.M * rb.M * n * ln2);
  eps_t = std::max(eps_t, cfg.min_inner_eps);
  double eps_z = std::max(eps_t / (4.0 * std::sqrt(2.0) * n * logn(n) * rb.M),
                          cfg.min_inner_eps);

  double eps_s = std::clamp(eps / 8.0, 1e-7, 0.4);
  std::vector<double> s = refine_multiplicative_widening(W, eps_s, rb.est, cfg);

  std::vector<double> q(n, 0.0);
  q[u] = 1.0 / s[u];
  q[v] = -1.0 / s[v];
  std::vector<double> x = walk_pinv_apply(W, q, eps_z, true, s, cfg);

  double denom = x[u] - x[v];  // the commute-time quadratic form, positive
  if (denom <= 0.0) throw Error(ErrorCode::Singular, "escape probabilities: zero commute form");

  EscapeResult out;
  out.raw.resize(n);
  out.p.resize(n);
  for (int i = 0; i < n; ++i) {
    out.raw[i] = (x[i] - x[v]) / denom;
    out.p[i] = std::clamp(out.raw[i], 0.0, 1.0);
  }
  out.p[u] = 1.0;
  out.p[v] = 0.0;
  return out;
}

std::pair<RandomWalkMatrix, std::vector<double>> patch_stationary(const RandomWalkMatrix& W,
                                                                  double eps,
                                                                  const WalkBounds& bounds,
                                                                  const EulerianConfig& cfg) {
  int n = W.n();
  if (!strongly_connected(W.matrix()))
    throw Error(ErrorCode::NotConnected, "patch_stationary: graph is not strongly connected");
  ResolvedBounds rb = resolve_bounds(W, bounds, cfg);

  double eps_p = std::max({eps * rb.sigma / (4.0 * n), cfg.min_inner_eps, 1e-8});
  std::vector<double> s1 = refine_stationary(W, eps_p, rb.est, cfg).first;
  std::vector<double> s2(n);
  for (int i = 0; i < n; ++i) s2[i] = s1[i] + eps_p;

  // demand d = (W - I) s''; route it along direct arcs from surplus to deficit
  std::vector<double> d = W.matrix().matvec(s2);
  kernels::axpby(-1.0, s2, 1.0, d);

  std::vector<Triplet> arcs;
  {
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) {
      if (d[i] > 0.0) pos.push_back(i);
      if (d[i] < 0.0) neg.push_back(i);
    }
    std::vector<double> rem = d;
    std::size_t a = 0, bidx = 0;
    while (a < pos.size() && bidx < neg.size()) {
      int src = pos[a], dst = neg[bidx];
      double f = std::min(rem[src], -rem[dst]);
      if (f > 0.0) arcs.push_back({dst, src, f});  // column src carries out-mass
      rem[src] -= f;
      rem[dst] += f;
      if (rem[src] <= 0.0) ++a;
      if (rem[dst] >= 0.0) ++bidx;
    }
  }

  std::vector<double> s_raw(n);
  for (int i = 0; i < n; ++i) s_raw[i] = s2[i] + std::max(d[i], 0.0);
  double total = kernels::vsum(s_raw);

  std::vector<Triplet> wts;
  for (const Triplet& t : W.matrix().triplets())
    wts.push_back({t.row, t.col, t.value * s2[t.col] / s_raw[t.col]});
  for (const Triplet& t : arcs) wts.push_back({t.row, t.col, t.value / s_raw[t.col]});
  RandomWalkMatrix Wp = RandomWalkMatrix::from_matrix(SparseMatrix::from_triplets(n, wts));

  std::vector<double> s_tilde(n);
  for (int i = 0; i < n; ++i) s_tilde[i] = s_raw[i] / total;

  // balance is exact by construction; verify to the validation tolerance
  SparseMatrix Lb = laplacian_from_walk(Wp).matrix().scaled_cols(s_tilde);
  if (!validate(Lb).is_eulerian)
    throw Error(ErrorCode::NotEulerian, "patch_stationary: rescaled matrix failed balance check");
  return {std::move(Wp), std::move(s_tilde)};
}

CommuteSketch sketch_known_stationary(const RandomWalkMatrix& W, const std::vector<double>& s,
                                      double eps, std::uint64_t seed, const EulerianConfig& cfg) {
  int n = W.n();
  if (static_cast<int>(s.size()) != n)
    throw Error(ErrorCode::DimError, "sketch: stationary size mismatch");
  if (!(eps > 0.0 && eps < 1.0))
    throw Error(ErrorCode::BadParameter, "sketch: eps must lie in (0,1)");
  for (double v : s)
    if (!(v > 0.0)) throw Error(ErrorCode::BadScaling, "sketch: stationary must be positive");

  SparseMatrix Lb = laplacian_from_walk(W).matrix().scaled_cols(s);
  if (!validate(Lb).is_eulerian)
    throw Error(ErrorCode::NotEulerian,
                "sketch: (I - W) S is not Eulerian; patch the stationary first");

  std::size_t m_dir = 0;
  double w_min = 1.0;
  for (const Triplet& t : W.matrix().triplets())
    if (t.row != t.col) {
      ++m_dir;
      w_min = std::min(w_min, t.value);
    }
  double m_eff = static_cast<double>(std::max<std::size_t>(m_dir, 2));
  int k = static_cast<int>(std::ceil(2400.0 * std::log(m_eff) / (eps * eps)));

  double s_min = *std::min_element(s.begin(), s.end());
  double eps_solver = eps * eps * std::pow(s_min, 3) * std::pow(w_min, 3) /
                      (50.0 * std::pow(static_cast<double>(n), 4));
  eps_solver = std::max(eps_solver, cfg.min_inner_eps);

  // columns of (L_b^T)^dag via n solves against the transposed system; rows of
  // the sketch are then sign combinations of incidence differences
  EulerianConfig tcfg = cfg;
  tcfg.seed = Rng(seed).child(kSketchLabel, 1).state();
  tcfg.throw_on_failure = false;
  EulerianSolver solver(DirectedLaplacian::from_matrix(Lb.transpose()), tcfg);
  std::vector<std::vector<double>> xi(n);
  std::vector<double> ej(n, 0.0);
  for (int j = 0; j < n; ++j) {
    ej.assign(n, 0.0);
    ej[j] = 1.0;
    xi[j] = solver.solve(ej, eps_solver).first;
  }

  Incidence inc = incidence_of_symmetrization(Lb);
  std::size_t m_und = inc.size();
  std::vector<double> G(m_und * static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < m_und; ++e) {
    double sw = std::sqrt(inc.w[e]);
    for (int j = 0; j < n; ++j)
      G[e * n + j] = sw * (xi[j][inc.u[e]] - xi[j][inc.v[e]]);
  }

  CommuteSketch sk;
  sk.n = n;
  sk.k = k;
  sk.eps = eps;
  sk.seed = seed;
  sk.stationary_used = s;
  sk.Y.assign(static_cast<std::size_t>(k) * n, 0.0);
  Rng rng = Rng(seed).child(kSketchLabel, 2);
  double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  for (int i = 0; i < k; ++i) {
    double* row = sk.Y.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t e = 0; e < m_und; ++e)
      kernels::axpby(rng.next_sign() * inv_sqrt_k, G.data() + e * n, 1.0, row, n);
  }
  return sk;
}

CommuteSketch sketch(const RandomWalkMatrix& W, double eps, std::uint64_t seed,
                     const WalkBounds& bounds, const EulerianConfig& cfg) {
  int n = W.n();
  ResolvedBounds rb = resolve_bounds(W, bounds, cfg);
  double ln_n = logn(n);
  double eps0 = rb.sigma * rb.sigma /
                (256.0 * std::pow(static_cast<double>(n), 3) * ln_n * ln_n * rb.M * rb.M) *
                (eps / 2.0);
  eps0 = std::max(eps0, cfg.min_inner_eps);
  WalkBounds inner;
  inner.sigma = rb.sigma;
  inner.M = rb.M;
  auto [Wp, s] = patch_stationary(W, eps0, inner, cfg);
  // The patch shifts commute times by a vanishing fraction of the budget at
  // these accuracies, so nearly the whole multiplicative budget goes to the
  // projection. (An even eps/3 split would triple k's denominator and put the
  // row count far beyond what the row formula already demands.)
  CommuteSketch sk = sketch_known_stationary(Wp, s, 0.95 * eps, seed, cfg);
  sk.patched = true;
  return sk;
}

double sketch_query(const CommuteSketch& S, int u, int v) {
  if (u < 0 || u >= S.n || v < 0 || v >= S.n)
    throw Error(ErrorCode::IndexError, "sketch_query: vertex index out of range");
  if (u == v) return 0.0;
  double acc = 0.0;
  for (int r = 0; r < S.k; ++r) {
    double d = S.Y[static_cast<std::size_t>(r) * S.n + u] -
               S.Y[static_cast<std::size_t>(r) * S.n + v];
    acc += d * d;
  }
  return acc;
}

namespace {
constexpr char kSketchMagic[8] = {'D', 'L', 'S', 'K', 'E', 'T', 'C', 'H'};

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_sketch(const CommuteSketch& S, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot open '" + path + "' for writing");
  out.write(kSketchMagic, sizeof(kSketchMagic));
  std::uint32_t version = 1, flags = S.patched ? 1u : 0u;
  write_raw(out, version);
  write_raw(out, flags);
  std::uint64_t n = static_cast<std::uint64_t>(S.n), k = static_cast<std::uint64_t>(S.k);
  write_raw(out, n);
  write_raw(out, k);
  write_raw(out, S.eps);
  write_raw(out, S.seed);
  out.write(reinterpret_cast<const char*>(S.Y.data()),
            static_cast<std::streamsize>(S.Y.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::ParseError, "failed writing sketch to '" + path + "'");
}

CommuteSketch load_sketch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kSketchMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::ParseError, "'" + path + "' is not a sketch file");
  std::uint32_t version = 0, flags = 0;
  read_raw(in, version);
  read_raw(in, flags);
  if (version != 1) throw Error(ErrorCode::ParseError, "unsupported sketch version");
  std::uint64_t n = 0, k = 0;
  read_raw(in, n);
  read_raw(in, k);
  CommuteSketch S;
  read_raw(in, S.eps);
  read_raw(in, S.seed);
  S.n = static_cast<int>(n);
  S.k = static_cast<int>(k);
  S.patched = (flags & 1u) != 0;
  S.Y.resize(static_cast<std::size_t>(n) * k);
  in.read(reinterpret_cast<char*>(S.Y.data()),
          static_cast<std::streamsize>(S.Y.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::ParseError, "sketch file truncated");
  return S;
}

}  // namespace dirlap
