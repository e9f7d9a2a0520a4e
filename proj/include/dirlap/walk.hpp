#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dirlap/eulerian.hpp"
#include "dirlap/graph.hpp"
#include "dirlap/pagerank.hpp"

namespace dirlap {

// sigma: lower bound on the minimum stationary probability; M: upper bound on
// the mixing time. Both are estimated internally when omitted.
struct WalkBounds {
  std::optional<double> sigma;
  std::optional<double> M;
};

// k x n sign-projection sketch answering C_uv ~ ||Y (1_u - 1_v)||^2
struct CommuteSketch {
  int n = 0;
  int k = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  bool patched = false;
  std::vector<double> Y;  // row-major k x n
  std::vector<double> stationary_used;
};

// |H~ - H_uv| <= eps; returns 0 for u == v
double hitting_time(const RandomWalkMatrix& W, int u, int v, double eps,
                    const WalkBounds& bounds = {}, const EulerianConfig& cfg = {});

// C_uv = H_uv + H_vu via two hitting-time calls; |C~ - C_uv| <= 2 eps
double commute_time(const RandomWalkMatrix& W, int u, int v, double eps,
                    const WalkBounds& bounds = {}, const EulerianConfig& cfg = {});

struct EscapeResult {
  std::vector<double> p;    // clamped to [0,1]; p[u] = 1, p[v] = 0
  std::vector<double> raw;  // pre-clamp values, for debugging
};

// |p~_i - p_i| <= eps for all i
EscapeResult escape_probabilities(const RandomWalkMatrix& W, int u, int v, double eps,
                                  const WalkBounds& bounds = {}, const EulerianConfig& cfg = {});

// requires (I - W) diag(s) Eulerian within validation tolerance
CommuteSketch sketch_known_stationary(const RandomWalkMatrix& W, const std::vector<double>& s,
                                      double eps, std::uint64_t seed,
                                      const EulerianConfig& cfg = {});

// perturbs W by at most eps entrywise so that the returned stationary is
// exact: (I - W~) diag(s~) is Eulerian by construction
std::pair<RandomWalkMatrix, std::vector<double>> patch_stationary(const RandomWalkMatrix& W,
                                                                  double eps,
                                                                  const WalkBounds& bounds = {},
                                                                  const EulerianConfig& cfg = {});

// patch + sketch; all-pairs guarantee (1 +- eps)
CommuteSketch sketch(const RandomWalkMatrix& W, double eps, std::uint64_t seed,
                     const WalkBounds& bounds = {}, const EulerianConfig& cfg = {});

double sketch_query(const CommuteSketch& S, int u, int v);

// binary serialization; layout documented in docs/sketch_format.md
void save_sketch(const CommuteSketch& S, const std::string& path);
CommuteSketch load_sketch(const std::string& path);

}  // namespace dirlap
