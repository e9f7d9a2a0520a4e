#pragma once

#include <cstdint>
#include <vector>

#include "dirlap/eulerian.hpp"
#include "dirlap/graph.hpp"

namespace dirlap {

struct StationaryConfig {
  // 0 = auto: min over the default alpha^2 * 1e-6 / n^2
  double eps_inner = 0.0;
  // stop before the nominal round count once the slack target and the
  // certificate are both met (the fixed point cannot improve further)
  bool allow_early_exit = true;
  // the public contract requires a strongly connected graph; internal callers
  // (general DD reductions) run the same iteration on any Laplacian whose
  // vertices all have positive out-weight
  bool require_connected = true;
  EulerianConfig solver;
};

struct StationaryResult {
  std::vector<double> s;        // simplex vector, positive
  std::vector<double> x_final;  // positive scaling, L x_final nearly Eulerian
  std::vector<double> e_final;  // slack vector
  double alpha = 0.0;
  int iterations = 0;
  bool certificate_alpha_rcdd = false;
  // rounds where the monitored slack norm failed its contraction check
  int contraction_violations = 0;
  double slack_norm = 0.0;  // final ||D^{-1}(e - alpha d)||_1
};

// entrywise minimal e >= 0 such that (diag(e) + L) diag(x) is alpha-RCDD
std::vector<double> minimal_slack(const DirectedLaplacian& L, const std::vector<double>& x,
                                  double alpha);

// Algorithm: iterative rescaling via alpha-RCDD solves. Output s is a simplex
// vector with (3 alpha n D + L) D^{-1} diag(s) alpha-RCDD and
// kappa(S) <= 20 n / alpha^2.
StationaryResult compute_stationary(const DirectedLaplacian& L, double alpha,
                                    const StationaryConfig& cfg = {});

}  // namespace dirlap
