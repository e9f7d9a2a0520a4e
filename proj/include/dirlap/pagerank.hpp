#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "dirlap/eulerian.hpp"
#include "dirlap/graph.hpp"
#include "dirlap/report.hpp"

namespace dirlap {

struct ConditionEstimate {
  double kappa_tilde = 1.0;  // t_pp <= kappa_tilde <= 400 n^2 ||L^dag||_1
  long probes = 0;
  double beta_final = 1.0;
  std::vector<std::pair<double, double>> dist_history;  // (k, max probe norm)
  // conversions derived from kappa_tilde
  double l1_pinv_bound = 0.0;   // upper bound on ||L^dag||_1
  double l2_pinv_bound = 0.0;   // upper bound on ||(I-W)^dag||_2
  double tmix_bound = 0.0;      // upper bound on t_mix
};

// Reusable personalized PageRank solver for fixed (W, beta): computes the
// stationary rescaling once, then each solve costs one RCDD solve.
// Teleportation vectors may be signed; the guarantee is the l2 bound
// ||x - beta (I - (1-beta) W)^{-1} p||_2 <= eps ||p||_2.
class PprSolver {
public:
  PprSolver(const RandomWalkMatrix& W, double beta, const EulerianConfig& cfg = {});
  std::pair<std::vector<double>, SolveReport> solve(const std::vector<double>& p,
                                                    double eps) const;
  double beta() const { return beta_; }
  const std::vector<double>& scaling() const;

  struct Impl;

private:
  double beta_;
  std::shared_ptr<const Impl> impl_;
};

std::pair<std::vector<double>, SolveReport> personalized_pagerank(const RandomWalkMatrix& W,
                                                                  const std::vector<double>& p,
                                                                  double beta, double eps,
                                                                  const EulerianConfig& cfg = {});

struct DistProbeResult {
  bool small = false;
  double max_norm_seen = 0.0;
};

// probes M_pp(1/k) with ceil(8 ln n) + 4 random unit vectors orthogonal to 1
DistProbeResult dist_probe(const RandomWalkMatrix& W, double k, std::uint64_t seed,
                           const EulerianConfig& cfg = {});

// doubling search over k until the probe reports "small"
ConditionEstimate estimate_tpp(const RandomWalkMatrix& W, std::uint64_t seed,
                               const EulerianConfig& cfg = {});

// ||s' - s||_2 <= eps
std::pair<std::vector<double>, SolveReport> refine_stationary(const RandomWalkMatrix& W,
                                                              double eps,
                                                              const EulerianConfig& cfg = {});

// entrywise (1 +- eps) approximation
std::pair<std::vector<double>, SolveReport> refine_stationary_multiplicative(
    const RandomWalkMatrix& W, double eps, const EulerianConfig& cfg = {});

// variants reusing an existing condition estimate (skips the doubling search)
std::pair<std::vector<double>, SolveReport> refine_stationary(const RandomWalkMatrix& W,
                                                              double eps,
                                                              const ConditionEstimate& est,
                                                              const EulerianConfig& cfg = {});
std::pair<std::vector<double>, SolveReport> refine_stationary_multiplicative(
    const RandomWalkMatrix& W, double eps, const ConditionEstimate& est,
    const EulerianConfig& cfg = {});

}  // namespace dirlap
