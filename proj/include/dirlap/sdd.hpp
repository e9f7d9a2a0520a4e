#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "dirlap/report.hpp"
#include "dirlap/sparse.hpp"

namespace dirlap {

enum class SddBackend { dense_factorization, pcg };

// Linear operator applying an approximate pseudoinverse of a symmetric SDD
// matrix U. The operator realizes some fixed symmetric U~ with
// (1-tol^2) U <= U~ <= U, so downstream code may treat apply() as U~^dagger.
// Kernel handling for Laplacian blocks: inputs and outputs are projected
// against the all-ones vector of each zero-row-sum component.
// Immutable after build; apply() is safe to call concurrently.
class PinvOperator {
public:
  PinvOperator() = default;  // empty shell; build_sdd_operator returns usable ones
  bool valid() const { return impl_ != nullptr; }

  int n() const;
  double tol() const;
  SddBackend backend() const;
  std::uint64_t rand_tag() const;

  std::vector<double> apply(const std::vector<double>& x) const;
  // iterations_out (optional) reports the inner iteration count of this apply
  std::vector<double> apply(const std::vector<double>& x, long* iterations_out) const;

  struct Impl;
  explicit PinvOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

private:
  std::shared_ptr<const Impl> impl_;
};

// U must be symmetric (within 1e-12 relative) and SDD. dense_factorization is
// exact up to roundoff; pcg iterates a Jacobi-preconditioned conjugate
// gradient to the requested tolerance.
PinvOperator build_sdd_operator(const SparseMatrix& U, double tol = 1e-10,
                                SddBackend backend = SddBackend::dense_factorization,
                                std::uint64_t rand_tag = 0);

std::pair<std::vector<double>, SolveReport> solve_sdd(
    const SparseMatrix& U, const std::vector<double>& b, double tol = 1e-10,
    SddBackend backend = SddBackend::dense_factorization);

}  // namespace dirlap
