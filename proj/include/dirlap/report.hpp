#pragma once

#include <string>

namespace dirlap {

// Returned alongside every solver result. `residual` is the achieved relative
// residual in the norm of the operation's contract; `tol` echoes the request.
struct SolveReport {
  long iterations = 0;
  int restarts = 0;
  double residual = 0.0;
  double tol = 0.0;
  double wall_ms = 0.0;
  bool converged = true;
  std::string method;
};

}  // namespace dirlap
