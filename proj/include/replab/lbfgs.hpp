#pragma once

#include <functional>
#include <vector>

#include "replab/linalg.hpp"

namespace replab {

struct LbfgsOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;     // stop when ||grad||_2 <= grad_tol
  int memory = 10;            // stored (s, y) pairs
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_line_search = 50;
};

struct LbfgsResult {
  Vector x;
  double f = 0;
  int iterations = 0;
  bool converged = false;          // gradient tolerance reached
  double grad_norm = 0;
  std::vector<double> loss_trace;  // accepted objective values, f(x0) first
};

// Objective callback: writes the gradient into `grad` (preallocated to
// x.size()) and returns the value.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

// Limited-memory BFGS (two-loop recursion) with backtracking Armijo line
// search. The accepted-iterate loss trace is non-increasing by construction.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, Vector x0,
                           const LbfgsOptions& options = {});

}  // namespace replab
