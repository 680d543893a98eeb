#include "replab/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace replab {

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, Vector x0,
                           const LbfgsOptions& options) {
  const Eigen::Index n = x0.size();
  Vector x = std::move(x0);
  Vector grad(n), grad_new(n);
  double f = fn(x, grad);
  if (!std::isfinite(f))
    throw std::runtime_error("lbfgs: objective not finite at x0");

  LbfgsResult res;
  res.loss_trace.push_back(f);

  struct Pair {
    Vector s, y;
    double rho;
  };
  std::deque<Pair> pairs;
  double h0 = 1.0;  // initial Hessian scale

  Vector q(n), z(n), x_new(n);
  std::vector<double> alpha;

  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    double gnorm = grad.norm();
    if (gnorm <= options.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for the search direction z = -H grad.
    q = grad;
    alpha.assign(pairs.size(), 0.0);
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
      q -= alpha[i] * pairs[i].y;
    }
    z = h0 * q;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      double beta = pairs[i].rho * pairs[i].y.dot(z);
      z += (alpha[i] - beta) * pairs[i].s;
    }
    z = -z;

    double descent = grad.dot(z);
    if (!(descent < 0)) {
      // Stale curvature produced a non-descent direction; fall back to
      // steepest descent and drop the memory.
      pairs.clear();
      z = -grad;
      descent = -gnorm * gnorm;
      h0 = 1.0;
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = x + step * z;
      f_new = fn(x_new, grad_new);
      if (std::isfinite(f_new) &&
          f_new <= f + options.armijo_c * step * descent) {
        accepted = true;
        break;
      }
      step *= options.backtrack;
    }
    if (!accepted) break;  // no progress possible at this precision

    Vector s = x_new - x;
    Vector y = grad_new - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
      h0 = pairs.back().s.dot(pairs.back().y) /
           pairs.back().y.squaredNorm();
    }

    x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    res.loss_trace.push_back(f);
  }

  res.x = std::move(x);
  res.f = f;
  res.iterations = iter;
  res.grad_norm = grad.norm();
  if (res.grad_norm <= options.grad_tol) res.converged = true;
  return res;
}

}  // namespace replab
