#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "replab/linalg.hpp"
#include "replab/rng.hpp"

namespace replab {

struct PGDConfig {
  int t_pgd = 10000;
  double radius = 1.0;       // R: norm bound of the feasible set
  double beta_curv = 0.0;    // curvature constant of the predictor
  double L_grad = 1.0;       // gradient-scale constant at the initialization
  double eta_override = -1;  // > 0 overrides the derived step size
  bool record_iterates = true;

  // eta = (1/sqrt(T)) * R / sqrt(L^2 + beta^2 R^2)
  double eta() const;
};

struct PGDTrace {
  std::vector<Vector> iterates;  // theta_0..theta_T when recorded
  std::vector<double> losses;    // per-iterate empirical loss, size T+1
  int best_index = 0;            // argmin of losses, smallest index on ties
  Vector best_x;
  Vector final_x;
};

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;
using ProjectorFn = std::function<void(Vector&)>;

// Fixed-step projected gradient descent. Throws std::runtime_error naming
// the offending iteration if the loss or gradient turns non-finite.
PGDTrace run_pgd(const ScalarFn& objective, const VectorFn& gradient,
                 const ProjectorFn& projector, Vector x0,
                 const PGDConfig& config);

// Exact Euclidean projection onto the product of two balls:
// ||delta||_F <= c1 and ||w|| <= c2, each factor clamped radially.
std::pair<Matrix, Vector> project_product_ball(Matrix delta, Vector w,
                                               double c1, double c2);

// Radial clamp of one segment of a packed parameter vector.
struct BallSpec {
  std::size_t offset = 0;
  std::size_t size = 0;
  double radius = 0;
};
void clamp_segment_balls(Vector& x, std::span<const BallSpec> balls);

// ---------------------------------------------------------------------------
// Approximate-linearity constants
// ---------------------------------------------------------------------------

// Per-example view of a parametric model: value, parameter gradient, and
// (optionally) Hessian-vector products. When hvp is empty a central
// finite-difference of grad with step 1e-5 (1 + ||theta||) is used.
struct PointwiseModel {
  Eigen::Index dim = 0;
  int n_examples = 0;
  std::function<double(const Vector& theta, int i)> value;
  std::function<Vector(const Vector& theta, int i)> grad;
  std::function<Vector(const Vector& theta, int i, const Vector& v)> hvp;
};

struct LinearityEstimate {
  double beta_curv = 0;  // sqrt(sup over probes of avg_i ||H_i||_op^2)
  double L_grad = 0;     // sqrt(avg_i ||grad_i(theta_init)||^2)
};

// Empirical estimates of the approximate-linearity constants: beta via
// power iteration on per-example Hessian-vector products at n_probe
// feasible points, L as the root mean squared gradient norm at theta_init.
// Throws when a power iteration fails to converge within 100 steps.
LinearityEstimate estimate_approx_linearity(
    const PointwiseModel& model,
    const std::function<Vector(Rng&)>& feasible_sampler, int n_probe,
    const Vector& theta_init, std::uint64_t seed);

}  // namespace replab
