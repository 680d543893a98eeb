#pragma once

#include <cstdint>
#include <functional>

#include "replab/env.hpp"
#include "replab/linalg.hpp"

namespace replab {

// E[(x'theta_hat - x'theta_star)^2] = (theta_hat - theta_star)' Sigma
// (theta_hat - theta_star) for zero-mean inputs with covariance Sigma.
// Rejects asymmetric Sigma (tolerance 1e-10).
double excess_risk_quadratic(const Vector& theta_hat, const Vector& theta_star,
                             const Matrix& Sigma);

// sin of the principal angle via the top singular value:
// sqrt(max(0, 1 - sigma_1^2(Bhat' Bstar))); both arguments are
// orthonormalized defensively.
double sine_principal_angle(const Matrix& B_hat, const Matrix& B_star);

struct McEstimate {
  double estimate = 0;
  double stderr_ = 0;
  int n_mc = 0;
};

using Predictor = std::function<double(const Vector& x)>;

// Monte-Carlo population loss of a predictor under the environment's
// input/label law at theta_star. Squared loss carries the 1/2 factor;
// logistic is the plain cross-entropy.
McEstimate population_loss_mc(const Predictor& predictor,
                              const TaskEnvironment& env,
                              const Vector& theta_star, int n_mc,
                              std::uint64_t seed);

// Same for the two-layer network law (inputs uniform in the unit ball,
// bounded uniform label noise).
McEstimate population_loss_mc_nn(const Predictor& predictor,
                                 const NnEnvironment& env,
                                 const NnTaskParams& truth_offset, int n_mc,
                                 std::uint64_t seed);

}  // namespace replab
