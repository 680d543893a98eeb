#pragma once

#include <utility>

#include "replab/env.hpp"
#include "replab/linalg.hpp"
#include "replab/pgd.hpp"

namespace replab {

enum class AdaptMode { delta_only, full_adapt, ignore_rep };

// Target-time fine-tuning configuration for the linear and logistic
// settings. The predictor is x -> beta * x'(A_B0 + Delta)(w0 + w) with
// feasible radii ||Delta||_F <= c1/beta and ||w|| <= c2/beta.
struct AdaptSpec {
  AdaptMode mode = AdaptMode::full_adapt;
  double beta_scale = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  Vector w0_dir;  // unit k-vector u; empty selects e1
  int t_pgd = 10000;
  double eta_override = -1;
  bool record_iterates = false;
};

struct FineTuneResult {
  Vector theta_hat;   // recovered predictor parameter in R^d
  Matrix Delta_hat;   // d x 2k best iterate
  Vector w_hat;       // 2k best iterate
  PGDTrace trace;
  AdaptSpec spec;
  double beta_curv_used = 0;  // constants behind the step size
  double L_grad_used = 0;
  double radius_used = 0;
  double eta_used = 0;
};

// Antisymmetric initialization: A_B0 = [B0 B0] (d x 2k), w0 = [u, -u].
// A_B0 w0 = 0, so the initial predictor is identically zero.
std::pair<Matrix, Vector> build_antisymmetric_init(const Matrix& B0,
                                                   const Vector& u);

// Squared-loss fine-tuning. delta_only freezes w at zero (w-ball radius 0),
// full_adapt runs joint PGD over the product ball, ignore_rep is the
// minimum-norm least-squares solution on the target data alone.
FineTuneResult finetune_linear(const Matrix& B0, const Dataset& target,
                               const AdaptSpec& spec);

// Logistic loss on the beta-scaled predictor; labels must be in {0,1}.
// Callers set c2 = r * sqrt(kappa) with kappa = cond(Sigma) to realize the
// paper's target feasible set.
FineTuneResult finetune_logistic(const Matrix& B0, const Dataset& target,
                                 const AdaptSpec& spec);

// Empirical squared loss of the linear fine-tuning objective at (Delta, w).
double linear_target_loss(const Matrix& A, const Vector& w0,
                          const Dataset& target, double beta,
                          const Matrix& Delta, const Vector& w);

// ---------------------------------------------------------------------------
// Two-layer network fine-tuning
// ---------------------------------------------------------------------------

struct NnAdaptSpec {
  double gamma_scale = 1.0;  // predictor scale during target time
  double kappa = 1.0;        // ball: ||Delta||_F^2 + ||w||^2 <= kappa/gamma^2
  int t_pgd = 10000;
  double eta_override = -1;
  bool record_iterates = false;
};

struct NnFineTuneResult {
  Matrix Delta_hat;  // d x 2k
  Vector w_hat;      // 2k
  PGDTrace trace;
  double radius_used = 0;
  double eta_used = 0;
};

// PGD on the squared-error loss of f^gamma_(B0+Delta, w0+w), projected onto
// the single Euclidean ball over the concatenated (Delta, w).
NnFineTuneResult finetune_nn(const Matrix& B0, const Vector& w0,
                             Activation act, const Dataset& target,
                             const NnAdaptSpec& spec);

// Gradient features of the network at an antisymmetric initialization:
// phi = sigma(B0'x) (2k) and psi = x (w0 .* sigma'(B0'x))' (d x 2k), which
// pairs with Delta under the Frobenius inner product.
Vector nn_phi(const Matrix& B0, Activation act, const Vector& x);
Matrix nn_psi(const Matrix& B0, const Vector& w0, Activation act,
              const Vector& x);

// Taylor remainder zeta = f_(theta0 + (Delta,w)) / scale - w'phi - <psi, Delta>,
// computed by subtraction (the scale cancels).
double nn_remainder(const Matrix& B0, const Vector& w0, Activation act,
                    const Matrix& Delta, const Vector& w, const Vector& x);

}  // namespace replab
