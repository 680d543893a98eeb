#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replab/linalg.hpp"
#include "replab/rng.hpp"

namespace replab {

enum class Family { linear, logistic, nn, hardcase_linear, hardcase_relu };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Input covariance specification: identity, diagonal, or an explicit
// dense symmetric positive-definite matrix.
struct SigmaSpec {
  enum class Kind { identity, diagonal, dense };
  Kind kind = Kind::identity;
  Vector diag;  // used when kind == diagonal
  Matrix dense; // used when kind == dense

  static SigmaSpec Identity() { return {}; }
  static SigmaSpec Diagonal(Vector d);
  static SigmaSpec Dense(Matrix m);

  Matrix materialize(int d) const;
};

// Per-task ground truth: predictor theta_t = (Bstar + Delta) w.
struct TaskParams {
  Matrix Delta;  // d x k, ||Delta||_F <= delta0
  Vector w;      // k
};

struct TaskEnvironment {
  int d = 0;
  int k = 0;
  int T = 0;
  Matrix Sigma;       // d x d SPD input covariance
  Matrix Bstar;       // d x k orthonormal
  double delta0 = 0;  // perturbation budget
  std::vector<TaskParams> tasks;
  double noise_sigma = 0;
  Family family = Family::linear;
  std::uint64_t seed = 0;

  // Validation bounds for ||w_t|| and the diversity constant in
  // sigma_k(W)^2 >= diversity_c * T / k.
  double w_norm_lo = 0.5;
  double w_norm_hi = 1.5;
  double diversity_c = 0.1;

  // Radius of the target head law (r in the target task distribution).
  double target_w_radius = 1.0;

  // Hard-case only: small eigenvalue of the leading covariance block.
  double eps = 0.0;

  Vector task_theta(int t) const;          // (Bstar + Delta_t) w_t
  Vector task_delta(int t) const;          // Delta_t w_t
  Matrix task_weight_matrix() const;       // W = [w_1 ... w_T], k x T
};

struct Dataset {
  Matrix X;  // n x d
  Vector y;  // n
  int n = 0;
  int task_id = -1;  // source index, or -1 for a target draw
  std::uint64_t seed = 0;
};

struct TargetTask {
  Vector theta_star;  // d
  Vector w_star;      // k
  Vector delta_star;  // d, ||delta_star|| <= delta0
};

struct EnvOptions {
  double w_norm_lo = 0.5;
  double w_norm_hi = 1.5;
  double diversity_c = 0.1;
  int max_retries = 20;
  double target_w_radius = 1.0;
  Family family = Family::linear;
};

// Builds a linear (or logistic, via options.family) environment. Heads are
// sampled uniformly on the unit sphere, perturbations as Frobenius-normalized
// Gaussian matrices scaled to delta0, then the parameterization is
// re-expressed so that Bstar' Sigma delta_t = 0 for every task. Draws that
// fail the sigma_k(W)^2 >= c T/k diversity bound are regenerated up to
// options.max_retries times.
TaskEnvironment make_linear_env(int d, int k, int T, double delta0,
                                double noise_sigma, const SigmaSpec& sigma,
                                std::uint64_t seed,
                                const EnvOptions& options = {});

// Re-parameterizes every task so that Bstar' Sigma (Delta_t w_t) = 0 while
// keeping each predictor theta_t unchanged. Idempotent.
TaskEnvironment normalize_convention(const TaskEnvironment& env);

// Throws std::runtime_error when any environment invariant fails.
void validate_environment(const TaskEnvironment& env);

// n_S i.i.d. samples per source task. Labels follow the family law:
// linear y = X theta + sigma z, logistic y ~ Bernoulli(sigmoid(x'theta)).
std::vector<Dataset> sample_source_datasets(const TaskEnvironment& env,
                                            int n_S, std::uint64_t seed);

// One dataset for an arbitrary predictor vector under the environment's
// input/label law. task_id = -1 marks target draws.
Dataset sample_dataset(const TaskEnvironment& env, const Vector& theta, int n,
                       int task_id, std::uint64_t seed);

// Target draw: theta* = Bstar w* + delta* with w* uniform on the radius-r
// sphere and delta* uniform on the radius-delta0 sphere of the subspace
// allowed by the family (Sigma-orthogonal complement of col(Bstar); the
// last-k coordinate block E_k for hard-case families).
TargetTask sample_target_task(const TaskEnvironment& env, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Two-layer network environment (width 2k, antisymmetric ground truth).
// ---------------------------------------------------------------------------

enum class Activation { relu, tanh_act };

double act_value(Activation a, double t);
double act_deriv(Activation a, double t);
// Bounds on |sigma'| and |sigma''| over the relevant input range.
double act_lipschitz(Activation a);
double act_smoothness(Activation a);

struct NnTaskParams {
  Matrix Delta;  // d x 2k
  Vector w;      // 2k
};

struct NnEnvironment {
  int d = 0;
  int k = 0;         // half-width; network width is 2k
  int T = 0;
  double beta = 1;   // predictor scale during source time
  Matrix B0;         // d x 2k antisymmetric: [A, A], columns norm <= 1
  Vector w0;         // 2k sign vector [s, -s]
  std::vector<Matrix> basis;  // k orthonormal d x 2k fine-tuning directions
  std::vector<NnTaskParams> tasks;  // offsets from (B0, w0), O(1/beta) norms
  double noise_bound = 0.1;         // uniform label noise half-width
  Activation activation = Activation::tanh_act;
  std::uint64_t seed = 0;
};

// f^scale_(B,w)(x) = scale * w' sigma(B' x)
double nn_predict(const Matrix& B, const Vector& w, double scale,
                  Activation act, const Vector& x);

NnEnvironment make_nn_env(int d, int k, int T, double beta,
                          double noise_bound, Activation act,
                          std::uint64_t seed);

// Target offset (Delta*, w*) with Delta* = (sum_i v_i basis_i) * delta_scale
// / beta and ||w*|| = w_scale / beta; v uniform on the unit sphere.
NnTaskParams sample_nn_target(const NnEnvironment& env, double delta_scale,
                              double w_scale, std::uint64_t seed);

// Inputs are sampled uniformly from the unit ball (norm-bounded by 1);
// labels y = f^beta_(B0+Delta, w0+w)(x) + Uniform(-noise_bound, noise_bound).
Dataset sample_nn_dataset(const NnEnvironment& env, const NnTaskParams& offset,
                          int n, int task_id, std::uint64_t seed);

}  // namespace replab
