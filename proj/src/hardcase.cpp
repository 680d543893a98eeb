#include "replab/hardcase.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "replab/lbfgs.hpp"

namespace replab {

HardCaseSpec HardCaseSpec::corollary_preset(int d, int k, Family family) {
  HardCaseSpec spec;
  spec.d = d;
  spec.k = k;
  spec.eps = static_cast<double>(k) / d;
  spec.family = family;
  spec.Astar = Matrix::Zero(d, k);
  spec.Astar.topRows(k).setIdentity();
  return spec;
}

void validate_hard_spec(const HardCaseSpec& spec) {
  if (spec.d <= spec.k || spec.k < 1)
    throw std::invalid_argument("HardCaseSpec: need d > k >= 1");
  if (spec.family == Family::hardcase_relu && 2 * spec.k >= spec.d)
    throw std::invalid_argument("HardCaseSpec: relu family needs 2k < d");
  if (!(spec.eps > 0 && spec.eps < 1))
    throw std::invalid_argument("HardCaseSpec: eps must lie in (0,1)");
  if (spec.Astar.rows() != spec.d || spec.Astar.cols() != spec.k)
    throw std::invalid_argument("HardCaseSpec: Astar must be d x k");
  Matrix gram = spec.Astar.transpose() * spec.Astar;
  if ((gram - Matrix::Identity(spec.k, spec.k)).norm() > 1e-10)
    throw std::invalid_argument("HardCaseSpec: Astar not orthonormal");
  if (spec.Astar.bottomRows(spec.k).norm() > 0)
    throw std::invalid_argument("HardCaseSpec: col(Astar) must lie in E*");
}

Matrix block_covariance(int d, int k, double eps) {
  Matrix S = Matrix::Zero(d, d);
  for (int i = 0; i < d - k; ++i) S(i, i) = eps;
  for (int i = d - k; i < d; ++i) S(i, i) = 1.0;
  return S;
}

TaskEnvironment make_hard_env(const HardCaseSpec& spec, int T,
                              double noise_sigma, std::uint64_t seed) {
  validate_hard_spec(spec);
  const double scale = 1.0 / std::sqrt(2.0 * spec.eps);

  TaskEnvironment env;
  env.d = spec.d;
  env.k = spec.k;
  env.T = T;
  env.Sigma = block_covariance(spec.d, spec.k, spec.eps);
  env.Bstar = spec.Astar;
  env.delta0 = 1.0;  // target residuals are unit vectors in E_k
  env.noise_sigma = noise_sigma;
  env.family = spec.family;
  env.seed = seed;
  env.eps = spec.eps;
  env.target_w_radius = scale;
  env.w_norm_lo = scale * (1.0 - 1e-9);
  env.w_norm_hi = scale * (1.0 + 1e-9);

  for (int attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, 0x4A8D, attempt));
    env.tasks.clear();
    env.tasks.reserve(T);
    for (int t = 0; t < T; ++t) {
      Vector v = rng.sphere(spec.k, 1.0);
      Vector delta_coord = rng.sphere(spec.k, 1.0);
      TaskParams p;
      p.w = scale * v;
      // Rank-one Delta with Delta w = delta, supported on E_k.
      Vector delta = Vector::Zero(spec.d);
      delta.tail(spec.k) = delta_coord;
      p.Delta = delta * (p.w.transpose() / p.w.squaredNorm());
      env.tasks.push_back(std::move(p));
    }
    try {
      validate_environment(env);
      return env;
    } catch (const std::runtime_error&) {
      if (attempt >= 20)
        throw std::runtime_error("make_hard_env: degenerate task draw");
    }
  }
}

TargetTask sample_hard_task(const HardCaseSpec& spec, std::uint64_t seed) {
  validate_hard_spec(spec);
  Rng rng(seed);
  Vector v = rng.sphere(spec.k, 1.0);
  Vector delta_coord = rng.sphere(spec.k, 1.0);
  TargetTask task;
  task.w_star = v / std::sqrt(2.0 * spec.eps);
  task.delta_star = Vector::Zero(spec.d);
  task.delta_star.tail(spec.k) = delta_coord;
  task.theta_star = spec.Astar * task.w_star + task.delta_star;
  return task;
}

ReluLift lift_to_relu(const HardCaseSpec& spec, const Vector& v,
                      const Vector& delta) {
  if (2 * spec.k >= spec.d)
    throw std::invalid_argument("lift_to_relu: need 2k < d");
  if (v.size() != spec.k || delta.size() != spec.d)
    throw std::invalid_argument("lift_to_relu: bad dimensions");
  if (std::abs(v.norm() - 1.0) > 1e-8 || std::abs(delta.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("lift_to_relu: v, delta must be unit norm");
  const int k = spec.k;
  ReluLift lift;
  lift.B.resize(spec.d, 2 * k);
  lift.B << spec.Astar, -spec.Astar;
  lift.w.resize(2 * k);
  const double scale = 1.0 / std::sqrt(2.0 * spec.eps);
  lift.w.head(k) = scale * v;
  lift.w.tail(k) = -scale * v;
  lift.Delta = delta * Vector::Ones(2 * k).transpose() / k;
  return lift;
}

double relu_lift_predict(const ReluLift& lift, const Vector& x) {
  Vector z = lift.B.transpose() * x;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    acc += lift.w[j] * std::max(z[j], 0.0);              // w' sigma(B'x)
    if (z[j] > 0.0) acc += lift.Delta.col(j).dot(x);     // <x sigma'(x'B), Delta>
  }
  return acc;
}

double frozenrep_population_objective(const Matrix& Sigma, const Matrix& M,
                                      const Matrix& B, Matrix* grad) {
  // F(B) = (1/2)[tr(S M) - tr((B'SB)^{-1} B'S M S B)]; the inner head solve
  // is exact, so only B remains.
  Matrix SB = Sigma * B;
  Matrix C = B.transpose() * SB;
  Matrix SMSB = Sigma * (M * SB);
  Matrix N = B.transpose() * SMSB;
  Eigen::LDLT<Matrix> ldlt(C);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("frozenrep_population_objective: singular B'SB");
  Matrix CiN = ldlt.solve(N);
  double value = 0.5 * ((Sigma * M).trace() - CiN.trace());
  if (grad) {
    Matrix CiNCi = ldlt.solve(CiN.transpose()).transpose();
    grad->noalias() = SB * CiNCi - Sigma * (M * (SB * ldlt.solve(
                          Matrix::Identity(C.rows(), C.cols()))));
    // grad = S B C^{-1} N C^{-1} - S M S B C^{-1}
  }
  return value;
}

Matrix frozenrep_population_limit(const HardCaseSpec& spec, int n_mc,
                                  std::uint64_t seed,
                                  const PopulationLimitOptions& options) {
  validate_hard_spec(spec);
  if (n_mc < 1000)
    throw std::invalid_argument("frozenrep_population_limit: n_mc < 1e3");
  Matrix Sigma = block_covariance(spec.d, spec.k, spec.eps);

  Matrix M = Matrix::Zero(spec.d, spec.d);
  for (int j = 0; j < n_mc; ++j) {
    TargetTask task = sample_hard_task(spec, derive_seed(seed, 0x3C, j));
    M.noalias() += task.theta_star * task.theta_star.transpose();
  }
  M /= n_mc;

  const int d = spec.d, k = spec.k;
  ObjectiveFn fn = [&](const Vector& x, Vector& g) {
    Eigen::Map<const Matrix> B(x.data(), d, k);
    Matrix gB(d, k);
    double val = frozenrep_population_objective(Sigma, M, B, &gB);
    Eigen::Map<Matrix>(g.data(), d, k) = gB;
    return val;
  };

  LbfgsOptions lopt;
  lopt.max_iters = options.max_iters;
  lopt.grad_tol = options.grad_tol;

  double best = std::numeric_limits<double>::infinity();
  Vector best_x;
  bool any_converged = false;
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(seed, 0x11F, r));
    Vector x0(static_cast<Eigen::Index>(d) * k);
    Eigen::Map<Matrix>(x0.data(), d, k) =
        rng.gaussian_matrix(d, k) / std::sqrt(static_cast<double>(d));
    LbfgsResult res = lbfgs_minimize(fn, std::move(x0), lopt);
    any_converged = any_converged || res.converged;
    if (res.f < best) {
      best = res.f;
      best_x = std::move(res.x);
    }
  }
  if (!any_converged)
    throw std::runtime_error(
        "frozenrep_population_limit: optimizer did not converge");
  return orthonormalize(Eigen::Map<const Matrix>(best_x.data(), d, k));
}

std::pair<TargetTask, double> worst_case_target(
    const Matrix& rep, const TaskEnvironment& hard_env,
    const MethodRunner& method_runner, const WorstCaseOptions& options) {
  if (options.candidates < 1)
    throw std::invalid_argument("worst_case_target: need M >= 1");
  if (options.n_T < 1)
    throw std::invalid_argument("worst_case_target: need n_T >= 1");
  HardCaseSpec spec{hard_env.d, hard_env.k, hard_env.eps, hard_env.Bstar,
                    hard_env.family};
  double worst = -std::numeric_limits<double>::infinity();
  TargetTask worst_task;
  for (int m = 0; m < options.candidates; ++m) {
    TargetTask task =
        sample_hard_task(spec, derive_seed(options.seed, 0xCA4D, m));
    double acc = 0.0;
    for (int r = 0; r < options.inner_reps; ++r) {
      Dataset ds = sample_dataset(hard_env, task.theta_star, options.n_T, -1,
                                  derive_seed(options.seed, 0xDA, m, r));
      acc += method_runner(rep, task, ds);
    }
    acc /= options.inner_reps;
    if (acc > worst) {
      worst = acc;
      worst_task = std::move(task);
    }
  }
  return {std::move(worst_task), worst};
}

}  // namespace replab
