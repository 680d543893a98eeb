#include "replab/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace replab {

std::string family_name(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::logistic: return "logistic";
    case Family::nn: return "nn";
    case Family::hardcase_linear: return "hardcase-linear";
    case Family::hardcase_relu: return "hardcase-relu";
  }
  throw std::logic_error("family_name: unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "linear") return Family::linear;
  if (name == "logistic") return Family::logistic;
  if (name == "nn") return Family::nn;
  if (name == "hardcase-linear") return Family::hardcase_linear;
  if (name == "hardcase-relu") return Family::hardcase_relu;
  throw std::invalid_argument("unknown family: " + name);
}

SigmaSpec SigmaSpec::Diagonal(Vector d) {
  SigmaSpec s;
  s.kind = Kind::diagonal;
  s.diag = std::move(d);
  return s;
}

SigmaSpec SigmaSpec::Dense(Matrix m) {
  SigmaSpec s;
  s.kind = Kind::dense;
  s.dense = std::move(m);
  return s;
}

Matrix SigmaSpec::materialize(int d) const {
  switch (kind) {
    case Kind::identity:
      return Matrix::Identity(d, d);
    case Kind::diagonal:
      if (diag.size() != d)
        throw std::invalid_argument("SigmaSpec: diagonal size != d");
      if ((diag.array() <= 0.0).any())
        throw std::invalid_argument("SigmaSpec: diagonal must be positive");
      return Matrix(diag.asDiagonal());
    case Kind::dense: {
      if (dense.rows() != d || dense.cols() != d)
        throw std::invalid_argument("SigmaSpec: dense size != d x d");
      if ((dense - dense.transpose()).norm() > 1e-10)
        throw std::invalid_argument("SigmaSpec: dense matrix not symmetric");
      Eigen::LLT<Matrix> llt(dense);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument("SigmaSpec: dense matrix not PD");
      return dense;
    }
  }
  throw std::logic_error("SigmaSpec: unknown kind");
}

Vector TaskEnvironment::task_theta(int t) const {
  return (Bstar + tasks.at(t).Delta) * tasks.at(t).w;
}

Vector TaskEnvironment::task_delta(int t) const {
  return tasks.at(t).Delta * tasks.at(t).w;
}

Matrix TaskEnvironment::task_weight_matrix() const {
  Matrix W(k, T);
  for (int t = 0; t < T; ++t) W.col(t) = tasks[t].w;
  return W;
}

namespace {

// Re-expresses one task under the convention Bstar' Sigma delta = 0 while
// keeping theta fixed, by moving the span(Bstar) component of delta into w.
TaskParams normalize_task(const Matrix& Bstar, const Matrix& proj,
                          const TaskParams& p) {
  Vector theta = (Bstar + p.Delta) * p.w;
  Vector w_new = proj * theta;
  Vector delta_new = theta - Bstar * w_new;
  double wn2 = w_new.squaredNorm();
  if (wn2 < 1e-300)
    throw std::runtime_error("normalize_convention: w collapsed to zero");
  Matrix Delta_new =
      p.Delta + (delta_new - p.Delta * w_new) * (w_new.transpose() / wn2);
  return {std::move(Delta_new), std::move(w_new)};
}

}  // namespace

TaskEnvironment normalize_convention(const TaskEnvironment& env) {
  TaskEnvironment out = env;
  // proj maps theta to the coefficients of its Sigma-oblique span(Bstar)
  // component: w = (B'SB)^{-1} B'S theta.
  Matrix BSB = env.Bstar.transpose() * env.Sigma * env.Bstar;
  Matrix proj = BSB.ldlt().solve(env.Bstar.transpose() * env.Sigma);
  for (int t = 0; t < env.T; ++t)
    out.tasks[t] = normalize_task(env.Bstar, proj, env.tasks[t]);
  return out;
}

void validate_environment(const TaskEnvironment& env) {
  if (env.d <= 0 || env.k <= 0 || env.T <= 0)
    throw std::runtime_error("environment: nonpositive dimensions");
  if (static_cast<int>(env.tasks.size()) != env.T)
    throw std::runtime_error("environment: task count mismatch");
  Matrix gram = env.Bstar.transpose() * env.Bstar;
  if ((gram - Matrix::Identity(env.k, env.k)).norm() > 1e-10)
    throw std::runtime_error("environment: Bstar not orthonormal");
  Eigen::LLT<Matrix> llt(env.Sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("environment: Sigma not positive definite");
  for (int t = 0; t < env.T; ++t) {
    const TaskParams& p = env.tasks[t];
    if (p.Delta.norm() > env.delta0 + 1e-9)
      throw std::runtime_error("environment: ||Delta_t|| exceeds delta0");
    double wn = p.w.norm();
    if (wn < env.w_norm_lo || wn > env.w_norm_hi)
      throw std::runtime_error("environment: ||w_t|| outside [cl, cu]");
    Vector viol = env.Bstar.transpose() * (env.Sigma * env.task_delta(t));
    if (viol.norm() > 1e-10 * std::max(1.0, env.task_theta(t).norm()))
      throw std::runtime_error("environment: convention B'S delta != 0");
  }
  double sk = kth_singular_value(env.task_weight_matrix(), env.k);
  if (sk * sk < env.diversity_c * env.T / env.k)
    throw std::runtime_error("environment: diversity bound violated");
}

TaskEnvironment make_linear_env(int d, int k, int T, double delta0,
                                double noise_sigma, const SigmaSpec& sigma,
                                std::uint64_t seed,
                                const EnvOptions& options) {
  if (d <= k || k < 1) throw std::invalid_argument("make_linear_env: need d > k >= 1");
  if (T < 1) throw std::invalid_argument("make_linear_env: need T >= 1");
  if (delta0 < 0) throw std::invalid_argument("make_linear_env: delta0 < 0");
  if (options.family != Family::linear && options.family != Family::logistic)
    throw std::invalid_argument("make_linear_env: family must be linear or logistic");

  TaskEnvironment env;
  env.d = d;
  env.k = k;
  env.T = T;
  env.delta0 = delta0;
  env.noise_sigma = noise_sigma;
  env.family = options.family;
  env.seed = seed;
  env.w_norm_lo = options.w_norm_lo;
  env.w_norm_hi = options.w_norm_hi;
  env.diversity_c = options.diversity_c;
  env.target_w_radius = options.target_w_radius;
  env.Sigma = sigma.materialize(d);

  Rng rng(derive_seed(seed, 0xE17));
  env.Bstar = orthonormalize(rng.gaussian_matrix(d, k));

  for (int attempt = 0;; ++attempt) {
    Rng task_rng(derive_seed(seed, 0x7A5C, static_cast<std::uint64_t>(attempt)));
    env.tasks.clear();
    env.tasks.reserve(T);
    for (int t = 0; t < T; ++t) {
      TaskParams p;
      p.w = task_rng.sphere(k, 1.0);
      if (delta0 > 0) {
        Matrix G = task_rng.gaussian_matrix(d, k);
        p.Delta = G * (delta0 / G.norm());
      } else {
        p.Delta = Matrix::Zero(d, k);
      }
      env.tasks.push_back(std::move(p));
    }
    env = normalize_convention(env);
    // Renormalization can push ||Delta|| slightly past the budget; shrink
    // back onto it (this redefines theta_t, which is fine at construction).
    for (auto& p : env.tasks) {
      double nrm = p.Delta.norm();
      if (nrm > delta0 && nrm > 0)
        p.Delta *= (delta0 / nrm) * (1.0 - 1e-12);
    }
    try {
      validate_environment(env);
      return env;
    } catch (const std::runtime_error&) {
      if (attempt + 1 >= options.max_retries)
        throw std::runtime_error(
            "make_linear_env: degenerate task draw (diversity/validity not "
            "met after retries)");
    }
  }
}

Dataset sample_dataset(const TaskEnvironment& env, const Vector& theta, int n,
                       int task_id, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n < 1");
  Rng rng(seed);
  Eigen::LLT<Matrix> llt(env.Sigma);
  Matrix L = llt.matrixL();
  Dataset ds;
  ds.X.resize(n, env.d);
  ds.y.resize(n);
  ds.n = n;
  ds.task_id = task_id;
  ds.seed = seed;
  for (int i = 0; i < n; ++i) {
    Vector x = L * rng.gaussian_vector(env.d);
    ds.X.row(i) = x.transpose();
    double mean = x.dot(theta);
    if (env.family == Family::logistic) {
      double p = 1.0 / (1.0 + std::exp(-mean));
      ds.y[i] = rng.uniform() < p ? 1.0 : 0.0;
    } else {
      ds.y[i] = mean + env.noise_sigma * rng.normal();
    }
  }
  return ds;
}

std::vector<Dataset> sample_source_datasets(const TaskEnvironment& env,
                                            int n_S, std::uint64_t seed) {
  if (n_S < 1) throw std::invalid_argument("sample_source_datasets: n_S < 1");
  std::vector<Dataset> out;
  out.reserve(env.T);
  for (int t = 0; t < env.T; ++t) {
    out.push_back(sample_dataset(env, env.task_theta(t), n_S, t,
                                 derive_seed(seed, 0xDA7A, t)));
  }
  return out;
}

TargetTask sample_target_task(const TaskEnvironment& env, std::uint64_t seed) {
  Rng rng(seed);
  TargetTask task;
  task.w_star = rng.sphere(env.k, env.target_w_radius);
  if (env.delta0 > 0) {
    Matrix basis;
    if (env.family == Family::hardcase_linear ||
        env.family == Family::hardcase_relu) {
      basis = Matrix::Zero(env.d, env.k);  // E_k: last k coordinates
      basis.bottomRows(env.k).setIdentity();
    } else {
      basis = null_space_basis(env.Bstar.transpose() * env.Sigma);
    }
    Vector coef = rng.sphere(static_cast<int>(basis.cols()), env.delta0);
    task.delta_star = basis * coef;
  } else {
    task.delta_star = Vector::Zero(env.d);
  }
  task.theta_star = env.Bstar * task.w_star + task.delta_star;
  return task;
}

// ---------------------------------------------------------------------------
// Two-layer networks
// ---------------------------------------------------------------------------

double act_value(Activation a, double t) {
  return a == Activation::relu ? std::max(t, 0.0) : std::tanh(t);
}

double act_deriv(Activation a, double t) {
  if (a == Activation::relu) return t > 0.0 ? 1.0 : 0.0;
  double th = std::tanh(t);
  return 1.0 - th * th;
}

double act_lipschitz(Activation) { return 1.0; }

double act_smoothness(Activation a) {
  // max |tanh''| = 4/(3 sqrt(3)); ReLU is piecewise linear.
  return a == Activation::relu ? 0.0 : 0.7698003589195011;
}

double nn_predict(const Matrix& B, const Vector& w, double scale,
                  Activation act, const Vector& x) {
  Vector z = B.transpose() * x;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    acc += w[i] * act_value(act, z[i]);
  return scale * acc;
}

NnEnvironment make_nn_env(int d, int k, int T, double beta, double noise_bound,
                          Activation act, std::uint64_t seed) {
  if (d <= 2 * k || k < 1)
    throw std::invalid_argument("make_nn_env: need d > 2k >= 2");
  if (beta <= 0) throw std::invalid_argument("make_nn_env: beta <= 0");
  NnEnvironment env;
  env.d = d;
  env.k = k;
  env.T = T;
  env.beta = beta;
  env.noise_bound = noise_bound;
  env.activation = act;
  env.seed = seed;

  Rng rng(derive_seed(seed, 0x22AA));
  Matrix A = rng.gaussian_matrix(d, k);
  for (int j = 0; j < k; ++j) A.col(j).normalize();
  env.B0.resize(d, 2 * k);
  env.B0 << A, A;
  env.w0.resize(2 * k);
  env.w0.head(k).setOnes();
  env.w0.tail(k).setConstant(-1.0);

  // Orthonormal basis (Frobenius inner product) for the Delta directions.
  env.basis.reserve(k);
  for (int i = 0; i < k; ++i) {
    Matrix Gi = rng.gaussian_matrix(d, 2 * k);
    for (const Matrix& prev : env.basis)
      Gi -= prev * (prev.cwiseProduct(Gi)).sum();
    env.basis.push_back(Gi / Gi.norm());
  }

  env.tasks.reserve(T);
  for (int t = 0; t < T; ++t) {
    Vector delta_coef = rng.sphere(k, 1.0);
    NnTaskParams p;
    p.Delta = Matrix::Zero(d, 2 * k);
    for (int i = 0; i < k; ++i) p.Delta += delta_coef[i] * env.basis[i];
    p.Delta /= beta;
    p.w = rng.sphere(2 * k, 1.0) / beta;
    env.tasks.push_back(std::move(p));
  }
  return env;
}

NnTaskParams sample_nn_target(const NnEnvironment& env, double delta_scale,
                              double w_scale, std::uint64_t seed) {
  Rng rng(seed);
  NnTaskParams p;
  Vector v = rng.sphere(env.k, 1.0);
  p.Delta = Matrix::Zero(env.d, 2 * env.k);
  for (int i = 0; i < env.k; ++i) p.Delta += v[i] * env.basis[i];
  p.Delta *= delta_scale / env.beta;
  p.w = rng.sphere(2 * env.k, w_scale / env.beta);
  return p;
}

Dataset sample_nn_dataset(const NnEnvironment& env, const NnTaskParams& offset,
                          int n, int task_id, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_nn_dataset: n < 1");
  Rng rng(seed);
  Matrix B = env.B0 + offset.Delta;
  Vector w = env.w0 + offset.w;
  Dataset ds;
  ds.X.resize(n, env.d);
  ds.y.resize(n);
  ds.n = n;
  ds.task_id = task_id;
  ds.seed = seed;
  for (int i = 0; i < n; ++i) {
    Vector x = rng.ball(env.d, 1.0);
    ds.X.row(i) = x.transpose();
    double noise = rng.uniform(-env.noise_bound, env.noise_bound);
    ds.y[i] = nn_predict(B, w, env.beta, env.activation, x) + noise;
  }
  return ds;
}

}  // namespace replab
