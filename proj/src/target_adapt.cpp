#include "replab/target_adapt.hpp"

#include <cmath>
#include <stdexcept>

namespace replab {

std::pair<Matrix, Vector> build_antisymmetric_init(const Matrix& B0,
                                                   const Vector& u) {
  const int k = static_cast<int>(B0.cols());
  if (u.size() != k)
    throw std::invalid_argument("build_antisymmetric_init: u size != k");
  if (std::abs(u.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("build_antisymmetric_init: u must be unit norm");
  Matrix A(B0.rows(), 2 * k);
  A << B0, B0;
  Vector w0(2 * k);
  w0.head(k) = u;
  w0.tail(k) = -u;
  return {std::move(A), std::move(w0)};
}

namespace {

Vector default_direction(const Matrix& B0, const AdaptSpec& spec) {
  if (spec.w0_dir.size() > 0) return spec.w0_dir;
  Vector u = Vector::Zero(B0.cols());
  u[0] = 1.0;
  return u;
}

struct PackedView {
  // Packed parameter layout for (Delta, w): [vec(Delta) | w].
  int d, twok;
  Eigen::Map<const Matrix> delta(const Vector& z) const {
    return {z.data(), d, twok};
  }
  Eigen::Map<const Vector> w(const Vector& z) const {
    return {z.data() + static_cast<std::size_t>(d) * twok, twok};
  }
  Eigen::Map<Matrix> delta(Vector& z) const { return {z.data(), d, twok}; }
  Eigen::Map<Vector> w(Vector& z) const {
    return {z.data() + static_cast<std::size_t>(d) * twok, twok};
  }
  std::size_t size() const {
    return static_cast<std::size_t>(d) * twok + twok;
  }
};

FineTuneResult assemble_result(const Matrix& A, const Vector& w0, double beta,
                               PGDTrace trace, const PackedView& view,
                               const AdaptSpec& spec) {
  FineTuneResult res;
  res.Delta_hat = view.delta(trace.best_x);
  res.w_hat = view.w(trace.best_x);
  res.theta_hat = beta * ((A + res.Delta_hat) * (w0 + res.w_hat));
  res.trace = std::move(trace);
  res.spec = spec;
  return res;
}

}  // namespace

double linear_target_loss(const Matrix& A, const Vector& w0,
                          const Dataset& target, double beta,
                          const Matrix& Delta, const Vector& w) {
  Vector theta = beta * ((A + Delta) * (w0 + w));
  return (target.y - target.X * theta).squaredNorm() / (2.0 * target.n);
}

FineTuneResult finetune_linear(const Matrix& B0, const Dataset& target,
                               const AdaptSpec& spec) {
  const int d = static_cast<int>(B0.rows());
  const int k = static_cast<int>(B0.cols());
  if (target.n < 1) throw std::invalid_argument("finetune_linear: empty dataset");
  if (target.X.cols() != d)
    throw std::invalid_argument("finetune_linear: dataset dim != d");

  if (spec.mode == AdaptMode::ignore_rep) {
    FineTuneResult res;
    res.theta_hat = min_norm_least_squares(target.X, target.y);
    res.Delta_hat = Matrix::Zero(0, 0);
    res.w_hat = Vector::Zero(0);
    res.trace.losses = {(target.y - target.X * res.theta_hat).squaredNorm() /
                        (2.0 * target.n)};
    res.trace.best_index = 0;
    res.spec = spec;
    return res;
  }

  const double beta = spec.beta_scale;
  if (beta <= 0) throw std::invalid_argument("finetune_linear: beta_scale <= 0");
  Vector u = default_direction(B0, spec);
  auto [A, w0] = build_antisymmetric_init(B0, u);

  // Sufficient statistics: the loss is a quadratic in theta.
  Matrix Ghat = target.X.transpose() * target.X / target.n;
  Vector bhat = target.X.transpose() * target.y / target.n;
  double yy = target.y.squaredNorm() / target.n;

  const double c1 = spec.c1 / beta;
  const double c2 = (spec.mode == AdaptMode::delta_only ? 0.0 : spec.c2 / beta);
  PackedView view{d, 2 * k};
  BallSpec balls[2] = {
      {0, static_cast<std::size_t>(d) * 2 * k, c1},
      {static_cast<std::size_t>(d) * 2 * k, static_cast<std::size_t>(2 * k), c2}};

  // Closed-form approximate-linearity constants of the predictor
  // z -> beta x'(A + Delta)(w0 + w): per-example Hessian norm beta ||x||,
  // gradient at zero (beta x w0', beta A'x).
  double trG = Ghat.trace();
  double trBGB = (B0.transpose() * Ghat * B0).trace();
  double beta_curv = (spec.mode == AdaptMode::delta_only)
                         ? 0.0
                         : beta * std::sqrt(trG);
  double L_grad = beta * std::sqrt(2.0 * trG + 2.0 * trBGB);

  PGDConfig cfg;
  cfg.t_pgd = spec.t_pgd;
  cfg.radius = std::sqrt(c1 * c1 + c2 * c2);
  cfg.beta_curv = beta_curv;
  cfg.L_grad = L_grad;
  cfg.eta_override = spec.eta_override;
  cfg.record_iterates = spec.record_iterates;

  ScalarFn objective = [&](const Vector& z) {
    Vector theta = (A + view.delta(z)) * (w0 + view.w(z));
    return 0.5 * (beta * beta * theta.dot(Ghat * theta) -
                  2.0 * beta * bhat.dot(theta) + yy);
  };
  VectorFn gradient = [&](const Vector& z) {
    auto Delta = view.delta(z);
    Vector wfull = w0 + view.w(z);
    Vector theta = (A + Delta) * wfull;
    Vector gtheta = beta * beta * (Ghat * theta) - beta * bhat;
    Vector g(view.size());
    view.delta(g).noalias() = gtheta * wfull.transpose();
    view.w(g).noalias() = (A + Delta).transpose() * gtheta;
    return g;
  };
  ProjectorFn projector = [&](Vector& z) { clamp_segment_balls(z, balls); };

  Vector z0 = Vector::Zero(view.size());
  PGDTrace trace = run_pgd(objective, gradient, projector, std::move(z0), cfg);
  FineTuneResult res = assemble_result(A, w0, beta, std::move(trace), view, spec);
  res.beta_curv_used = beta_curv;
  res.L_grad_used = L_grad;
  res.radius_used = cfg.radius;
  res.eta_used = cfg.eta();
  return res;
}

FineTuneResult finetune_logistic(const Matrix& B0, const Dataset& target,
                                 const AdaptSpec& spec) {
  const int d = static_cast<int>(B0.rows());
  const int k = static_cast<int>(B0.cols());
  if (target.n < 1)
    throw std::invalid_argument("finetune_logistic: empty dataset");
  for (int i = 0; i < target.n; ++i)
    if (target.y[i] != 0.0 && target.y[i] != 1.0)
      throw std::invalid_argument("finetune_logistic: labels must be in {0,1}");

  const double beta = spec.beta_scale;
  if (beta <= 0) throw std::invalid_argument("finetune_logistic: beta_scale <= 0");
  Vector u = default_direction(B0, spec);
  auto [A, w0] = build_antisymmetric_init(B0, u);

  const double c1 = spec.c1 / beta;
  const double c2 = spec.c2 / beta;
  PackedView view{d, 2 * k};
  BallSpec balls[2] = {
      {0, static_cast<std::size_t>(d) * 2 * k, c1},
      {static_cast<std::size_t>(d) * 2 * k, static_cast<std::size_t>(2 * k), c2}};

  Matrix Ghat = target.X.transpose() * target.X / target.n;
  double trG = Ghat.trace();
  double trBGB = (B0.transpose() * Ghat * B0).trace();
  double beta_curv = beta * std::sqrt(trG);
  double L_grad = beta * std::sqrt(2.0 * trG + 2.0 * trBGB);

  PGDConfig cfg;
  cfg.t_pgd = spec.t_pgd;
  cfg.radius = std::sqrt(c1 * c1 + c2 * c2);
  cfg.beta_curv = beta_curv;
  cfg.L_grad = L_grad;
  cfg.eta_override = spec.eta_override;
  cfg.record_iterates = spec.record_iterates;

  auto predictions = [&](const Vector& z) -> Vector {
    Vector theta = (A + view.delta(z)) * (w0 + view.w(z));
    return beta * (target.X * theta);
  };
  ScalarFn objective = [&](const Vector& z) {
    Vector f = predictions(z);
    double acc = 0.0;
    for (int i = 0; i < target.n; ++i) {
      // log(1+e^f) - y f, computed stably.
      double fi = f[i];
      double lse = fi > 0 ? fi + std::log1p(std::exp(-fi))
                          : std::log1p(std::exp(fi));
      acc += lse - target.y[i] * fi;
    }
    return acc / target.n;
  };
  VectorFn gradient = [&](const Vector& z) {
    Vector f = predictions(z);
    Vector resid(target.n);
    for (int i = 0; i < target.n; ++i)
      resid[i] = 1.0 / (1.0 + std::exp(-f[i])) - target.y[i];
    Vector gtheta = beta * (target.X.transpose() * resid) / target.n;
    auto Delta = view.delta(z);
    Vector wfull = w0 + view.w(z);
    Vector g(view.size());
    view.delta(g).noalias() = gtheta * wfull.transpose();
    view.w(g).noalias() = (A + Delta).transpose() * gtheta;
    return g;
  };
  ProjectorFn projector = [&](Vector& z) { clamp_segment_balls(z, balls); };

  Vector z0 = Vector::Zero(view.size());
  PGDTrace trace = run_pgd(objective, gradient, projector, std::move(z0), cfg);
  FineTuneResult res = assemble_result(A, w0, beta, std::move(trace), view, spec);
  res.beta_curv_used = beta_curv;
  res.L_grad_used = L_grad;
  res.radius_used = cfg.radius;
  res.eta_used = cfg.eta();
  return res;
}

// ---------------------------------------------------------------------------
// Two-layer networks
// ---------------------------------------------------------------------------

Vector nn_phi(const Matrix& B0, Activation act, const Vector& x) {
  Vector z = B0.transpose() * x;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = act_value(act, z[i]);
  return z;
}

Matrix nn_psi(const Matrix& B0, const Vector& w0, Activation act,
              const Vector& x) {
  Vector z = B0.transpose() * x;
  Vector s(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    s[i] = w0[i] * act_deriv(act, z[i]);
  return x * s.transpose();
}

double nn_remainder(const Matrix& B0, const Vector& w0, Activation act,
                    const Matrix& Delta, const Vector& w, const Vector& x) {
  double full = nn_predict(B0 + Delta, w0 + w, 1.0, act, x);
  double lin = w.dot(nn_phi(B0, act, x)) +
               nn_psi(B0, w0, act, x).cwiseProduct(Delta).sum();
  return full - lin;
}

NnFineTuneResult finetune_nn(const Matrix& B0, const Vector& w0,
                             Activation act, const Dataset& target,
                             const NnAdaptSpec& spec) {
  const int d = static_cast<int>(B0.rows());
  const int twok = static_cast<int>(B0.cols());
  if (w0.size() != twok)
    throw std::invalid_argument("finetune_nn: w0 size != B0 cols");
  // Antisymmetric initialization: [A, A] with w0 = [s, -s].
  const int k = twok / 2;
  if ((B0.leftCols(k) - B0.rightCols(k)).norm() > 1e-10 ||
      (w0.head(k) + w0.tail(k)).norm() > 1e-10)
    throw std::invalid_argument("finetune_nn: (B0, w0) not antisymmetric");
  const double gamma = spec.gamma_scale;
  if (gamma <= 0) throw std::invalid_argument("finetune_nn: gamma <= 0");

  PackedView view{d, twok};
  const double radius = std::sqrt(spec.kappa) / gamma;
  BallSpec ball[1] = {{0, view.size(), radius}};

  // Gradient scale at the init is exact (feature norms); the curvature
  // constant uses the smoothness bound of the activation.
  double L2 = 0.0, b2 = 0.0;
  const double mu = act_smoothness(act);
  const double Lact = act_lipschitz(act);
  for (int i = 0; i < target.n; ++i) {
    Vector x = target.X.row(i);
    double xn = x.norm();
    L2 += gamma * gamma *
          (nn_phi(B0, act, x).squaredNorm() +
           nn_psi(B0, w0, act, x).squaredNorm());
    double h = gamma * xn * (mu * (1.0 + radius) * xn + Lact);
    b2 += h * h;
  }
  double L_grad = std::sqrt(L2 / target.n);
  double beta_curv = std::sqrt(b2 / target.n);

  PGDConfig cfg;
  cfg.t_pgd = spec.t_pgd;
  cfg.radius = radius;
  cfg.beta_curv = beta_curv;
  cfg.L_grad = L_grad;
  cfg.eta_override = spec.eta_override;
  cfg.record_iterates = spec.record_iterates;

  ScalarFn objective = [&](const Vector& z) {
    Matrix B = B0 + view.delta(z);
    Vector w = w0 + view.w(z);
    double acc = 0.0;
    for (int i = 0; i < target.n; ++i) {
      double f = nn_predict(B, w, gamma, act, target.X.row(i));
      double r = f - target.y[i];
      acc += 0.5 * r * r;
    }
    return acc / target.n;
  };
  VectorFn gradient = [&](const Vector& z) {
    Matrix B = B0 + view.delta(z);
    Vector w = w0 + view.w(z);
    Vector g = Vector::Zero(view.size());
    auto gDelta = view.delta(g);
    auto gw = view.w(g);
    for (int i = 0; i < target.n; ++i) {
      Vector x = target.X.row(i);
      Vector zpre = B.transpose() * x;
      Vector sig(twok), dsig(twok);
      for (int j = 0; j < twok; ++j) {
        sig[j] = act_value(act, zpre[j]);
        dsig[j] = act_deriv(act, zpre[j]);
      }
      double f = gamma * w.dot(sig);
      double r = (f - target.y[i]) * gamma / target.n;
      gw.noalias() += r * sig;
      gDelta.noalias() += r * (x * (w.cwiseProduct(dsig)).transpose());
    }
    return g;
  };
  ProjectorFn projector = [&](Vector& z) { clamp_segment_balls(z, ball); };

  Vector z0 = Vector::Zero(view.size());
  PGDTrace trace = run_pgd(objective, gradient, projector, std::move(z0), cfg);
  NnFineTuneResult res;
  res.Delta_hat = view.delta(trace.best_x);
  res.w_hat = view.w(trace.best_x);
  res.trace = std::move(trace);
  res.radius_used = radius;
  res.eta_used = cfg.eta();
  return res;
}

}  // namespace replab
