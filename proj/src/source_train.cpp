#include "replab/source_train.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace replab {

TaskStats compute_task_stats(const Dataset& ds) {
  TaskStats s;
  s.G.noalias() = ds.X.transpose() * ds.X;
  s.b.noalias() = ds.X.transpose() * ds.y;
  s.yy = ds.y.squaredNorm();
  s.n = ds.n;
  return s;
}

std::vector<TaskStats> compute_task_stats(std::span<const Dataset> datasets) {
  std::vector<TaskStats> out;
  out.reserve(datasets.size());
  for (const Dataset& ds : datasets) out.push_back(compute_task_stats(ds));
  return out;
}

namespace {

// Packed layout: [vec(B)] then per task [vec(Delta_t)] (adaptrep only)
// followed by [w_t]. Eigen is column-major, so vec() is column-stacked.
struct Layout {
  int d, k, T;
  bool with_delta;
  std::size_t size() const {
    std::size_t per_task = (with_delta ? static_cast<std::size_t>(d) * k : 0) + k;
    return static_cast<std::size_t>(d) * k + per_task * T;
  }
  std::size_t b_off() const { return 0; }
  std::size_t task_off(int t) const {
    std::size_t per_task = (with_delta ? static_cast<std::size_t>(d) * k : 0) + k;
    return static_cast<std::size_t>(d) * k + per_task * t;
  }
  std::size_t w_off(int t) const {
    return task_off(t) + (with_delta ? static_cast<std::size_t>(d) * k : 0);
  }
};

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutVecMap = Eigen::Map<Vector>;

}  // namespace

std::size_t source_param_size(int d, int k, int T, SourceObjective objective) {
  return Layout{d, k, T, objective == SourceObjective::adaptrep}.size();
}

Vector pack_source_params(const Matrix& B, const std::vector<TaskParams>& tasks,
                          SourceObjective objective) {
  Layout lay{static_cast<int>(B.rows()), static_cast<int>(B.cols()),
             static_cast<int>(tasks.size()),
             objective == SourceObjective::adaptrep};
  Vector x(lay.size());
  MutMap(x.data() + lay.b_off(), lay.d, lay.k) = B;
  for (int t = 0; t < lay.T; ++t) {
    if (lay.with_delta)
      MutMap(x.data() + lay.task_off(t), lay.d, lay.k) = tasks[t].Delta;
    MutVecMap(x.data() + lay.w_off(t), lay.k) = tasks[t].w;
  }
  return x;
}

double source_objective(std::span<const TaskStats> stats, int d, int k,
                        SourceObjective objective, double lambda, double gamma,
                        double balance_weight, const Vector& x, Vector* grad) {
  const int T = static_cast<int>(stats.size());
  const Layout lay{d, k, T, objective == SourceObjective::adaptrep};
  const double n_S = static_cast<double>(stats[0].n);
  const double fit_scale = 1.0 / (2.0 * n_S * T);

  ConstMap B(x.data() + lay.b_off(), d, k);
  if (grad) grad->setZero();

  double fit = 0.0, reg = 0.0;
  Matrix WW = Matrix::Zero(k, k);
  Matrix theta_mat(d, 1);
  Vector g_t(d);

  for (int t = 0; t < T; ++t) {
    ConstVecMap w(x.data() + lay.w_off(t), k);
    WW.noalias() += w * w.transpose();

    Vector theta;
    if (lay.with_delta) {
      ConstMap Delta(x.data() + lay.task_off(t), d, k);
      theta.noalias() = (B + Delta) * w;
    } else {
      theta.noalias() = B * w;
    }
    const TaskStats& s = stats[t];
    Vector Gtheta = s.G * theta;
    fit += fit_scale * (theta.dot(Gtheta) - 2.0 * s.b.dot(theta) + s.yy);
    if (lay.with_delta) {
      ConstMap Delta(x.data() + lay.task_off(t), d, k);
      reg += (0.5 * lambda * Delta.squaredNorm() +
              0.5 * gamma * w.squaredNorm()) /
             T;
    }

    if (grad) {
      g_t = (2.0 * fit_scale) * (Gtheta - s.b);
      MutVecMap gw(grad->data() + lay.w_off(t), k);
      MutMap gB(grad->data() + lay.b_off(), d, k);
      if (lay.with_delta) {
        ConstMap Delta(x.data() + lay.task_off(t), d, k);
        MutMap gDelta(grad->data() + lay.task_off(t), d, k);
        gDelta.noalias() = g_t * w.transpose();
        gDelta += (lambda / T) * Delta;
        gw.noalias() = (B + Delta).transpose() * g_t;
        gw += (gamma / T) * w;
      } else {
        gw.noalias() = B.transpose() * g_t;
      }
      gB.noalias() += g_t * w.transpose();
    }
  }

  Matrix E = B.transpose() * B - WW;
  double balance = balance_weight * E.squaredNorm();
  if (grad) {
    MutMap gB(grad->data() + lay.b_off(), d, k);
    gB.noalias() += 4.0 * balance_weight * (B * E);
    for (int t = 0; t < T; ++t) {
      ConstVecMap w(x.data() + lay.w_off(t), k);
      MutVecMap gw(grad->data() + lay.w_off(t), k);
      gw.noalias() -= 4.0 * balance_weight * (E * w);
    }
  }
  return fit + reg + balance;
}

double source_data_loss(std::span<const TaskStats> stats, int d, int k,
                        SourceObjective objective, const Vector& x) {
  const int T = static_cast<int>(stats.size());
  const Layout lay{d, k, T, objective == SourceObjective::adaptrep};
  const double fit_scale = 1.0 / (2.0 * static_cast<double>(stats[0].n) * T);
  ConstMap B(x.data() + lay.b_off(), d, k);
  double fit = 0.0;
  for (int t = 0; t < T; ++t) {
    ConstVecMap w(x.data() + lay.w_off(t), k);
    Vector theta;
    if (lay.with_delta) {
      ConstMap Delta(x.data() + lay.task_off(t), d, k);
      theta.noalias() = (B + Delta) * w;
    } else {
      theta.noalias() = B * w;
    }
    const TaskStats& s = stats[t];
    fit += fit_scale * (theta.dot(s.G * theta) - 2.0 * s.b.dot(theta) + s.yy);
  }
  return fit;
}

SourceSolution train_source(std::span<const TaskStats> stats, int d, int k,
                            SourceObjective objective, double lambda,
                            double gamma, const SourceOptions& options) {
  if (stats.empty()) throw std::invalid_argument("train_source: no tasks");
  for (const TaskStats& s : stats) {
    if (s.G.rows() != d) throw std::invalid_argument("train_source: stats dim != d");
    if (s.n != stats[0].n)
      throw std::invalid_argument("train_source: tasks must share n_S");
  }
  if (objective == SourceObjective::adaptrep && (lambda < 0 || gamma < 0))
    throw std::invalid_argument("train_source: lambda, gamma must be >= 0");

  const int T = static_cast<int>(stats.size());
  const Layout lay{d, k, T, objective == SourceObjective::adaptrep};

  LbfgsOptions lopt;
  lopt.max_iters = options.max_iters;
  lopt.grad_tol = options.grad_tol;
  lopt.memory = options.lbfgs_memory;

  ObjectiveFn fn = [&](const Vector& x, Vector& grad) {
    return source_objective(stats, d, k, objective, lambda, gamma,
                            options.balance_weight, x, &grad);
  };

  SourceSolution sol;
  sol.objective_tag = objective;
  sol.train_loss = std::numeric_limits<double>::infinity();

  const int total = options.restarts + static_cast<int>(options.extra_inits.size());
  for (int r = 0; r < total; ++r) {
    Vector x0;
    std::uint64_t rseed = derive_seed(options.seed, 0x5EED, r);
    if (r < options.restarts) {
      Rng rng(rseed);
      x0.resize(lay.size());
      MutMap B0(x0.data() + lay.b_off(), d, k);
      B0 = rng.gaussian_matrix(d, k) / std::sqrt(static_cast<double>(d));
      for (int t = 0; t < T; ++t) {
        if (lay.with_delta)
          MutMap(x0.data() + lay.task_off(t), d, k).setZero();
        MutVecMap(x0.data() + lay.w_off(t), k) =
            rng.gaussian_vector(k) / std::sqrt(static_cast<double>(k));
      }
    } else {
      x0 = options.extra_inits[r - options.restarts];
      if (x0.size() != static_cast<Eigen::Index>(lay.size()))
        throw std::invalid_argument("train_source: extra init has wrong size");
    }

    LbfgsResult lr = lbfgs_minimize(fn, std::move(x0), lopt);

    SourceRestart restart;
    restart.seed = rseed;
    restart.converged = lr.converged;
    restart.loss_trace = std::move(lr.loss_trace);
    restart.train_loss = lr.f;
    restart.data_loss = source_data_loss(stats, d, k, objective, lr.x);
    restart.B_raw = ConstMap(lr.x.data() + lay.b_off(), d, k);
    restart.B0 = orthonormalize(restart.B_raw);
    restart.per_task.resize(T);
    for (int t = 0; t < T; ++t) {
      restart.per_task[t].Delta =
          lay.with_delta ? Matrix(ConstMap(lr.x.data() + lay.task_off(t), d, k))
                         : Matrix::Zero(d, k);
      restart.per_task[t].w = ConstVecMap(lr.x.data() + lay.w_off(t), k);
    }
    sol.restarts.push_back(std::move(restart));
  }

  sol.restarts_used = total;
  for (int r = 0; r < total; ++r) {
    if (sol.restarts[r].train_loss < sol.train_loss) {
      sol.train_loss = sol.restarts[r].train_loss;
      sol.best_restart = r;
    }
  }
  const SourceRestart& best = sol.restarts[sol.best_restart];
  sol.B0 = best.B0;
  sol.per_task = best.per_task;
  sol.data_loss = best.data_loss;
  sol.converged = best.converged;
  return sol;
}

SourceSolution adaptrep_source(std::span<const Dataset> datasets, int k,
                               double lambda, double gamma,
                               const SourceOptions& options) {
  if (datasets.empty()) throw std::invalid_argument("adaptrep_source: no data");
  std::vector<TaskStats> stats = compute_task_stats(datasets);
  return train_source(stats, static_cast<int>(datasets[0].X.cols()), k,
                      SourceObjective::adaptrep, lambda, gamma, options);
}

SourceSolution frozenrep_source(std::span<const Dataset> datasets, int k,
                                const SourceOptions& options) {
  if (datasets.empty()) throw std::invalid_argument("frozenrep_source: no data");
  std::vector<TaskStats> stats = compute_task_stats(datasets);
  return train_source(stats, static_cast<int>(datasets[0].X.cols()), k,
                      SourceObjective::frozenrep, 0.0, 0.0, options);
}

std::pair<double, double> default_source_regularization(
    const TaskEnvironment& env, int n_S) {
  double v = env.noise_sigma * std::sqrt(env.Sigma.trace() / n_S);
  return {v, v};
}

std::pair<double, double> regularizer_equivalence_check(const Vector& y,
                                                        double lambda,
                                                        double gamma) {
  if (lambda <= 0 || gamma <= 0)
    throw std::invalid_argument("regularizer_equivalence_check: need lambda, gamma > 0");
  double yn = y.norm();
  double analytic = std::sqrt(lambda * gamma) * yn;
  if (yn == 0.0) return {0.0, 0.0};

  // With A = y x'/||x||^2 and s = ||x||^2 the objective is
  // h(s) = (lambda/2) ||y||^2 / s + (gamma/2) s; golden-section search.
  auto h = [&](double s) { return 0.5 * lambda * yn * yn / s + 0.5 * gamma * s; };
  double lo = 1e-9 * std::max(1.0, yn);
  double hi = 1e9 * std::max(1.0, yn);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - invphi * (b - a);
  double c2 = a + invphi * (b - a);
  double f1 = h(c1), f2 = h(c2);
  for (int it = 0; it < 400 && (b - a) > 1e-14 * (1.0 + b); ++it) {
    if (f1 < f2) {
      b = c2; c2 = c1; f2 = f1;
      c1 = b - invphi * (b - a);
      f1 = h(c1);
    } else {
      a = c1; c1 = c2; f1 = f2;
      c2 = a + invphi * (b - a);
      f2 = h(c2);
    }
  }
  double numeric = std::min(f1, f2);
  return {numeric, analytic};
}

}  // namespace replab
