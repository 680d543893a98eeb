#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "replab/env.hpp"
#include "replab/lbfgs.hpp"
#include "replab/linalg.hpp"

namespace replab {

// Squared-loss sufficient statistics of one task dataset. The source
// objectives only touch the data through these, which keeps the multi-task
// training independent of n_S in both memory and per-iteration cost.
struct TaskStats {
  Matrix G;      // X'X, d x d
  Vector b;      // X'y, d
  double yy = 0; // y'y
  int n = 0;
};

TaskStats compute_task_stats(const Dataset& ds);
std::vector<TaskStats> compute_task_stats(std::span<const Dataset> datasets);

enum class SourceObjective { adaptrep, frozenrep };

struct SourceOptions {
  int restarts = 10;
  int max_iters = 500;
  double grad_tol = 1e-8;
  double balance_weight = 0.5;  // mu_bal on ||B'B - WW'||_F^2
  int lbfgs_memory = 10;
  std::uint64_t seed = 0;
  // Extra initial points appended after the random restarts (packed with
  // pack_source_params); used for warm starts and ablations.
  std::vector<Vector> extra_inits;
};

struct SourceRestart {
  Matrix B_raw;     // unorthonormalized minimizer
  Matrix B0;        // orthonormalized representation
  std::vector<TaskParams> per_task;  // Delta_t is d x k (zero for frozenrep)
  double train_loss = 0;  // full objective (fit + penalties)
  double data_loss = 0;   // fit term only
  bool converged = false;
  std::vector<double> loss_trace;
  std::uint64_t seed = 0;
};

struct SourceSolution {
  Matrix B0;
  std::vector<TaskParams> per_task;
  double train_loss = 0;
  double data_loss = 0;
  int restarts_used = 0;
  SourceObjective objective_tag = SourceObjective::adaptrep;
  bool converged = false;
  std::vector<SourceRestart> restarts;  // kept for downstream selection
  int best_restart = 0;                 // by train_loss
};

// AdaptRep source objective: mean squared fit over tasks plus per-task
// (lambda/2)||Delta_t||_F^2 + (gamma/2)||w_t||^2 averaged over tasks, plus
// the balance penalty mu_bal ||B'B - WW'||_F^2.
SourceSolution adaptrep_source(std::span<const Dataset> datasets, int k,
                               double lambda, double gamma,
                               const SourceOptions& options = {});

// FrozenRep: same scaffolding with Delta_t frozen at zero and no
// lambda/gamma terms.
SourceSolution frozenrep_source(std::span<const Dataset> datasets, int k,
                                const SourceOptions& options = {});

// Stats-level entry point used by both wrappers and by the experiment
// harness (which streams datasets into stats to bound memory).
SourceSolution train_source(std::span<const TaskStats> stats, int d, int k,
                            SourceObjective objective, double lambda,
                            double gamma, const SourceOptions& options);

// Full objective (value + gradient) on packed parameters; exposed for tests.
double source_objective(std::span<const TaskStats> stats, int d, int k,
                        SourceObjective objective, double lambda, double gamma,
                        double balance_weight, const Vector& x, Vector* grad);

// Data-fit term only.
double source_data_loss(std::span<const TaskStats> stats, int d, int k,
                        SourceObjective objective, const Vector& x);

std::size_t source_param_size(int d, int k, int T, SourceObjective objective);
Vector pack_source_params(const Matrix& B, const std::vector<TaskParams>& tasks,
                          SourceObjective objective);

// lambda = gamma = sigma * sqrt(tr(Sigma) / n_S), the scale of the
// delta0-term in the source rate.
std::pair<double, double> default_source_regularization(
    const TaskEnvironment& env, int n_S);

// Numeric vs analytic minimum of (lambda/2)||A||_F^2 + (gamma/2)||x||^2
// subject to A x = y. The numeric route uses the rank-one parameterization
// A = y x'/||x||^2 and golden-section search over ||x||^2; the analytic
// value is sqrt(lambda * gamma) ||y||.
std::pair<double, double> regularizer_equivalence_check(const Vector& y,
                                                        double lambda,
                                                        double gamma);

}  // namespace replab
