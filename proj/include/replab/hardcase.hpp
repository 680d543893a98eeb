#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "replab/env.hpp"
#include "replab/linalg.hpp"

namespace replab {

// Adversarial task family: covariance blockdiag(eps I_{d-k}, I_k), tasks
// theta = (1/sqrt(2 eps)) Astar v + delta with v uniform on the unit sphere
// of R^k and delta uniform on the unit sphere of E_k (last k coordinates).
struct HardCaseSpec {
  int d = 0;
  int k = 0;
  double eps = 0.1;   // in (0,1)
  Matrix Astar;       // d x k orthonormal, supported on the first d-k coords
  Family family = Family::hardcase_linear;

  // eps = k/d, Astar on the first k coordinates.
  static HardCaseSpec corollary_preset(int d, int k,
                                       Family family = Family::hardcase_linear);
};

void validate_hard_spec(const HardCaseSpec& spec);

// blockdiag(eps I_{d-k}, I_k), assembled exactly.
Matrix block_covariance(int d, int k, double eps);

// Environment whose T source tasks are i.i.d. draws from the hard family
// (w_t = v_t / sqrt(2 eps), Delta_t the rank-one lift of delta_t).
TaskEnvironment make_hard_env(const HardCaseSpec& spec, int T,
                              double noise_sigma, std::uint64_t seed);

TargetTask sample_hard_task(const HardCaseSpec& spec, std::uint64_t seed);

// ReLU lift of a linear hard task: B = [A, -A], w = (1/sqrt(2 eps))[v, -v],
// Delta with every column equal to delta / k. The lifted predictor
// w'(B'x)_+ + <x sigma'(x'B), Delta> equals x'((1/sqrt(2 eps)) A v + delta).
struct ReluLift {
  Matrix B;      // d x 2k
  Vector w;      // 2k
  Matrix Delta;  // d x 2k, rank one
};

ReluLift lift_to_relu(const HardCaseSpec& spec, const Vector& v,
                      const Vector& delta);

// Value of the lifted (linearized) ReLU predictor f_(B+Delta, w) at x.
double relu_lift_predict(const ReluLift& lift, const Vector& x);

struct PopulationLimitOptions {
  int restarts = 3;
  int max_iters = 500;
  double grad_tol = 1e-10;
};

// Infinite-data FrozenRep limit: minimizes the population objective
// (averaged over n_mc Monte-Carlo tasks, exact inner head solves given B)
// by quasi-Newton descent and returns the orthonormalized representation.
// Throws std::runtime_error when no restart converges.
Matrix frozenrep_population_limit(const HardCaseSpec& spec, int n_mc,
                                  std::uint64_t seed,
                                  const PopulationLimitOptions& options = {});

// Population FrozenRep objective value/gradient at B given the task second
// moment M = E[theta theta']; exposed for tests.
double frozenrep_population_objective(const Matrix& Sigma, const Matrix& M,
                                      const Matrix& B, Matrix* grad);

// Maps (representation, task, target dataset) to excess risk.
using MethodRunner =
    std::function<double(const Matrix& rep, const TargetTask& task,
                         const Dataset& target)>;

struct WorstCaseOptions {
  int candidates = 64;  // M
  int n_T = 0;
  int inner_reps = 10;
  std::uint64_t seed = 0;
};

// Samples M candidate tasks from the hard family, scores each by the
// average excess risk of method_runner over inner_reps dataset draws, and
// returns the argmax task with its risk.
std::pair<TargetTask, double> worst_case_target(
    const Matrix& rep, const TaskEnvironment& hard_env,
    const MethodRunner& method_runner, const WorstCaseOptions& options);

}  // namespace replab
