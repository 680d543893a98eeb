#include "replab/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace replab {

double excess_risk_quadratic(const Vector& theta_hat, const Vector& theta_star,
                             const Matrix& Sigma) {
  if (theta_hat.size() != theta_star.size() ||
      Sigma.rows() != theta_hat.size() || Sigma.cols() != theta_hat.size())
    throw std::invalid_argument("excess_risk_quadratic: dimension mismatch");
  if ((Sigma - Sigma.transpose()).norm() > 1e-10)
    throw std::invalid_argument("excess_risk_quadratic: Sigma not symmetric");
  Vector diff = theta_hat - theta_star;
  return diff.dot(Sigma * diff);
}

double sine_principal_angle(const Matrix& B_hat, const Matrix& B_star) {
  if (B_hat.rows() != B_star.rows())
    throw std::invalid_argument("sine_principal_angle: row dim mismatch");
  Matrix Qh = orthonormalize(B_hat);
  Matrix Qs = orthonormalize(B_star);
  double s1 = top_singular_value(Qh.transpose() * Qs);
  return std::sqrt(std::max(0.0, 1.0 - s1 * s1));
}

namespace {

McEstimate accumulate_mc(const std::function<double(int)>& value, int n_mc) {
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    double v = value(i);
    sum += v;
    sumsq += v * v;
  }
  McEstimate out;
  out.n_mc = n_mc;
  out.estimate = sum / n_mc;
  double var = std::max(0.0, sumsq / n_mc - out.estimate * out.estimate);
  out.stderr_ = std::sqrt(var / n_mc);
  return out;
}

}  // namespace

McEstimate population_loss_mc(const Predictor& predictor,
                              const TaskEnvironment& env,
                              const Vector& theta_star, int n_mc,
                              std::uint64_t seed) {
  if (n_mc < 100) throw std::invalid_argument("population_loss_mc: n_mc < 100");
  Rng rng(seed);
  Eigen::LLT<Matrix> llt(env.Sigma);
  Matrix L = llt.matrixL();
  auto value = [&](int) {
    Vector x = L * rng.gaussian_vector(env.d);
    double mean = x.dot(theta_star);
    double pred = predictor(x);
    if (env.family == Family::logistic) {
      double p = 1.0 / (1.0 + std::exp(-mean));
      double y = rng.uniform() < p ? 1.0 : 0.0;
      double lse = pred > 0 ? pred + std::log1p(std::exp(-pred))
                            : std::log1p(std::exp(pred));
      return lse - y * pred;
    }
    double y = mean + env.noise_sigma * rng.normal();
    double r = pred - y;
    return 0.5 * r * r;
  };
  return accumulate_mc(value, n_mc);
}

McEstimate population_loss_mc_nn(const Predictor& predictor,
                                 const NnEnvironment& env,
                                 const NnTaskParams& truth_offset, int n_mc,
                                 std::uint64_t seed) {
  if (n_mc < 100)
    throw std::invalid_argument("population_loss_mc_nn: n_mc < 100");
  Rng rng(seed);
  Matrix B = env.B0 + truth_offset.Delta;
  Vector w = env.w0 + truth_offset.w;
  auto value = [&](int) {
    Vector x = rng.ball(env.d, 1.0);
    double y = nn_predict(B, w, env.beta, env.activation, x) +
               rng.uniform(-env.noise_bound, env.noise_bound);
    double r = predictor(x) - y;
    return 0.5 * r * r;
  };
  return accumulate_mc(value, n_mc);
}

}  // namespace replab
