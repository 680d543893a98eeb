#include "replab/pgd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace replab {

double PGDConfig::eta() const {
  if (eta_override > 0) return eta_override;
  double denom = std::sqrt(L_grad * L_grad + beta_curv * beta_curv * radius * radius);
  if (denom <= 0)
    throw std::invalid_argument("PGDConfig: L and beta*R are both zero");
  return radius / (std::sqrt(static_cast<double>(t_pgd)) * denom);
}

PGDTrace run_pgd(const ScalarFn& objective, const VectorFn& gradient,
                 const ProjectorFn& projector, Vector x0,
                 const PGDConfig& config) {
  if (config.t_pgd < 0) throw std::invalid_argument("run_pgd: t_pgd < 0");
  const double eta = config.eta();

  PGDTrace trace;
  trace.losses.reserve(config.t_pgd + 1);
  if (config.record_iterates) trace.iterates.reserve(config.t_pgd + 1);

  Vector x = std::move(x0);
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= config.t_pgd; ++t) {
    double f = objective(x);
    if (!std::isfinite(f))
      throw std::runtime_error("run_pgd: non-finite loss at iteration " +
                               std::to_string(t));
    trace.losses.push_back(f);
    if (config.record_iterates) trace.iterates.push_back(x);
    if (f < best) {
      best = f;
      trace.best_index = t;
      trace.best_x = x;
    }
    if (t == config.t_pgd) break;

    Vector g = gradient(x);
    if (!g.allFinite())
      throw std::runtime_error("run_pgd: non-finite gradient at iteration " +
                               std::to_string(t));
    x -= eta * g;
    projector(x);
  }
  trace.final_x = std::move(x);
  return trace;
}

std::pair<Matrix, Vector> project_product_ball(Matrix delta, Vector w,
                                               double c1, double c2) {
  if (c1 < 0 || c2 < 0)
    throw std::invalid_argument("project_product_ball: negative radius");
  double dn = delta.norm();
  if (dn > c1) delta *= (dn > 0 ? c1 / dn : 0.0);
  double wn = w.norm();
  if (wn > c2) w *= (wn > 0 ? c2 / wn : 0.0);
  return {std::move(delta), std::move(w)};
}

void clamp_segment_balls(Vector& x, std::span<const BallSpec> balls) {
  for (const BallSpec& b : balls) {
    auto seg = x.segment(b.offset, b.size);
    double nrm = seg.norm();
    if (nrm > b.radius) seg *= (nrm > 0 ? b.radius / nrm : 0.0);
  }
}

namespace {

// Largest |eigenvalue| of the (symmetric) per-example Hessian via power
// iteration on Hessian-vector products.
double hessian_op_norm(const std::function<Vector(const Vector&)>& hv,
                       Eigen::Index dim, Rng& rng) {
  Vector v = rng.gaussian_vector(static_cast<int>(dim));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = hv(v);
    double nrm = w.norm();
    if (nrm < 1e-13) return nrm;  // numerically zero Hessian
    double est_new = nrm;
    v = w / nrm;
    if (it > 0 && std::abs(est_new - est) <= 1e-6 * std::max(est_new, 1e-12))
      return est_new;
    est = est_new;
  }
  throw std::runtime_error(
      "estimate_approx_linearity: power iteration did not converge in 100 "
      "steps");
}

}  // namespace

LinearityEstimate estimate_approx_linearity(
    const PointwiseModel& model,
    const std::function<Vector(Rng&)>& feasible_sampler, int n_probe,
    const Vector& theta_init, std::uint64_t seed) {
  if (n_probe < 1)
    throw std::invalid_argument("estimate_approx_linearity: n_probe < 1");
  if (!model.value || !model.grad)
    throw std::invalid_argument("estimate_approx_linearity: model incomplete");

  LinearityEstimate out;

  double g2 = 0.0;
  for (int i = 0; i < model.n_examples; ++i)
    g2 += model.grad(theta_init, i).squaredNorm();
  out.L_grad = std::sqrt(g2 / model.n_examples);

  Rng rng(derive_seed(seed, 0xBE7A));
  double beta2 = 0.0;
  for (int p = 0; p < n_probe; ++p) {
    Vector theta = feasible_sampler(rng);
    double acc = 0.0;
    for (int i = 0; i < model.n_examples; ++i) {
      auto hv = [&](const Vector& v) -> Vector {
        if (model.hvp) return model.hvp(theta, i, v);
        double h = 1e-5 * (1.0 + theta.norm());
        return (model.grad(theta + h * v, i) - model.grad(theta - h * v, i)) /
               (2.0 * h);
      };
      double nrm = hessian_op_norm(hv, model.dim, rng);
      acc += nrm * nrm;
    }
    beta2 = std::max(beta2, acc / model.n_examples);
  }
  out.beta_curv = std::sqrt(beta2);
  return out;
}

}  // namespace replab
