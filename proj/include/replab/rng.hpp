#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace replab {

// Mixes a base seed with up to three stream tags (splitmix64 finalizer).
// Used to derive independent, order-free sub-streams for tasks,
// replications and restarts so that parallel schedules cannot change
// the numbers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Seeded generator with the sampling primitives used across the project.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform() { return unif_(engine_); }                  // U(0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }                 // N(0,1)

  Eigen::VectorXd gaussian_vector(int n);
  Eigen::MatrixXd gaussian_matrix(int rows, int cols);

  // Uniform on the radius-r sphere in R^n.
  Eigen::VectorXd sphere(int n, double radius = 1.0);

  // Uniform in the radius-r ball in R^n.
  Eigen::VectorXd ball(int n, double radius = 1.0);

  // Independent child stream.
  Rng fork(std::uint64_t tag) { return Rng(derive_seed(engine_(), tag)); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace replab
