#include "replab/rng.hpp"

#include <cmath>

namespace replab {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (a + 0x100000001b3ULL));
  h = splitmix64(h ^ (b + 0xcbf29ce484222325ULL));
  h = splitmix64(h ^ (c + 0x9e3779b97f4a7c15ULL));
  return h;
}

Eigen::VectorXd Rng::gaussian_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::MatrixXd Rng::gaussian_matrix(int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill order; keep it fixed so draws are reproducible.
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Eigen::VectorXd Rng::sphere(int n, double radius) {
  Eigen::VectorXd v = gaussian_vector(n);
  double nrm = v.norm();
  while (nrm < 1e-300) {  // astronomically unlikely; resample
    v = gaussian_vector(n);
    nrm = v.norm();
  }
  return v * (radius / nrm);
}

Eigen::VectorXd Rng::ball(int n, double radius) {
  Eigen::VectorXd dir = sphere(n, 1.0);
  double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
  return dir * r;
}

}  // namespace replab
