#include "lgilab/random.hpp"

namespace lgilab {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  // splitmix64 finalizer over the combined input
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector gaussian_vector(Index n, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Matrix gaussian_matrix(Index rows, Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  // fill row by row so row i only depends on the draws before it
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Vector random_unit_vector(Index n, Rng& rng) {
  Vector v;
  do {
    v = gaussian_vector(n, 1.0, rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace lgilab
