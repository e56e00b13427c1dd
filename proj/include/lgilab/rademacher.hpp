#pragma once

#include <cstdint>

#include "lgilab/linalg.hpp"

namespace lgilab {

enum class OracleModel { Linear, TwoLayerRelu };

struct OracleOptions {
  OracleModel model = OracleModel::Linear;
  int width = 1;  // hidden width of the two-layer class
  bool exhaustive = true;
  long trials = 1000;  // sampled mode only
  std::uint64_t seed = 0;
  int restarts = 32;       // two-layer inner maximization
  double tolerance = 1e-8;  // two-layer inner maximization
  int max_iterations = 5000;
};

inline constexpr Index kMaxExhaustiveSamples = 12;

// Empirical Rademacher complexity E_sigma sup_{|w| <= radius} (1/n) sum_i
// sigma_i f(w, x_i). The linear class uses the closed form
// (radius / n) |sum_i sigma_i x_i|. The two-layer class f = v' relu(U x)
// over the ball |(v, U)| <= radius is maximized by projected gradient
// ascent with random restarts, so its value is a lower estimate.
double rademacher_oracle(const Matrix& X, double radius, const OracleOptions& options);

// Inner supremum of sum_i sigma_i f(w, x_i) for a fixed sign vector, without
// the 1/n factor (exposed for testing).
double two_layer_sup(const Matrix& X, const Vector& sigma, double radius, const OracleOptions& options);

}  // namespace lgilab
