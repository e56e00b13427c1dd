#include "lgilab/rademacher.hpp"

#include <cmath>
#include <vector>

#include "lgilab/error.hpp"
#include "lgilab/parallel.hpp"
#include "lgilab/random.hpp"

namespace lgilab {

namespace {

struct NetworkView {
  Vector v;
  Matrix U;
};

NetworkView split(const Vector& w, int m, Index d) {
  NetworkView net{w.head(m), Matrix(m, d)};
  for (int j = 0; j < m; ++j) net.U.row(j) = w.segment(m + j * d, d).transpose();
  return net;
}

double correlation(const Matrix& X, const Vector& sigma, const NetworkView& net) {
  const Matrix A = (X * net.U.transpose()).cwiseMax(0.0);
  return sigma.dot(A * net.v);
}

Vector correlation_gradient(const Matrix& X, const Vector& sigma, const NetworkView& net) {
  const int m = static_cast<int>(net.v.size());
  const Index d = X.cols();
  const Matrix H = X * net.U.transpose();
  const Matrix A = H.cwiseMax(0.0);
  Vector g(m + m * d);
  g.head(m) = A.transpose() * sigma;
  const Matrix mask = (H.array() > 0.0).cast<double>().matrix();
  const Matrix gu = (mask.transpose() * sigma.asDiagonal() * X);  // m x d
  for (int j = 0; j < m; ++j) g.segment(m + j * d, d) = net.v(j) * gu.row(j).transpose();
  return g;
}

double linear_value(const Matrix& X, const Vector& sigma, double radius) {
  return radius * (X.transpose() * sigma).norm();
}

}  // namespace

double two_layer_sup(const Matrix& X, const Vector& sigma, double radius, const OracleOptions& options) {
  require(options.width >= 1, "two-layer oracle needs width >= 1");
  require(options.restarts >= 1, "two-layer oracle needs at least one restart");
  if (radius == 0.0) return 0.0;
  const int m = options.width;
  const Index d = X.cols();
  const Index dim = m + m * d;
  // the class is 2-homogeneous in (v, U): optimize on the unit sphere and
  // rescale by radius^2
  double step = 0.0;
  for (Index i = 0; i < X.rows(); ++i) step += X.row(i).norm();
  step = step > 0.0 ? 1.0 / step : 1.0;
  Rng rng(options.seed);
  double best = 0.0;
  for (int restart = 0; restart < options.restarts; ++restart) {
    Vector w = random_unit_vector(dim, rng);
    double value = correlation(X, sigma, split(w, m, d));
    for (int it = 0; it < options.max_iterations; ++it) {
      Vector next = w + step * correlation_gradient(X, sigma, split(w, m, d));
      const double norm = next.norm();
      if (norm == 0.0) break;
      next /= norm;
      const double next_value = correlation(X, sigma, split(next, m, d));
      const bool done = std::abs(next_value - value) <= options.tolerance * std::max(1.0, std::abs(value));
      w = std::move(next);
      value = next_value;
      best = std::max(best, value);
      if (done) break;
    }
    best = std::max(best, value);
  }
  return radius * radius * best;
}

double rademacher_oracle(const Matrix& X, double radius, const OracleOptions& options) {
  const Index n = X.rows();
  require(n >= 1, "rademacher_oracle: need at least one sample");
  require(radius >= 0.0, "rademacher_oracle: radius must be non-negative");
  std::vector<Vector> signs;
  if (options.exhaustive) {
    require(n <= kMaxExhaustiveSamples, "rademacher_oracle: exhaustive mode needs n <= 12");
    const std::size_t total = std::size_t{1} << n;
    signs.reserve(total);
    for (std::size_t mask = 0; mask < total; ++mask) {
      Vector s(n);
      for (Index i = 0; i < n; ++i) s(i) = (mask >> i) & 1U ? 1.0 : -1.0;
      signs.push_back(std::move(s));
    }
  } else {
    require(options.trials >= 1, "rademacher_oracle: trials must be positive");
    Rng rng(options.seed);
    std::bernoulli_distribution coin(0.5);
    for (long t = 0; t < options.trials; ++t) {
      Vector s(n);
      for (Index i = 0; i < n; ++i) s(i) = coin(rng) ? 1.0 : -1.0;
      signs.push_back(std::move(s));
    }
  }
  std::vector<double> values(signs.size(), 0.0);
  parallel_for(signs.size(), [&](std::size_t k) {
    if (options.model == OracleModel::Linear) {
      values[k] = linear_value(X, signs[k], radius);
    } else {
      OracleOptions local = options;
      local.seed = derive_seed(options.seed, k);
      values[k] = two_layer_sup(X, signs[k], radius, local);
    }
  });
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size()) / static_cast<double>(n);
}

}  // namespace lgilab
