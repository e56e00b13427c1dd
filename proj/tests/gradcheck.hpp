#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lgilab/data.hpp"
#include "lgilab/objectives.hpp"
#include "oracles.hpp"

namespace gradcheck {

using namespace lgilab;

struct Case {
  std::string name;
  std::shared_ptr<const Objective> objective;
  // Draws a generic point: away from kinks and the removable singularity.
  std::function<Vector(std::mt19937_64&)> point;
};

inline std::shared_ptr<const Dataset> dataset(Matrix X, Vector Y) {
  Dataset ds;
  ds.X = std::move(X);
  ds.Y = std::move(Y);
  return std::make_shared<const Dataset>(std::move(ds));
}

inline Vector away_from_zero(std::mt19937_64& rng, Index dim, double lo, double hi) {
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution sign(0.5);
  Vector w(dim);
  for (Index i = 0; i < dim; ++i) w(i) = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return w;
}

// Every objective kind, with kernel regression over each kernel family.
inline std::vector<Case> all_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Case> cases;
  for (int k = 1; k <= 3; ++k) {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::PowerLoss;
    s.power = k;
    cases.push_back({"power-loss k=" + std::to_string(k), build_objective(s),
                     [](std::mt19937_64& r) { return away_from_zero(r, 1, 0.2, 2.0); }});
  }
  {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::NonAnalytic;
    cases.push_back({"non-analytic", build_objective(s), [](std::mt19937_64& r) { return away_from_zero(r, 1, 0.2, 3.0); }});
    s.kind = ObjectiveKind::MixedPower;
    cases.push_back({"mixed-power", build_objective(s), [](std::mt19937_64& r) { return away_from_zero(r, 1, 0.05, 3.0); }});
    s.kind = ObjectiveKind::ProductLoss;
    s.layers = 3;
    cases.push_back({"product-loss L=3", build_objective(s), [](std::mt19937_64& r) { return away_from_zero(r, 3, 0.1, 1.5); }});
  }
  const Matrix X = oracle::random_unit_rows(12, 5, rng);
  const Vector Y = oracle::random_matrix(12, 1, rng);
  {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::LinearRegression;
    cases.push_back({"linear-regression", build_objective(s, dataset(X, Y)),
                     [](std::mt19937_64& r) { return Vector(oracle::random_matrix(5, 1, r)); }});
  }
  const std::vector<std::pair<std::string, KernelSpec>> kernels = {
      {"rbf-gaussian", {KernelFamily::RbfGaussian, 1.0, 2.0, std::nullopt}},
      {"rbf-multiquadric", {KernelFamily::RbfMultiquadric, 1.0, -7.0, std::nullopt}},
      {"inner-polynomial", {KernelFamily::InnerPolynomial, 1.0, 3.0, std::nullopt}},
      {"ntk-arccos", {KernelFamily::NtkArccos, 1.0, 2.0, std::nullopt}},
  };
  for (const auto& [name, kernel] : kernels) {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::KernelRegression;
    s.kernel = kernel;
    const auto obj = build_objective(s, dataset(X, Y));
    const Index dim = obj->dim();
    cases.push_back({"kernel-regression " + name, obj,
                     [dim](std::mt19937_64& r) { return Vector(oracle::random_matrix(dim, 1, r)); }});
  }
  {
    const int m = 6;
    ObjectiveSpec s;
    s.kind = ObjectiveKind::TwoLayerRelu;
    s.width = m;
    const auto obj = build_objective(s, dataset(X, Y));
    cases.push_back({"two-layer-relu", obj, [X, m](std::mt19937_64& r) {
                       // Reject draws with a pre-activation near a kink.
                       for (;;) {
                         const Vector w = oracle::random_matrix(m + m * X.cols(), 1, r);
                         Matrix U(m, X.cols());
                         for (Index i = 0; i < m; ++i) U.row(i) = w.segment(m + i * X.cols(), X.cols()).transpose();
                         if ((X * U.transpose()).cwiseAbs().minCoeff() > 1e-3) return w;
                       }
                     }});
  }
  return cases;
}

struct Result {
  double worst = 0.0;
  int points = 0;
};

inline Result check(const Case& c, int points, std::mt19937_64& rng) {
  Result res;
  for (int t = 0; t < points; ++t) {
    const Vector w = c.point(rng);
    const Vector analytic = c.objective->evaluate(w).grad;
    const Vector fd = oracle::fd_gradient([&](const Vector& x) { return c.objective->loss(x); }, w, 1e-6);
    res.worst = std::max(res.worst, oracle::relative_error(analytic, fd));
    ++res.points;
  }
  return res;
}

}  // namespace gradcheck
