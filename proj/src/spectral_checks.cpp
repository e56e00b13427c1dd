#include "lgilab/spectral_checks.hpp"

#include <cmath>

#include <json.hpp>

#include "lgilab/data.hpp"
#include "lgilab/error.hpp"
#include "lgilab/random.hpp"

namespace lgilab {

namespace {

constexpr double kNtkSlack = 1e-10;

Matrix random_symmetric(Index n, Rng& rng) {
  const Matrix A = gaussian_matrix(n, n, 1.0, rng);
  return 0.5 * (A + A.transpose());
}

Matrix random_pd(Index d, Rng& rng) {
  const Matrix G = gaussian_matrix(d, d, 1.0, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ();
  std::uniform_real_distribution<double> spread(0.5, 2.0);
  Vector u(d);
  for (Index i = 0; i < d; ++i) u(i) = spread(rng);
  const Matrix S = Q * u.asDiagonal() * Q.transpose();
  return 0.5 * (S + S.transpose());
}

void add(SpectralCheckSummary& summary, long trial, SpectralReport report) {
  summary.passed += report.holds ? 1 : 0;
  summary.rows.push_back({summary.check, trial, std::move(report)});
}

}  // namespace

std::vector<std::string> spectral_check_names() {
  return {"lemma-d8", "eig-subadditivity", "rbf-sandwich", "eig-transfer", "klin"};
}

Matrix spaced_grid(int dim, Index per_axis, double sd) {
  require(dim == 1 || dim == 2, "spaced_grid: dim must be 1 or 2");
  require(per_axis >= 2 && sd > 0.0, "spaced_grid: need at least two points per axis and sd > 0");
  const double h = 2.0 * sd;
  if (dim == 1) {
    Matrix X(per_axis, 1);
    for (Index i = 0; i < per_axis; ++i) X(i, 0) = h * static_cast<double>(i);
    return X;
  }
  Matrix X(per_axis * per_axis, 2);
  for (Index i = 0; i < per_axis; ++i)
    for (Index j = 0; j < per_axis; ++j) {
      X(i * per_axis + j, 0) = h * static_cast<double>(i);
      X(i * per_axis + j, 1) = h * static_cast<double>(j);
    }
  return X;
}

Matrix unit_rows(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i) X.row(i) = random_unit_vector(d, rng).transpose();
  return X;
}

SpectralCheckSummary run_spectral_check(const std::string& check, const SpectralCheckOptions& o) {
  require(o.n >= 2 && o.d >= 1, "spectral check needs n >= 2 and d >= 1");
  require(o.trials >= 1, "spectral check needs at least one trial");
  SpectralCheckSummary summary;
  summary.check = check;
  if (check == "lemma-d8") {
    for (long t = 0; t < o.trials; ++t) {
      const Matrix X = unit_rows(o.n, o.d, derive_seed(o.seed, static_cast<std::uint64_t>(t)));
      const Extremes theta = gram_extremes(ntk_limit_matrix(X));
      const Extremes gram = gram_extremes(X * X.transpose());
      add(summary, t, make_report(theta, "ntk-min-quarter-gram", BoundSide::Lower, gram.lambda_min / 4.0, kNtkSlack));
    }
  } else if (check == "eig-subadditivity") {
    for (long t = 0; t < o.trials; ++t) {
      Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(t)));
      const Matrix A = random_symmetric(o.n, rng);
      const Matrix B = random_symmetric(o.n, rng);
      const double bound = gram_extremes(A).lambda_min + gram_extremes(B).lambda_min;
      add(summary, t, make_report(gram_extremes(A + B), "min-eigenvalue-subadditivity", BoundSide::Lower, bound));
    }
  } else if (check == "rbf-sandwich") {
    KernelSpec spec;
    spec.family = KernelFamily::RbfGaussian;
    spec.rho = 1.0;
    long t = 0;
    for (int dim : {1, 2}) {
      const Index per_axis = dim == 1 ? o.n : std::max<Index>(2, static_cast<Index>(std::ceil(std::sqrt(o.n))));
      for (double sd : {0.5, 1.0, 2.0}) {
        const Matrix X = spaced_grid(dim, per_axis, sd);
        const Extremes ex = gram_extremes(kernel_matrix(spec, X));
        const double measured_sd = separation_distance(X);
        add(summary, t++, make_report(ex, "rbf-max-series", BoundSide::Upper, rbf_lambda_max_bound(spec, dim, measured_sd)));
        add(summary, t++, make_report(ex, "rbf-min-fourier", BoundSide::Lower, rbf_lambda_min_bound(spec, dim, measured_sd)));
      }
    }
    summary.trials = t;
    return summary;
  } else if (check == "eig-transfer") {
    for (long t = 0; t < o.trials; ++t) {
      Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(t)));
      const Matrix X = gaussian_matrix(o.n, o.d, 1.0 / std::sqrt(static_cast<double>(o.d)), rng);
      const Matrix S = random_pd(o.d, rng);
      const EigTransferResult r = eig_transfer(X, S);
      add(summary, 2 * t, make_report(r.plain, "transfer-upper", BoundSide::Upper,
                                      r.transformed.lambda_max / r.sigma.lambda_min));
      add(summary, 2 * t + 1, make_report(r.plain, "transfer-lower", BoundSide::Lower,
                                          r.transformed.lambda_min / r.sigma.lambda_max));
    }
    summary.trials = 2 * o.trials;
    return summary;
  } else if (check == "klin") {
    KernelSpec spec;
    spec.family = KernelFamily::InnerPolynomial;
    spec.beta = 2.0;
    for (long t = 0; t < o.trials; ++t) {
      Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(t)));
      const Matrix X = gaussian_matrix(o.n, o.d, 1.0, rng);
      const KlinResult r = klin_comparison(spec, X, o.delta);
      add(summary, t, make_report({r.deviation, r.deviation}, "klin-deviation", BoundSide::Upper, r.bound, 0.0));
    }
  } else {
    throw ConfigError("unknown spectral check '" + check + "'");
  }
  summary.trials = o.trials;
  return summary;
}

std::string spectral_summaries_json(const std::vector<SpectralCheckSummary>& summaries) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json block;
    block["check"] = s.check;
    block["trials"] = s.trials;
    block["passed"] = s.passed;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : s.rows) {
      nlohmann::ordered_json j;
      j["trial"] = row.trial;
      j["lambda_min"] = row.report.lambda_min;
      j["lambda_max"] = row.report.lambda_max;
      j["bound_name"] = row.report.bound_name;
      j["side"] = row.report.side == BoundSide::Upper ? "upper" : "lower";
      j["bound_value"] = row.report.bound_value;
      j["holds"] = row.report.holds;
      j["slack"] = row.report.slack;
      rows.push_back(std::move(j));
    }
    block["rows"] = std::move(rows);
    out.push_back(std::move(block));
  }
  return out.dump(2) + "\n";
}

}  // namespace lgilab
