#include "lgilab/spectra.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lgilab/error.hpp"

namespace lgilab {

namespace {

constexpr long kMaxSeriesTerms = 10'000'000;

double relative_tolerance(double value) { return 1e-9 * std::max(1.0, std::abs(value)); }

// Tail of sum_{t>T} (t+2)^(d-1) exp(-rho sd^2 t^2). The term ratio
// ((t+3)/(t+2))^(d-1) exp(-rho sd^2 (2t+1)) decreases in t, so once it
// drops below one the tail is dominated by a geometric series.
double gaussian_series(double rho, int d, double sd, double tol, double floor) {
  const auto log_term = [&](double t) { return (d - 1) * std::log(t + 2.0) - rho * sd * sd * t * t; };
  double sum = 0.0;
  for (long t = 1; t <= kMaxSeriesTerms; ++t) {
    const double lt = log_term(static_cast<double>(t));
    const double term = std::exp(lt);
    sum += term;
    const double log_ratio = log_term(static_cast<double>(t + 1)) - lt;
    if (log_ratio >= 0.0) continue;
    const double ratio = std::exp(log_ratio);
    const double tail = std::exp(lt + log_ratio - std::log1p(-ratio));
    const double ref = std::max(sum, floor);
    if (term <= tol * ref && tail <= tol * ref) return sum + tail;
  }
  throw PreconditionError("rbf_lambda_max_bound: series did not converge");
}

// Multiquadric terms (t+2)^(d-1) (rho + sd^2 t^2)^(beta/2) decay only
// polynomially. For t >= T they are decreasing once
// (d-1)(1 + rho/(T sd)^2) < -beta, and then the tail is at most
// int_T^inf (1+2/T)^(d-1) t^(d-1) (sd t)^beta dt.
double multiquadric_series(double rho, double beta, int d, double sd, double tol, double floor) {
  const auto term_at = [&](double t) { return std::pow(t + 2.0, d - 1) * std::pow(rho + sd * sd * t * t, beta / 2.0); };
  const double decay = -(beta + d);
  double sum = 0.0;
  double tail = std::numeric_limits<double>::infinity();
  for (long t = 1; t <= kMaxSeriesTerms; ++t) {
    const double T = static_cast<double>(t);
    const double term = term_at(T);
    sum += term;
    const bool decreasing = (d - 1) * (1.0 + rho / (T * T * sd * sd)) < -beta;
    if (!decreasing) continue;
    tail = std::pow(1.0 + 2.0 / T, d - 1) * std::pow(sd, beta) * std::pow(T, -decay) / decay;
    const double ref = std::max(sum, floor);
    if (term <= tol * ref && tail <= tol * ref) return sum + tail;
  }
  // slow polynomial decay: the majorant still certifies the remainder
  if (std::isfinite(tail)) return sum + tail;
  throw PreconditionError("rbf_lambda_max_bound: series terms never decrease");
}

}  // namespace

Extremes gram_extremes(const Matrix& M) {
  require(M.rows() == M.cols() && M.rows() > 0, "gram_extremes: matrix must be square and non-empty");
  require(M.allFinite(), "gram_extremes: non-finite entries");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "gram_extremes: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  require(eig.info() == Eigen::Success, "gram_extremes: eigensolver failed");
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

double symmetric_operator_norm(const Matrix& M) {
  const Extremes ex = gram_extremes(M);
  return std::max(std::abs(ex.lambda_min), std::abs(ex.lambda_max));
}

SpectralReport make_report(const Extremes& ex, std::string bound_name, BoundSide side, double bound_value) {
  return make_report(ex, std::move(bound_name), side, bound_value, relative_tolerance(bound_value));
}

SpectralReport make_report(const Extremes& ex, std::string bound_name, BoundSide side, double bound_value,
                           double tolerance) {
  SpectralReport r;
  r.lambda_min = ex.lambda_min;
  r.lambda_max = ex.lambda_max;
  r.bound_name = std::move(bound_name);
  r.side = side;
  r.bound_value = bound_value;
  if (side == BoundSide::Upper) {
    r.slack = bound_value - ex.lambda_max;
  } else {
    r.slack = ex.lambda_min - bound_value;
  }
  r.holds = r.slack >= -tolerance;
  return r;
}

Matrix ntk_limit_matrix(const Matrix& X) {
  for (Index i = 0; i < X.rows(); ++i)
    require(std::abs(X.row(i).norm() - 1.0) <= 1e-9, "ntk_limit_matrix: rows must have unit norm");
  KernelSpec spec;
  spec.family = KernelFamily::NtkArccos;
  return kernel_matrix(spec, X);
}

double rbf_lambda_max_bound(const KernelSpec& spec, int d, double sd, double truncation_tol) {
  require(is_radial(spec.family), "rbf_lambda_max_bound: radial kernel required");
  require(d >= 1, "rbf_lambda_max_bound: d must be positive");
  require(sd > 0.0 && std::isfinite(sd), "rbf_lambda_max_bound: separation distance must be positive");
  require(truncation_tol > 0.0, "rbf_lambda_max_bound: truncation tolerance must be positive");
  validate_kernel(spec, d);
  const double at0 = kernel_profile(spec, 0.0);
  const double floor = at0 / (3.0 * d);
  const double series = spec.family == KernelFamily::RbfGaussian
                            ? gaussian_series(spec.rho, d, sd, truncation_tol, floor)
                            : multiquadric_series(spec.rho, spec.beta, d, sd, truncation_tol, floor);
  return at0 + 3.0 * d * series;
}

double gaussian_profile_transform(double rho, int d, double omega_norm) {
  require(rho > 0.0 && d >= 1, "gaussian_profile_transform: rho > 0 and d >= 1 required");
  return std::pow(2.0 * rho, -d / 2.0) * std::exp(-omega_norm * omega_norm / (4.0 * rho));
}

double log_rbf_lambda_min_bound(const KernelSpec& spec, int d, double sd) {
  require(spec.family == KernelFamily::RbfGaussian, "rbf_lambda_min_bound: only the Gaussian family is supported");
  require(spec.rho > 0.0, "rbf_lambda_min_bound: rho must be positive");
  require(d >= 1, "rbf_lambda_min_bound: d must be positive");
  require(sd > 0.0 && std::isfinite(sd), "rbf_lambda_min_bound: separation distance must be positive");
  const double Md = 6.38 * d;
  const double log_Cd = d * std::log(Md / std::pow(2.0, 1.5)) - std::log(2.0) - std::lgamma(d / 2.0 + 1.0);
  const double M = Md / sd;
  // the transform is radially decreasing, so its infimum over |omega| <= 2M
  // is attained at |omega| = 2M
  const double log_rho0 = -(d / 2.0) * std::log(2.0 * spec.rho) - M * M / spec.rho;
  return log_Cd + log_rho0 - d * std::log(sd);
}

double rbf_lambda_min_bound(const KernelSpec& spec, int d, double sd) {
  return std::exp(log_rbf_lambda_min_bound(spec, d, sd));
}

ProfileJet profile_jet(const KernelSpec& spec) {
  require(spec.family == KernelFamily::InnerPolynomial, "profile_jet: derivative data only for inner-polynomial kernels");
  validate_kernel(spec, spec.sigma ? spec.sigma->rows() : 1);
  ProfileJet jet;
  jet.at0 = 0.0;
  jet.d1 = 0.0;
  jet.d2 = spec.beta == 2.0 ? 2.0 : 0.0;
  jet.at1 = 1.0;
  return jet;
}

Matrix klin_matrix(const ProfileJet& jet, const Matrix& X, const Matrix* sigma) {
  const Index n = X.rows();
  const double d = static_cast<double>(X.cols());
  const Matrix XS = sigma ? Matrix(X * *sigma) : X;
  Matrix K = Matrix::Constant(n, n, jet.at0 + jet.d2 / d);
  K += jet.d1 * XS * XS.transpose() / d;
  K.diagonal().array() += jet.at1 - jet.at0 - jet.d1;
  return K;
}

KlinResult klin_comparison(const std::function<double(double)>& profile, const ProfileJet& jet, const Matrix& X,
                           const Matrix* sigma, double delta) {
  require(delta > 0.0 && delta < 1.0, "klin_comparison: delta must lie in (0, 1)");
  require(X.rows() >= 1 && X.cols() >= 1, "klin_comparison: empty data");
  if (sigma) require(sigma->rows() == X.cols() && sigma->cols() == X.cols(), "klin_comparison: sigma must be d x d");
  const double d = static_cast<double>(X.cols());
  const Matrix XS = sigma ? Matrix(X * *sigma) : X;
  const Matrix inner = XS * XS.transpose() / d;
  Matrix K(inner.rows(), inner.cols());
  for (Index i = 0; i < K.rows(); ++i)
    for (Index j = i; j < K.cols(); ++j) K(i, j) = K(j, i) = profile(inner(i, j));
  const Matrix diff = K - klin_matrix(jet, X, sigma);
  KlinResult out;
  out.deviation = symmetric_operator_norm(0.5 * (diff + diff.transpose()));
  out.bound = (1.0 / std::sqrt(delta) + std::pow(std::log(d), 0.51)) / std::sqrt(d);
  out.holds = out.deviation <= out.bound;
  return out;
}

KlinResult klin_comparison(const KernelSpec& spec, const Matrix& X, double delta) {
  const ProfileJet jet = profile_jet(spec);
  validate_kernel(spec, X.cols());
  const auto profile = [&](double r) { return kernel_profile(spec, r); };
  return klin_comparison(profile, jet, X, spec.sigma ? &*spec.sigma : nullptr, delta);
}

EigTransferResult eig_transfer(const Matrix& X, const Matrix& sigma) {
  require(sigma.rows() == X.cols() && sigma.cols() == X.cols(), "eig_transfer: sigma must be d x d");
  const Matrix SS = sigma * sigma.transpose();
  EigTransferResult out;
  out.sigma = gram_extremes(0.5 * (SS + SS.transpose()));
  require(out.sigma.lambda_min > 0.0, "eig_transfer: sigma is singular");
  const Matrix G = X * X.transpose();
  const Matrix XS = X * sigma;
  const Matrix H = XS * XS.transpose();
  out.plain = gram_extremes(0.5 * (G + G.transpose()));
  out.transformed = gram_extremes(0.5 * (H + H.transpose()));
  const double upper = out.transformed.lambda_max / out.sigma.lambda_min;
  const double lower = out.transformed.lambda_min / out.sigma.lambda_max;
  out.upper_holds = out.plain.lambda_max <= upper + relative_tolerance(upper);
  out.lower_holds = out.plain.lambda_min >= lower - relative_tolerance(lower);
  out.rank_deficient = out.plain.lambda_min <= 1e-12 * std::max(out.plain.lambda_max, 1e-300);
  return out;
}

}  // namespace lgilab
