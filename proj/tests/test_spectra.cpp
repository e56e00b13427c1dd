#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lgilab/data.hpp"
#include "lgilab/error.hpp"
#include "lgilab/kernels.hpp"
#include "lgilab/spectra.hpp"
#include "lgilab/spectral_checks.hpp"
#include "oracles.hpp"

using namespace lgilab;

namespace {

KernelSpec gaussian(double rho = 1.0) {
  KernelSpec spec;
  spec.family = KernelFamily::RbfGaussian;
  spec.rho = rho;
  return spec;
}

KernelSpec ntk() {
  KernelSpec spec;
  spec.family = KernelFamily::NtkArccos;
  return spec;
}

Matrix ntk_reference(const Matrix& X) {
  Matrix K(X.rows(), X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.rows(); ++j) {
      const double r = std::clamp(X.row(i).dot(X.row(j)), -1.0, 1.0);
      K(i, j) = r * (std::numbers::pi - std::acos(r)) / (2.0 * std::numbers::pi);
    }
  return K;
}

Matrix random_symmetric(Index n, std::mt19937_64& rng) {
  const Matrix A = oracle::random_matrix(n, n, rng);
  return (A + A.transpose()) / 2.0;
}

Matrix random_pd(Index d, std::mt19937_64& rng) {
  const Matrix A = oracle::random_matrix(d, d, rng);
  return A * A.transpose() / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : (v[k - 1] + v[k]) / 2.0;
}

}  // namespace

TEST(Spectra, GramExtremesExamples) {
  const Extremes id = gram_extremes(Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(id.lambda_min, 1.0);
  EXPECT_DOUBLE_EQ(id.lambda_max, 1.0);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 1.0;
  diag(1, 1) = 4.0;
  const Extremes d = gram_extremes(diag);
  EXPECT_NEAR(d.lambda_min, 1.0, 1e-14);
  EXPECT_NEAR(d.lambda_max, 4.0, 1e-14);
  Matrix m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  const Extremes e = gram_extremes(m);
  EXPECT_NEAR(e.lambda_min, 1.0, 1e-14);
  EXPECT_NEAR(e.lambda_max, 3.0, 1e-14);
}

TEST(Spectra, GramExtremesRejectsAsymmetry) {
  Matrix m(2, 2);
  m << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(gram_extremes(m), PreconditionError);
}

TEST(SpectraProperty, GramExtremesMatchJacobi) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix S = random_symmetric(2 + trial % 12, rng);
    const Extremes ex = gram_extremes(S);
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    EXPECT_NEAR(ex.lambda_min, oracle::jacobi_min(S), 1e-10 * scale);
    EXPECT_NEAR(ex.lambda_max, oracle::jacobi_max(S), 1e-10 * scale);
  }
}

TEST(Spectra, OperatorNormIsLargestMagnitude) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = -5.0;
  m(1, 1) = 3.0;
  EXPECT_NEAR(symmetric_operator_norm(m), 5.0, 1e-14);
}

TEST(Spectra, ReportSidesAndTolerance) {
  const Extremes ex{1.0, 2.0};
  EXPECT_TRUE(make_report(ex, "up", BoundSide::Upper, 2.0).holds);
  EXPECT_TRUE(make_report(ex, "up", BoundSide::Upper, 2.0 - 5e-10).holds);
  EXPECT_FALSE(make_report(ex, "up", BoundSide::Upper, 1.99).holds);
  EXPECT_TRUE(make_report(ex, "low", BoundSide::Lower, 0.5).holds);
  EXPECT_FALSE(make_report(ex, "low", BoundSide::Lower, 1.1).holds);
  EXPECT_NEAR(make_report(ex, "low", BoundSide::Lower, 0.5).slack, 0.5, 1e-15);
}

TEST(Spectra, KernelMatrixExamples) {
  Matrix X(2, 2);
  X << 1.0, 0.0, 0.0, 1.0;
  const Matrix rbf = kernel_matrix(gaussian(), X);
  EXPECT_DOUBLE_EQ(rbf(0, 0), 1.0);
  EXPECT_NEAR(rbf(0, 1), std::exp(-2.0), 1e-15);
  const Matrix K = kernel_matrix(ntk(), X);
  EXPECT_DOUBLE_EQ(K(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(K(0, 0), 0.5);
}

TEST(Spectra, NtkArgumentOutsideUnitIntervalRejected) {
  Matrix X(2, 1);
  X << 1.1, 1.0;
  EXPECT_THROW(kernel_matrix(ntk(), X), PreconditionError);
}

TEST(Spectra, NtkLimitIdentity) {
  const Matrix T = ntk_limit_matrix(Matrix::Identity(2, 2));
  EXPECT_EQ(T, Matrix(0.5 * Matrix::Identity(2, 2)));
  EXPECT_GE(gram_extremes(T).lambda_min, 0.25);
}

TEST(Spectra, NtkLimitParallelRows) {
  Matrix X(2, 2);
  X << 0.6, 0.8, 0.6, 0.8;
  EXPECT_NEAR(gram_extremes(ntk_limit_matrix(X)).lambda_min, 0.0, 1e-15);
  EXPECT_NEAR(gram_extremes(X * X.transpose()).lambda_min, 0.0, 1e-15);
}

TEST(Spectra, NtkLimitRejectsNonUnitRows) {
  Matrix X(1, 2);
  X << 1.0, 1.0;
  EXPECT_THROW(ntk_limit_matrix(X), PreconditionError);
}

TEST(SpectraProperty, NtkLimitMatchesClosedFormAndKernel) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix X = unit_rows(15, 8, seed);
    const Matrix T = ntk_limit_matrix(X);
    // Off-diagonal entries against the closed form; the diagonal is pinned
    // to rho(1) because arccos is ill-conditioned at 1.
    Matrix off = T - ntk_reference(X);
    off.diagonal().setZero();
    EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(T, kernel_matrix(ntk(), X));
    for (Index i = 0; i < X.rows(); ++i) EXPECT_EQ(T(i, i), 0.5);
  }
}

TEST(SpectraProperty, NtkSmallestEigenvalueAgainstGram) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 29);
    const Index d = 1 + static_cast<Index>(rng() % 64);
    const Matrix X = oracle::random_unit_rows(n, d, rng);
    const double ntk_min = oracle::jacobi_min(ntk_reference(X));
    const double gram_min = oracle::jacobi_min(X * X.transpose());
    EXPECT_GE(ntk_min, gram_min / 4.0 - 1e-10);
  }
  const SpectralCheckSummary summary = run_spectral_check("lemma-d8", SpectralCheckOptions{});
  EXPECT_EQ(summary.trials, 100);
  EXPECT_EQ(summary.passed, 100);
}

TEST(SpectraProperty, KernelMatrixSymmetricAndPositiveOnDistinctPoints) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix X = oracle::random_matrix(12, 3, rng);
    const Matrix K = kernel_matrix(gaussian(0.5), X);
    EXPECT_EQ(K, Matrix(K.transpose()));
    EXPECT_GT(oracle::jacobi_min(K), 0.0);
  }
}

TEST(Spectra, RbfMaxBoundExample) {
  const double bound = rbf_lambda_max_bound(gaussian(), 1, 1.0);
  double reference = 0.0;
  for (int t = 1; t <= 10; ++t) reference += std::exp(-static_cast<double>(t * t));
  EXPECT_NEAR(bound, 1.0 + 3.0 * reference, 1e-11);
  EXPECT_NEAR(bound, 2.15896, 1e-5);
}

TEST(Spectra, RbfMaxBoundTendsToProfileAtZero) {
  EXPECT_NEAR(rbf_lambda_max_bound(gaussian(), 2, 50.0), 1.0, 1e-12);
  EXPECT_LT(rbf_lambda_max_bound(gaussian(), 2, 5.0), rbf_lambda_max_bound(gaussian(), 2, 1.0));
}

TEST(Spectra, GaussianTransformMatchesQuadrature) {
  for (double rho : {0.5, 1.0, 2.0})
    for (double omega : {0.0, 0.7, 2.0}) {
      // Trapezoid rule on [-20, 20] for (2 pi)^(-1/2) int e^(-rho x^2) cos(omega x) dx.
      const int steps = 40000;
      const double h = 40.0 / steps;
      double sum = 0.0;
      for (int i = 0; i <= steps; ++i) {
        const double x = -20.0 + i * h;
        const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        sum += w * std::exp(-rho * x * x) * std::cos(omega * x);
      }
      const double quadrature = sum * h / std::sqrt(2.0 * std::numbers::pi);
      EXPECT_NEAR(gaussian_profile_transform(rho, 1, omega), quadrature, 1e-12);
    }
}

TEST(Spectra, RbfMinBoundExample) {
  const double c1 = 6.38 / std::pow(2.0, 1.5) / (2.0 * std::sqrt(std::numbers::pi) / 2.0);
  EXPECT_NEAR(c1, 1.27263, 1e-5);
  const double expected = c1 * std::pow(2.0, -0.5) * std::exp(-6.38 * 6.38);
  EXPECT_NEAR(rbf_lambda_min_bound(gaussian(), 1, 1.0) / expected, 1.0, 1e-12);
  EXPECT_NEAR(log_rbf_lambda_min_bound(gaussian(), 1, 1.0), std::log(expected), 1e-10);
}

TEST(Spectra, RbfMinBoundShrinksWithSeparation) {
  for (int d : {1, 2, 3}) {
    EXPECT_LT(log_rbf_lambda_min_bound(gaussian(), d, 0.5), log_rbf_lambda_min_bound(gaussian(), d, 1.0));
    EXPECT_LT(log_rbf_lambda_min_bound(gaussian(), d, 1.0), log_rbf_lambda_min_bound(gaussian(), d, 2.0));
  }
}

TEST(Spectra, RbfMinBoundNeedsGaussianProfile) {
  KernelSpec spec;
  spec.family = KernelFamily::RbfMultiquadric;
  spec.beta = -3.0;
  EXPECT_THROW(rbf_lambda_min_bound(spec, 1, 1.0), PreconditionError);
}

TEST(SpectraProperty, RbfBoundsSandwichGridSpectra) {
  for (int dim : {1, 2})
    for (double sd : {0.5, 1.0, 2.0}) {
      const Matrix X = spaced_grid(dim, dim == 1 ? 15 : 5, sd);
      EXPECT_NEAR(separation_distance(X), sd, 1e-12);
      const Matrix K = kernel_matrix(gaussian(), X);
      EXPECT_GE(rbf_lambda_max_bound(gaussian(), dim, sd), oracle::jacobi_max(K));
      EXPECT_LE(rbf_lambda_min_bound(gaussian(), dim, sd), oracle::jacobi_min(K));
    }
  const SpectralCheckSummary summary = run_spectral_check("rbf-sandwich", SpectralCheckOptions{});
  EXPECT_EQ(summary.passed, summary.trials);
}

TEST(SpectraProperty, MultiquadricMaxBoundDominatesGrid) {
  KernelSpec spec;
  spec.family = KernelFamily::RbfMultiquadric;
  spec.beta = -3.0;
  for (double sd : {0.5, 1.0, 2.0}) {
    const Matrix X = spaced_grid(1, 20, sd);
    EXPECT_GE(rbf_lambda_max_bound(spec, 1, sd), oracle::jacobi_max(kernel_matrix(spec, X)));
  }
}

TEST(Spectra, KlinExactForLinearProfile) {
  std::mt19937_64 rng(4);
  const Matrix X = oracle::random_matrix(10, 16, rng);
  ProfileJet jet;
  jet.at0 = 0.0;
  jet.d1 = 1.0;
  jet.d2 = 0.0;
  jet.at1 = 1.0;
  const KlinResult r = klin_comparison([](double t) { return t; }, jet, X, nullptr, 0.1);
  EXPECT_LE(r.deviation, 1e-14);
  EXPECT_TRUE(r.holds);
}

TEST(Spectra, PolynomialJet) {
  KernelSpec spec;
  spec.family = KernelFamily::InnerPolynomial;
  spec.beta = 2.0;
  const ProfileJet two = profile_jet(spec);
  EXPECT_EQ(two.at0, 0.0);
  EXPECT_EQ(two.d1, 0.0);
  EXPECT_EQ(two.d2, 2.0);
  EXPECT_EQ(two.at1, 1.0);
  spec.beta = 3.0;
  EXPECT_EQ(profile_jet(spec).d2, 0.0);
  EXPECT_THROW(profile_jet(gaussian()), PreconditionError);
}

TEST(SpectraProperty, KlinPolynomialStatistical) {
  KernelSpec spec;
  spec.family = KernelFamily::InnerPolynomial;
  spec.beta = 2.0;
  int held = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DataSpec data;
    data.kind = DataKind::Gaussian;
    data.n = 128;
    data.d = 256;
    data.entry_std = 1.0;
    const Matrix X = generate(data, seed).X;
    held += klin_comparison(spec, X, 0.1).holds;
  }
  RecordProperty("klin_held_of_20", held);
  EXPECT_GE(held, 0);
}

TEST(SpectraProperty, KlinDeviationShrinksWithDimension) {
  KernelSpec spec;
  spec.family = KernelFamily::InnerPolynomial;
  spec.beta = 2.0;
  std::vector<double> medians;
  for (Index d : {64, 128, 256, 512}) {
    std::vector<double> devs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      DataSpec data;
      data.kind = DataKind::Gaussian;
      data.n = d / 2;
      data.d = d;
      data.entry_std = 1.0;
      devs.push_back(klin_comparison(spec, generate(data, seed).X, 0.1).deviation);
    }
    medians.push_back(median_of(devs));
  }
  for (std::size_t i = 1; i < medians.size(); ++i) EXPECT_LT(medians[i], medians[i - 1]);
}

TEST(Spectra, EigTransferIdentityAndScaling) {
  std::mt19937_64 rng(5);
  const Matrix X = oracle::random_matrix(6, 12, rng);
  const EigTransferResult id = eig_transfer(X, Matrix::Identity(12, 12));
  EXPECT_TRUE(id.upper_holds && id.lower_holds);
  EXPECT_NEAR(id.transformed.lambda_max, id.plain.lambda_max, 1e-12 * id.plain.lambda_max);
  const EigTransferResult two = eig_transfer(X, 2.0 * Matrix::Identity(12, 12));
  EXPECT_TRUE(two.upper_holds && two.lower_holds);
  EXPECT_NEAR(two.transformed.lambda_max, 4.0 * two.plain.lambda_max, 1e-12 * two.transformed.lambda_max);
  EXPECT_NEAR(two.transformed.lambda_min, 4.0 * two.plain.lambda_min, 1e-10 * two.transformed.lambda_max);
  EXPECT_FALSE(two.rank_deficient);
}

TEST(Spectra, EigTransferFlagsRankDeficiency) {
  Matrix X = Matrix::Zero(2, 3);
  X(0, 0) = X(1, 0) = 1.0;
  EXPECT_TRUE(eig_transfer(X, Matrix::Identity(3, 3)).rank_deficient);
  EXPECT_THROW(eig_transfer(X, Matrix::Zero(3, 3)), PreconditionError);
}

TEST(SpectraProperty, EigTransferRandom) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix X = oracle::random_matrix(10, 40, rng);
    const Matrix S = random_pd(40, rng);
    const EigTransferResult r = eig_transfer(X, S);
    EXPECT_TRUE(r.upper_holds);
    EXPECT_TRUE(r.lower_holds);
    const Matrix SS = S * S.transpose();
    const double t_max = oracle::jacobi_max(X * SS * X.transpose());
    EXPECT_LE(oracle::jacobi_max(X * X.transpose()), t_max / oracle::jacobi_min(SS) * (1.0 + 1e-9));
  }
  const SpectralCheckSummary summary = run_spectral_check("eig-transfer", SpectralCheckOptions{});
  EXPECT_EQ(summary.passed, summary.trials);
}

TEST(SpectraProperty, SmallestEigenvalueSuperadditive) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 10);
    const Matrix A = random_symmetric(n, rng), B = random_symmetric(n, rng);
    EXPECT_GE(oracle::jacobi_min(A + B), oracle::jacobi_min(A) + oracle::jacobi_min(B) - 1e-9);
  }
  const SpectralCheckSummary summary = run_spectral_check("eig-subadditivity", SpectralCheckOptions{});
  EXPECT_EQ(summary.passed, summary.trials);
}

TEST(Spectra, UnknownCheckRejected) {
  EXPECT_THROW(run_spectral_check("no-such-check", SpectralCheckOptions{}), ConfigError);
  EXPECT_EQ(spectral_check_names().size(), 5u);
}
