#pragma once

#include <functional>
#include <string>

#include "lgilab/kernels.hpp"
#include "lgilab/linalg.hpp"

namespace lgilab {

struct Extremes {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

// Extreme eigenvalues of a symmetric matrix (dense self-adjoint solver).
// Rejects matrices whose asymmetry exceeds 1e-12 relative to max(1, |M|max).
Extremes gram_extremes(const Matrix& M);

// max |eigenvalue| of a symmetric matrix.
double symmetric_operator_norm(const Matrix& M);

enum class BoundSide { Upper, Lower };

struct SpectralReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::string bound_name;
  BoundSide side = BoundSide::Upper;
  double bound_value = 0.0;
  bool holds = false;
  double slack = 0.0;  // signed margin: positive when the bound holds strictly
};

// Compares a bound against extremes with tolerance 1e-9 max(1, |bound|).
SpectralReport make_report(const Extremes& ex, std::string bound_name, BoundSide side, double bound_value);
// Same with an explicit absolute tolerance.
SpectralReport make_report(const Extremes& ex, std::string bound_name, BoundSide side, double bound_value,
                           double tolerance);

// Arc-cosine NTK matrix for unit-norm rows (|x_i| = 1 +- 1e-9).
Matrix ntk_limit_matrix(const Matrix& X);

// Upper bound rho(0) + 3d sum_{t>=1} (t+2)^(d-1) rho(t SD) for radial
// kernels. The remainder after truncation is bounded by a certified tail
// majorant (geometric for Gaussian profiles, integral for multiquadrics).
double rbf_lambda_max_bound(const KernelSpec& spec, int d, double sd, double truncation_tol = 1e-12);

// Fourier transform (unitary convention) of the Gaussian profile at |omega|.
double gaussian_profile_transform(double rho, int d, double omega_norm);

// Lower bound C_d rho0(M_d / SD) SD^-d with M_d = 6.38 d,
// C_d = (M_d / 2^(3/2))^d / (2 Gamma(d/2 + 1)), Gaussian profiles only.
double rbf_lambda_min_bound(const KernelSpec& spec, int d, double sd);
double log_rbf_lambda_min_bound(const KernelSpec& spec, int d, double sd);

// Profile value and first two derivatives at 0, plus value at 1.
struct ProfileJet {
  double at0 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double at1 = 0.0;
};

ProfileJet profile_jet(const KernelSpec& spec);

// (rho(0) + rho''(0)/d) 11' + rho'(0) X S^2 X' / d + (rho(1) - rho(0) - rho'(0)) I.
Matrix klin_matrix(const ProfileJet& jet, const Matrix& X, const Matrix* sigma);

struct KlinResult {
  double deviation = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// |k(X,X) - k_lin(X,X)| against d^(-1/2) (delta^(-1/2) + log(d)^0.51).
KlinResult klin_comparison(const KernelSpec& spec, const Matrix& X, double delta);

// Same comparison for an arbitrary inner-product profile with known jet.
KlinResult klin_comparison(const std::function<double(double)>& profile, const ProfileJet& jet, const Matrix& X,
                           const Matrix* sigma, double delta);

struct EigTransferResult {
  Extremes plain;        // X X'
  Extremes transformed;  // X S S' X'
  Extremes sigma;        // S S'
  bool upper_holds = false;
  bool lower_holds = false;
  bool rank_deficient = false;  // X X' numerically singular: lower side vacuous
};

EigTransferResult eig_transfer(const Matrix& X, const Matrix& sigma);

}  // namespace lgilab
