#include "lgilab/kernels.hpp"

#include <cmath>
#include <numbers>

#include "lgilab/error.hpp"

namespace lgilab {

namespace {

constexpr double kArccosTolerance = 1e-12;

bool is_even_integer(double x) {
  return std::floor(x) == x && std::fmod(x, 2.0) == 0.0;
}

double scaled_inner(const KernelSpec& spec, const Vector& x, const Vector& y) {
  const double d = static_cast<double>(x.size());
  if (spec.sigma) {
    const Matrix s2 = (*spec.sigma) * (*spec.sigma);
    return x.dot(s2 * y) / d;
  }
  return x.dot(y) / d;
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "rbf-gaussian") return KernelFamily::RbfGaussian;
  if (name == "rbf-multiquadric") return KernelFamily::RbfMultiquadric;
  if (name == "inner-polynomial") return KernelFamily::InnerPolynomial;
  if (name == "ntk-arccos") return KernelFamily::NtkArccos;
  throw ConfigError("unknown kernel name '" + std::string(name) + "'");
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::RbfGaussian: return "rbf-gaussian";
    case KernelFamily::RbfMultiquadric: return "rbf-multiquadric";
    case KernelFamily::InnerPolynomial: return "inner-polynomial";
    case KernelFamily::NtkArccos: return "ntk-arccos";
  }
  return "unknown";
}

bool is_radial(KernelFamily family) {
  return family == KernelFamily::RbfGaussian || family == KernelFamily::RbfMultiquadric;
}

void validate_kernel(const KernelSpec& spec, Index d) {
  switch (spec.family) {
    case KernelFamily::RbfGaussian:
      require(spec.rho > 0.0, "rbf-gaussian requires rho > 0");
      break;
    case KernelFamily::RbfMultiquadric:
      require(spec.rho > 0.0, "rbf-multiquadric requires rho > 0");
      require(!is_even_integer(spec.beta), "rbf-multiquadric requires beta not an even integer");
      require(spec.beta < -static_cast<double>(d), "rbf-multiquadric requires beta < -d");
      break;
    case KernelFamily::InnerPolynomial:
      require(std::floor(spec.beta) == spec.beta && spec.beta >= 2.0,
              "inner-polynomial requires an integer degree beta >= 2");
      if (spec.sigma) {
        require(spec.sigma->rows() == d && spec.sigma->cols() == d,
                "inner-polynomial sigma must be d x d");
      }
      break;
    case KernelFamily::NtkArccos:
      break;
  }
}

double ntk_arccos_profile(double r) {
  require(std::isfinite(r) && std::abs(r) <= 1.0 + kArccosTolerance,
          "arc-cosine argument outside [-1, 1]");
  // arccos is ill-conditioned at the endpoints, so arguments that are one
  // within tolerance are treated as exactly one
  if (r >= 1.0 - kArccosTolerance) r = 1.0;
  if (r <= -1.0 + kArccosTolerance) r = -1.0;
  return r * (std::numbers::pi - std::acos(r)) / (2.0 * std::numbers::pi);
}

double kernel_profile(const KernelSpec& spec, double r) {
  switch (spec.family) {
    case KernelFamily::RbfGaussian:
      return std::exp(-spec.rho * r * r);
    case KernelFamily::RbfMultiquadric:
      return std::pow(spec.rho + r * r, spec.beta / 2.0);
    case KernelFamily::InnerPolynomial:
      return std::pow(r, spec.beta);
    case KernelFamily::NtkArccos:
      return ntk_arccos_profile(r);
  }
  return 0.0;
}

double kernel_value(const KernelSpec& spec, const Vector& x, const Vector& y) {
  require(x.size() == y.size(), "kernel arguments differ in dimension");
  switch (spec.family) {
    case KernelFamily::RbfGaussian:
    case KernelFamily::RbfMultiquadric:
      return kernel_profile(spec, (x - y).norm());
    case KernelFamily::InnerPolynomial:
      return kernel_profile(spec, scaled_inner(spec, x, y));
    case KernelFamily::NtkArccos:
      return kernel_profile(spec, x.dot(y));
  }
  return 0.0;
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& X) {
  validate_kernel(spec, X.cols());
  const Index n = X.rows();
  Matrix inner;
  if (spec.family == KernelFamily::InnerPolynomial) {
    const Matrix XS = spec.sigma ? Matrix(X * (*spec.sigma)) : X;
    inner = XS * XS.transpose() / static_cast<double>(X.cols());
  } else if (spec.family == KernelFamily::NtkArccos) {
    inner = X * X.transpose();
  }
  Matrix K(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double arg = is_radial(spec.family) ? (X.row(i) - X.row(j)).norm() : inner(i, j);
      const double v = kernel_profile(spec, arg);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Vector kernel_column(const KernelSpec& spec, const Matrix& X, const Vector& x) {
  require(X.cols() == x.size(), "kernel column: dimension mismatch");
  Vector k(X.rows());
  for (Index i = 0; i < X.rows(); ++i) k(i) = kernel_value(spec, X.row(i).transpose(), x);
  return k;
}

}  // namespace lgilab
