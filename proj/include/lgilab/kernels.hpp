#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "lgilab/linalg.hpp"

namespace lgilab {

enum class KernelFamily { RbfGaussian, RbfMultiquadric, InnerPolynomial, NtkArccos };

// Kernels are either radial, k(x,y) = profile(|x - y|), or inner-product,
// k(x,y) = profile(x' S^2 y / d) with S = sigma (identity when absent).
// The NTK arc-cosine kernel uses the raw inner product x'y.
struct KernelSpec {
  KernelFamily family = KernelFamily::RbfGaussian;
  double rho = 1.0;   // RBF width parameter
  double beta = 2.0;  // multiquadric exponent or polynomial degree
  std::optional<Matrix> sigma;
};

KernelFamily parse_kernel_family(std::string_view name);
std::string kernel_family_name(KernelFamily family);

bool is_radial(KernelFamily family);

// Checks the family's parameter ranges; `d` is the input dimension, needed
// for the multiquadric integrability condition beta < -d.
void validate_kernel(const KernelSpec& spec, Index d);

// The scalar profile: evaluated at a distance for radial kernels and at the
// scaled inner product otherwise.
double kernel_profile(const KernelSpec& spec, double r);

double kernel_value(const KernelSpec& spec, const Vector& x, const Vector& y);

// n x n matrix with entries k(x_i, x_j); exactly symmetric.
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& X);

// Column (k(x_1, x), ..., k(x_n, x)).
Vector kernel_column(const KernelSpec& spec, const Matrix& X, const Vector& x);

// Arc-cosine profile r (pi - arccos r) / (2 pi). Arguments within 1e-12 of
// [-1, 1] are clamped; farther ones are rejected.
double ntk_arccos_profile(double r);

}  // namespace lgilab
