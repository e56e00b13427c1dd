#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "lgilab/linalg.hpp"

namespace lgilab {

enum class DataKind { UniformSphere, Gaussian };
enum class EntryLaw { Gaussian, Rademacher, Uniform };

struct DataSpec {
  DataKind kind = DataKind::UniformSphere;
  Index n = 1;
  Index d = 1;
  std::optional<Matrix> sigma;  // covariance factor; X = Z sigma^{-1}
  EntryLaw entries = EntryLaw::Gaussian;
  std::optional<double> entry_std;  // defaults to 1/sqrt(d)
  bool normalize = false;           // project rows onto the unit ball
};

struct Dataset {
  Matrix X;
  Vector Y;  // empty until labelled
  std::uint64_t seed = 0;
  std::optional<Matrix> sigma;
  std::optional<double> c_star;  // norm of the target vector, once labelled

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  bool labelled() const { return Y.size() == X.rows(); }
};

enum class Link { Identity, Tanh, ScaledArctan };

struct Target {
  Link link = Link::Identity;
  Vector w_star;
};

DataKind parse_data_kind(std::string_view name);
EntryLaw parse_entry_law(std::string_view name);
Link parse_link(std::string_view name);
double apply_link(Link link, double t);

Dataset generate(const DataSpec& spec, std::uint64_t seed);

// y_i = link(x_i' w_star); records c_star = |w_star|.
Dataset label(Dataset ds, const Target& target);

// Replaces every label by its sign (+1 for non-negative values).
Dataset binarize(Dataset ds);

// Negates exactly floor(ratio * n) labels chosen uniformly without
// replacement. Labels must be +-1.
Dataset flip_labels(Dataset ds, double ratio, std::uint64_t seed);

// Half the minimum pairwise distance between rows.
double separation_distance(const Matrix& X);

void write_csv(const Dataset& ds, std::ostream& out);
Dataset read_csv(std::istream& in);

}  // namespace lgilab
