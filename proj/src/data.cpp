#include "lgilab/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

#include "lgilab/error.hpp"
#include "lgilab/format.hpp"
#include "lgilab/random.hpp"

namespace lgilab {

namespace {

constexpr double kDuplicateThreshold = 1e-12;

Matrix draw_entries(Index n, Index d, EntryLaw law, double stddev, Rng& rng) {
  Matrix Z(n, d);
  std::normal_distribution<double> normal(0.0, stddev);
  std::bernoulli_distribution coin(0.5);
  const double half_width = std::sqrt(3.0) * stddev;
  std::uniform_real_distribution<double> uniform(-half_width, half_width);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      switch (law) {
        case EntryLaw::Gaussian: Z(i, j) = normal(rng); break;
        case EntryLaw::Rademacher: Z(i, j) = coin(rng) ? stddev : -stddev; break;
        case EntryLaw::Uniform: Z(i, j) = uniform(rng); break;
      }
    }
  }
  return Z;
}

}  // namespace

DataKind parse_data_kind(std::string_view name) {
  if (name == "uniform-sphere") return DataKind::UniformSphere;
  if (name == "gaussian" || name == "gaussian-with-covariance") return DataKind::Gaussian;
  throw ConfigError("unknown data kind '" + std::string(name) + "'");
}

EntryLaw parse_entry_law(std::string_view name) {
  if (name == "gaussian") return EntryLaw::Gaussian;
  if (name == "rademacher") return EntryLaw::Rademacher;
  if (name == "uniform") return EntryLaw::Uniform;
  throw ConfigError("unknown entry law '" + std::string(name) + "'");
}

Link parse_link(std::string_view name) {
  if (name == "identity") return Link::Identity;
  if (name == "tanh") return Link::Tanh;
  if (name == "scaled-arctan") return Link::ScaledArctan;
  throw ConfigError("unknown link '" + std::string(name) + "'");
}

double apply_link(Link link, double t) {
  switch (link) {
    case Link::Identity: return t;
    case Link::Tanh: return std::tanh(t);
    // 2/pi scaling keeps the range inside (-1, 1) with slope 2/pi at 0
    case Link::ScaledArctan: return 2.0 / 3.141592653589793 * std::atan(t);
  }
  return t;
}

Dataset generate(const DataSpec& spec, std::uint64_t seed) {
  require(spec.n >= 1 && spec.d >= 1, "generate: n and d must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.seed = seed;
  if (spec.kind == DataKind::UniformSphere) {
    ds.X = gaussian_matrix(spec.n, spec.d, 1.0, rng);
    for (Index i = 0; i < spec.n; ++i) {
      double norm = ds.X.row(i).norm();
      while (norm == 0.0) {
        ds.X.row(i) = gaussian_vector(spec.d, 1.0, rng).transpose();
        norm = ds.X.row(i).norm();
      }
      ds.X.row(i) /= norm;
    }
  } else {
    const double stddev = spec.entry_std.value_or(1.0 / std::sqrt(static_cast<double>(spec.d)));
    require(stddev > 0.0, "generate: entry_std must be positive");
    Matrix Z = draw_entries(spec.n, spec.d, spec.entries, stddev, rng);
    if (spec.sigma) {
      const Matrix& S = *spec.sigma;
      require(S.rows() == spec.d && S.cols() == spec.d, "generate: sigma must be d x d");
      require((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff()),
              "generate: sigma is not symmetric");
      Eigen::LLT<Matrix> llt(S);
      require(llt.info() == Eigen::Success, "generate: sigma is not positive definite");
      // X sigma = Z, so X = Z sigma^{-1}; solve sigma' X' = Z'
      ds.X = llt.solve(Z.transpose()).transpose();
      ds.sigma = S;
    } else {
      ds.X = std::move(Z);
    }
  }
  if (spec.normalize) {
    for (Index i = 0; i < spec.n; ++i) {
      const double norm = ds.X.row(i).norm();
      if (norm > 1.0) ds.X.row(i) /= norm;
    }
  }
  return ds;
}

Dataset label(Dataset ds, const Target& target) {
  require(target.w_star.size() == ds.d(), "label: w_star dimension mismatch");
  require(target.w_star.allFinite(), "label: w_star must be finite");
  const Vector t = ds.X * target.w_star;
  ds.Y = t.unaryExpr([&](double v) { return apply_link(target.link, v); });
  ds.c_star = target.w_star.norm();
  return ds;
}

Dataset binarize(Dataset ds) {
  require(ds.labelled(), "binarize: dataset has no labels");
  ds.Y = ds.Y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  return ds;
}

Dataset flip_labels(Dataset ds, double ratio, std::uint64_t seed) {
  require(ratio >= 0.0 && ratio <= 1.0, "flip_labels: ratio must lie in [0, 1]");
  require(ds.labelled(), "flip_labels: dataset has no labels");
  for (Index i = 0; i < ds.n(); ++i)
    require(ds.Y(i) == 1.0 || ds.Y(i) == -1.0, "flip_labels: labels must be +-1");
  const auto n = static_cast<std::size_t>(ds.n());
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  // partial Fisher-Yates: the first `count` slots are a uniform sample
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
    ds.Y(order[i]) = -ds.Y(order[i]);
  }
  return ds;
}

double separation_distance(const Matrix& X) {
  require(X.rows() >= 2, "separation_distance: need at least two points");
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = i + 1; j < X.rows(); ++j) best = std::min(best, (X.row(i) - X.row(j)).norm());
  require(best > kDuplicateThreshold, "separation_distance: duplicate rows");
  return 0.5 * best;
}

void write_csv(const Dataset& ds, std::ostream& out) {
  for (Index j = 0; j < ds.d(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
  out << ",y\n";
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.d(); ++j) out << (j ? "," : "") << format_fixed17(ds.X(i, j));
    out << ',' << (ds.labelled() ? format_fixed17(ds.Y(i)) : std::string("nan")) << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("read_csv: empty input");
  const auto columns = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
  require(columns >= 2, "read_csv: header needs at least one input column and y");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
    require(static_cast<Index>(row.size()) == columns, "read_csv: ragged row");
    rows.push_back(std::move(row));
  }
  Dataset ds;
  const auto n = static_cast<Index>(rows.size());
  ds.X.resize(n, columns - 1);
  ds.Y.resize(n);
  bool has_labels = true;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j + 1 < columns; ++j) ds.X(i, j) = rows[i][j];
    ds.Y(i) = rows[i][columns - 1];
    if (std::isnan(ds.Y(i))) has_labels = false;
  }
  if (!has_labels) ds.Y.resize(0);
  return ds;
}

}  // namespace lgilab
