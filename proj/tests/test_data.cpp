#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lgilab/data.hpp"
#include "lgilab/error.hpp"
#include "oracles.hpp"

using namespace lgilab;

namespace {

Dataset signed_labels(Index n, std::uint64_t seed) {
  DataSpec spec;
  spec.n = n;
  spec.d = 3;
  Dataset ds = generate(spec, seed);
  Target t;
  t.w_star = Vector::Ones(3);
  return binarize(label(std::move(ds), t));
}

Index flips(const Dataset& before, const Dataset& after) {
  Index count = 0;
  for (Index i = 0; i < before.n(); ++i) count += before.Y(i) != after.Y(i);
  return count;
}

}  // namespace

TEST(Data, SphereRowsHaveUnitNorm) {
  DataSpec spec;
  spec.kind = DataKind::UniformSphere;
  spec.n = 100;
  spec.d = 200;
  const Dataset ds = generate(spec, 7);
  for (Index i = 0; i < ds.n(); ++i) EXPECT_NEAR(ds.X.row(i).norm(), 1.0, 1e-12);
}

TEST(Data, GaussianNormsConcentrateAndNormalize) {
  DataSpec spec;
  spec.kind = DataKind::Gaussian;
  spec.n = 50;
  spec.d = 100;
  spec.sigma = Matrix::Identity(100, 100);
  spec.entry_std = 0.5;
  const Dataset raw = generate(spec, 3);
  double mean_norm = 0.0;
  for (Index i = 0; i < raw.n(); ++i) mean_norm += raw.X.row(i).norm() / 50.0;
  EXPECT_NEAR(mean_norm, std::sqrt(100.0) * 0.5, 0.5);
  spec.normalize = true;
  const Dataset normalized = generate(spec, 3);
  for (Index i = 0; i < normalized.n(); ++i) EXPECT_LE(normalized.X.row(i).norm(), 1.0 + 1e-15);
}

TEST(Data, SameSeedSameMatrix) {
  DataSpec spec;
  spec.n = 20;
  spec.d = 5;
  EXPECT_EQ(generate(spec, 5).X, generate(spec, 5).X);
  EXPECT_NE(generate(spec, 5).X, generate(spec, 6).X);
}

TEST(Data, EntryLawsProduceRequestedShapes) {
  for (EntryLaw law : {EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::Uniform}) {
    DataSpec spec;
    spec.kind = DataKind::Gaussian;
    spec.entries = law;
    spec.n = 7;
    spec.d = 4;
    const Dataset ds = generate(spec, 1);
    EXPECT_EQ(ds.n(), 7);
    EXPECT_EQ(ds.d(), 4);
    EXPECT_TRUE(ds.X.allFinite());
  }
}

TEST(Data, NonPositiveDefiniteCovarianceRejected) {
  DataSpec spec;
  spec.kind = DataKind::Gaussian;
  spec.n = 3;
  spec.d = 2;
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  spec.sigma = bad;
  EXPECT_THROW(generate(spec, 0), PreconditionError);
}

TEST(Data, LinearLabel) {
  Dataset ds;
  ds.X = Matrix::Zero(1, 3);
  ds.X(0, 0) = 0.3;
  ds.X(0, 1) = 0.7;
  Target t;
  t.w_star = Vector::Unit(3, 0);
  const Dataset labelled = label(ds, t);
  EXPECT_DOUBLE_EQ(labelled.Y(0), 0.3);
  EXPECT_DOUBLE_EQ(*labelled.c_star, 1.0);
}

TEST(Data, ZeroTargetGivesZeroLabels) {
  DataSpec spec;
  spec.n = 10;
  spec.d = 4;
  Target t;
  t.w_star = Vector::Zero(4);
  const Dataset ds = label(generate(spec, 2), t);
  EXPECT_EQ(ds.Y.norm(), 0.0);
  EXPECT_EQ(*ds.c_star, 0.0);
}

TEST(Data, UnknownLinkRejected) { EXPECT_THROW(parse_link("relu"), ConfigError); }

TEST(DataProperty, LabelNormBoundedByTargetNormAndSpectrum) {
  std::mt19937_64 rng(4);
  for (Link link : {Link::Identity, Link::Tanh, Link::ScaledArctan}) {
    for (int trial = 0; trial < 20; ++trial) {
      DataSpec spec;
      spec.n = 30;
      spec.d = 10;
      Target t;
      t.link = link;
      t.w_star = oracle::random_matrix(10, 1, rng);
      const Dataset ds = label(generate(spec, static_cast<std::uint64_t>(trial)), t);
      const double lam = oracle::jacobi_max(ds.X * ds.X.transpose());
      EXPECT_LE(ds.Y.norm(), *ds.c_star * std::sqrt(lam) * (1.0 + 1e-12));
    }
  }
}

TEST(DataProperty, BoundedNormRegime) {
  DataSpec spec;
  spec.n = 40;
  spec.d = 6;
  Target t;
  t.link = Link::Tanh;
  t.w_star = Vector::Constant(6, 0.4);
  const Dataset ds = label(generate(spec, 9), t);
  for (Index i = 0; i < ds.n(); ++i) {
    EXPECT_LE(ds.X.row(i).norm(), 1.0 + 1e-12);
    EXPECT_LE(std::abs(ds.Y(i)), 1.0);
  }
}

TEST(Data, FlipRatioZeroIsIdentity) {
  const Dataset ds = signed_labels(10, 1);
  EXPECT_EQ(flip_labels(ds, 0.0, 4).Y, ds.Y);
}

TEST(Data, FlipRatioOneNegatesAll) {
  const Dataset ds = signed_labels(10, 1);
  EXPECT_EQ(flip_labels(ds, 1.0, 4).Y, -ds.Y);
}

TEST(Data, FlipHalfOfTen) {
  const Dataset ds = signed_labels(10, 1);
  EXPECT_EQ(flips(ds, flip_labels(ds, 0.5, 4)), 5);
}

TEST(DataProperty, FlipCountIsFloorOfRatio) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 60);
    const double ratio = u(rng);
    const Dataset ds = signed_labels(n, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(flips(ds, flip_labels(ds, ratio, rng())), static_cast<Index>(std::floor(ratio * static_cast<double>(n))));
  }
}

TEST(Data, FlipRejectsNonBinaryLabels) {
  Dataset ds;
  ds.X = Matrix::Zero(2, 1);
  ds.Y = Vector::Constant(2, 0.5);
  EXPECT_THROW(flip_labels(ds, 0.5, 0), PreconditionError);
}

TEST(Data, SeparationDistanceExamples) {
  Matrix a(2, 1);
  a << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(separation_distance(a), 0.5);
  Matrix b(3, 2);
  b << 0.0, 0.0, 3.0, 4.0, 0.0, 1.0;
  EXPECT_DOUBLE_EQ(separation_distance(b), 0.5);
  for (Index n : {2, 5, 17}) {
    Matrix grid(n, 1);
    for (Index i = 0; i < n; ++i) grid(i, 0) = static_cast<double>(i);
    EXPECT_DOUBLE_EQ(separation_distance(grid), 0.5);
  }
}

TEST(Data, SeparationDistanceRejectsDuplicates) {
  Matrix a(3, 2);
  a << 0.0, 0.0, 1.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(separation_distance(a), PreconditionError);
}

TEST(DataProperty, SeparationDistanceMatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix X = oracle::random_matrix(2 + trial % 15, 3, rng);
    double best = INFINITY;
    for (Index i = 0; i < X.rows(); ++i)
      for (Index j = 0; j < i; ++j) best = std::min(best, (X.row(i) - X.row(j)).norm());
    EXPECT_DOUBLE_EQ(separation_distance(X), best / 2.0);
  }
}

TEST(DataProperty, CsvRoundTripIsExact) {
  DataSpec spec;
  spec.n = 12;
  spec.d = 4;
  Target t;
  t.link = Link::ScaledArctan;
  t.w_star = Vector::Constant(4, 0.3);
  const Dataset ds = label(generate(spec, 11), t);
  std::stringstream ss;
  write_csv(ds, ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "x1,x2,x3,x4,y");
  const Dataset back = read_csv(ss);
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.Y, ds.Y);
}

TEST(DataProperty, SphereSpectrumStaysBoundedAtFixedAspect) {
  // Report-only sanity: lambda_max(XX')/n at n/d = 1/2 stays O(1).
  for (Index n : {20, 40, 80}) {
    DataSpec spec;
    spec.n = n;
    spec.d = 2 * n;
    const Dataset ds = generate(spec, static_cast<std::uint64_t>(n));
    const double ratio = oracle::jacobi_max(ds.X * ds.X.transpose()) / static_cast<double>(n);
    EXPECT_LT(ratio, 1.0);
  }
}
