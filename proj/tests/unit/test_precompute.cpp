#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vrsd/precompute.hpp"

using namespace vrsd;

namespace {

Vector randn(Rng& rng, std::size_t d) {
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
  return v;
}

Dataset dense_dataset(const Eigen::MatrixXd& a) {
  std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      rows[static_cast<std::size_t>(i)].push_back({static_cast<std::uint32_t>(j), a(i, j)});
  return Dataset::from_rows(static_cast<std::size_t>(a.cols()), rows, std::vector<double>(rows.size(), 1.0));
}

double dense_norm(const Dataset& ds, const Vector& x) { return (oracle::densify(ds).a * x).norm(); }

}  // namespace

TEST(ComputeBtA, IdentityRows) {
  std::vector<std::vector<SparseEntry>> rows;
  for (std::uint32_t i = 0; i < 4; ++i) rows.push_back({{i, 1.0}});
  const Dataset ds = Dataset::from_rows(4, rows, {1.5, -2.0, 0.0, 3.25});
  EXPECT_EQ(compute_btA(ds), (Vector(4) << 1.5, -2.0, 0.0, 3.25).finished());
}

TEST(ComputeBtA, ZeroLabels) {
  const Dataset ds = synth_regression(20, 6, 1.0, 0.1, 1).data.with_labels(std::vector<double>(20, 0.0));
  EXPECT_EQ(compute_btA(ds), Vector::Zero(6));
}

TEST(ComputeBtA, MatchesDense) {
  const Dataset ds = synth_regression(20, 6, 0.6, 0.1, 2).data;
  const auto dn = oracle::densify(ds);
  EXPECT_LE((compute_btA(ds) - dn.a.transpose() * dn.b).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(PartialSvd, ExactlyRankTwo) {
  Rng rng(3);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(40, 2) * Eigen::MatrixXd::Random(2, 12);
  const Dataset ds = dense_dataset(a);
  const FastNorm fn = partial_svd(ds, 0.995, 10, 1);
  EXPECT_EQ(fn.mode, NormMode::LowRank);
  EXPECT_EQ(fn.rank, 2);
  EXPECT_GE(fn.energy_fraction, 0.9999);
  for (int t = 0; t < 20; ++t) {
    const Vector x = randn(rng, 12);
    EXPECT_NEAR(norm_Ax(fn, ds, x), dense_norm(ds, x), 1e-9 * dense_norm(ds, x));
  }
}

TEST(PartialSvd, FullTargetFallsBackUnlessFullRank) {
  const Dataset ds = synth_regression(30, 8, 1.0, 0.1, 4).data;
  EXPECT_EQ(partial_svd(ds, 1.0, 5, 1).mode, NormMode::Exact);
  const FastNorm full = partial_svd(ds, 1.0, 8, 1);
  EXPECT_EQ(full.mode, NormMode::LowRank);
  EXPECT_EQ(full.rank, 8);
}

TEST(PartialSvd, FullRankFactorIsExact) {
  Rng rng(5);
  const Dataset ds = synth_regression(50, 8, 1.0, 0.1, 5).data;
  const FastNorm fn = partial_svd(ds, 1.0, 8, 7);
  for (int t = 0; t < 100; ++t) {
    const Vector x = randn(rng, 8);
    EXPECT_NEAR(norm_Ax(fn, ds, x), dense_norm(ds, x), 1e-6 * dense_norm(ds, x));
  }
}

TEST(PartialSvd, DeterministicAndUnderestimates) {
  Rng rng(6);
  const Dataset ds = synth_regression(200, 40, 1.0, 0.1, 6, SynthOptions{1.0, false}).data;
  const FastNorm a = partial_svd(ds, 0.995, 30, 11), b = partial_svd(ds, 0.995, 30, 11);
  ASSERT_EQ(a.mode, NormMode::LowRank);
  EXPECT_EQ(a.factor, b.factor);
  EXPECT_GE(a.energy_fraction, 0.995);
  EXPECT_LT(a.rank, 30);
  for (int t = 0; t < 200; ++t) {
    const Vector x = randn(rng, 40);
    EXPECT_LE(norm_Ax(a, ds, x), dense_norm(ds, x) * (1 + 1e-9));
  }
}

TEST(PartialSvd, Errors) {
  const Dataset ds = synth_regression(10, 4, 1.0, 0.1, 1).data;
  EXPECT_THROW(partial_svd(Dataset{}, 0.9, 1, 1), std::invalid_argument);
  EXPECT_THROW(partial_svd(ds, 0.0, 2, 1), std::invalid_argument);
  EXPECT_THROW(partial_svd(ds, 1.1, 2, 1), std::invalid_argument);
  EXPECT_THROW(partial_svd(ds, 0.9, 5, 1), std::invalid_argument);
  EXPECT_THROW(partial_svd(ds, 0.9, 0, 1), std::invalid_argument);
}

TEST(NormAx, ZeroVectorEveryMode) {
  const Dataset ds = synth_regression(30, 6, 0.5, 0.1, 7).data;
  for (const FastNorm& fn : {exact_norm(ds), lazy_norm(), partial_svd(ds, 0.9, 6, 1)})
    EXPECT_EQ(norm_Ax(fn, ds, Vector::Zero(6)), 0.0);
}

TEST(NormAx, LazyMatchesExactOnSparseData) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Dataset ds = synth_regression(80, 50, 0.05, 0.1, 100 + t).data;
    const Vector x = randn(rng, 50);
    const double e = norm_Ax(exact_norm(ds), ds, x);
    EXPECT_NEAR(norm_Ax(lazy_norm(), ds, x), e, 1e-12 * std::max(1.0, e));
    EXPECT_NEAR(e, dense_norm(ds, x), 1e-12 * std::max(1.0, e));
  }
}

TEST(NormAx, DimensionMismatch) {
  const Dataset ds = synth_regression(10, 4, 1.0, 0.1, 1).data;
  EXPECT_THROW(norm_Ax(lazy_norm(), ds, Vector::Zero(3)), std::invalid_argument);
}

TEST(FastNormConfig, AutoResolution) {
  EXPECT_EQ(resolve_norm_mode(synth_regression(100, 50, 0.05, 0.1, 1).data, NormMode::Auto), NormMode::LazySparse);
  EXPECT_EQ(resolve_norm_mode(synth_regression(100, 50, 1.0, 0.1, 1).data, NormMode::Auto), NormMode::Exact);
  EXPECT_EQ(resolve_norm_mode(synth_regression(10000, 40, 1.0, 0.1, 1).data, NormMode::Auto), NormMode::LowRank);
  EXPECT_EQ(resolve_norm_mode(synth_regression(10, 4, 1.0, 0.1, 1).data, NormMode::LazySparse), NormMode::LazySparse);
  EXPECT_EQ(norm_mode_from_string(to_string(NormMode::LowRank)), NormMode::LowRank);
  EXPECT_THROW(norm_mode_from_string("approx"), std::invalid_argument);
}
