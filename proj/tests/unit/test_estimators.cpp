#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vrsd/estimators.hpp"
#include "vrsd/rng.hpp"

using namespace vrsd;

namespace {

Problem make(std::size_t n, std::size_t d, std::uint64_t seed, double smooth_l2, double sparsity = 1.0) {
  auto ds = std::make_shared<const Dataset>(synth_regression(n, d, sparsity, 0.3, seed).data);
  return Problem(ds, Regularizer::none(), smooth_l2);
}

Vector randn(Rng& rng, std::size_t d) {
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
  return v;
}

double inf_dist(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

class BothStorageKinds : public ::testing::TestWithParam<double> {};

}  // namespace

TEST_P(BothStorageKinds, SnapshotGradientIsFullGradient) {
  Rng rng(1);
  const Problem p = make(30, 6, 1, GetParam(), 0.6);
  const Vector xt = randn(rng, 6);
  const SvrgSnapshot s = SvrgSnapshot::at(p, xt);
  EXPECT_LE(inf_dist(s.mu, full_grad(p, xt)), 1e-12);
}

TEST_P(BothStorageKinds, SvrgAtSnapshotReturnsMu) {
  Rng rng(2);
  const Problem p = make(30, 6, 2, GetParam());
  const Vector xt = randn(rng, 6);
  const SvrgSnapshot s = SvrgSnapshot::at(p, xt);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Estimate e = svrg_estimate(s, p, i, xt);
    EXPECT_EQ(e.grad, s.mu);
    EXPECT_EQ(e.residual, Vector::Zero(6));
  }
}

TEST_P(BothStorageKinds, SvrgUnbiasedAndResidualExact) {
  Rng rng(3);
  const Problem p = make(30, 6, 3, GetParam(), 0.5);
  const auto dn = oracle::densify(p.data());
  const Vector x = randn(rng, 6), xt = randn(rng, 6);
  const SvrgSnapshot s = SvrgSnapshot::at(p, xt);
  Vector mean = Vector::Zero(6);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Estimate e = svrg_estimate(s, p, i, x);
    // Exact up to the rounding of the single addition that formed grad.
    const double ulp = 4 * std::numeric_limits<double>::epsilon() * e.grad.cwiseAbs().maxCoeff();
    EXPECT_LE(inf_dist(e.grad - s.mu, e.residual), ulp);
    const auto ii = static_cast<Eigen::Index>(i);
    const oracle::Weights w{GetParam(), 0, 0};
    EXPECT_LE(inf_dist(e.residual, oracle::component_grad(dn, w, ii, x) - oracle::component_grad(dn, w, ii, xt)),
              1e-12);
    mean += e.grad;
  }
  EXPECT_LE(inf_dist(mean / 30.0, oracle::smooth_grad(dn, {GetParam(), 0, 0}, x)), 1e-12);
}

TEST_P(BothStorageKinds, MinibatchCases) {
  Rng rng(4);
  const Problem p = make(6, 4, 4, GetParam());
  const Vector x = randn(rng, 4), xt = randn(rng, 4);
  const SvrgSnapshot s = SvrgSnapshot::at(p, xt);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::vector<std::size_t> one{i};
    EXPECT_LE(inf_dist(svrg_estimate_minibatch(s, p, one, x), svrg_estimate(s, p, i, x).grad), 1e-15);
  }
  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  EXPECT_LE(inf_dist(svrg_estimate_minibatch(s, p, all, x), full_grad(p, x)), 1e-12);
  Vector mean = Vector::Zero(4);
  int count = 0;
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = a + 1; b < 6; ++b, ++count) {
      const std::vector<std::size_t> pair{a, b};
      mean += svrg_estimate_minibatch(s, p, pair, x);
    }
  EXPECT_EQ(count, 15);
  EXPECT_LE(inf_dist(mean / count, full_grad(p, x)), 1e-12);
}

TEST_P(BothStorageKinds, SagaFreshTableAtSamePoint) {
  Rng rng(5);
  const Problem p = make(20, 5, 5, GetParam());
  const Vector x = randn(rng, 5);
  SagaTable t(p, x);
  EXPECT_EQ(t.dense(), GetParam() > 0.0);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Estimate e = t.peek(p, i, x);
    EXPECT_EQ(e.grad, t.average());
    EXPECT_LE(inf_dist(e.grad, full_grad(p, x)), 1e-12);
  }
}

TEST_P(BothStorageKinds, SagaRefreshAllAtFixedPoint) {
  Rng rng(6);
  const Problem p = make(20, 5, 6, GetParam());
  SagaTable t(p, randn(rng, 5));
  const Vector x = randn(rng, 5);
  for (std::size_t i = 0; i < p.n(); ++i) t.estimate_and_update(p, i, x);
  EXPECT_LE(inf_dist(t.average(), full_grad(p, x)), 1e-12);
  for (std::size_t i = 0; i < p.n(); ++i) EXPECT_LE(inf_dist(t.stored_gradient(p, i), component_grad(p, i, x)), 1e-12);
}

TEST_P(BothStorageKinds, SagaConditionallyUnbiased) {
  Rng rng(7);
  const Problem p = make(25, 5, 7, GetParam(), 0.7);
  SagaTable t(p, randn(rng, 5));
  for (int k = 0; k < 40; ++k) t.estimate_and_update(p, rng.uniform_index(p.n()), randn(rng, 5));
  const Vector x = randn(rng, 5);
  Vector mean = Vector::Zero(5);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Estimate e = t.peek(p, i, x);
    EXPECT_LE(inf_dist(e.residual, component_grad(p, i, x) - t.stored_gradient(p, i)), 1e-12);
    mean += e.grad;
  }
  EXPECT_LE(inf_dist(mean / 25.0, full_grad(p, x)), 1e-12);
}

TEST_P(BothStorageKinds, SagaUpdateSemantics) {
  Rng rng(8);
  const Problem p = make(10, 4, 8, GetParam());
  SagaTable t(p, randn(rng, 4));
  const Vector x = randn(rng, 4);
  const Vector old_avg = t.average();
  const Vector old_g = t.stored_gradient(p, 3);
  const Estimate e = t.estimate_and_update(p, 3, x);
  EXPECT_LE(inf_dist(e.grad, component_grad(p, 3, x) - old_g + old_avg), 1e-12);
  EXPECT_LE(inf_dist(t.stored_gradient(p, 3), component_grad(p, 3, x)), 1e-12);
  EXPECT_LE(inf_dist(t.average(), old_avg + (component_grad(p, 3, x) - old_g) / 10.0), 1e-12);
}

TEST_P(BothStorageKinds, SagaAverageDoesNotDrift) {
  Rng rng(9);
  const Problem p = make(40, 6, 9, GetParam(), 0.5);
  SagaTable t(p, randn(rng, 6));
  for (std::size_t k = 0; k < 10 * p.n() + 7; ++k) t.estimate_and_update(p, rng.uniform_index(p.n()), randn(rng, 6));
  EXPECT_LE(inf_dist(t.average(), t.recomputed_average(p)), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Storage, BothStorageKinds, ::testing::Values(0.0, 0.05),
                         [](const auto& info) { return info.param > 0.0 ? "dense" : "scalar"; });

TEST(Estimators, Errors) {
  Rng rng(10);
  const Problem p = make(5, 3, 10, 0.0);
  const SvrgSnapshot s = SvrgSnapshot::at(p, Vector::Zero(3));
  EXPECT_THROW(svrg_estimate(s, p, 5, Vector::Zero(3)), std::out_of_range);
  EXPECT_THROW(svrg_estimate(s, p, 0, Vector::Zero(2)), std::invalid_argument);
  EXPECT_THROW(svrg_estimate_minibatch(s, p, std::vector<std::size_t>{}, Vector::Zero(3)), std::invalid_argument);
  EXPECT_THROW(svrg_estimate_minibatch(s, p, std::vector<std::size_t>{9}, Vector::Zero(3)), std::out_of_range);
  SagaTable t(p, Vector::Zero(3));
  EXPECT_THROW(t.peek(p, 7, Vector::Zero(3)), std::out_of_range);
  EXPECT_THROW(t.estimate_and_update(p, 5, Vector::Zero(3)), std::out_of_range);
  EXPECT_THROW(SvrgSnapshot::at(p, Vector::Zero(4)), std::invalid_argument);
}
