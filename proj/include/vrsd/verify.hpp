#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vrsd/estimators.hpp"
#include "vrsd/problem.hpp"
#include "vrsd/rng.hpp"
#include "vrsd/solvers.hpp"
#include "vrsd/sufficient_decrease.hpp"

namespace vrsd {

using ThetaFn = std::function<ThetaResult(const SdContext&, const Problem&, const Vector&, double)>;

struct VerifyOptions {
  bool quick = false;
  std::uint64_t seed = 7;
  /// Replaceable so that the battery itself can be tested against a bad rule.
  ThetaFn theta_ridge_fn = theta_ridge;
  ThetaFn theta_lasso_fn = theta_lasso;
};

struct InvariantOutcome {
  std::string name;
  bool passed = true;
  std::string detail;
};

namespace detail {

struct SmallInstance {
  Problem problem;
  SdContext ctx;
};

inline SmallInstance random_instance(Rng& rng, bool lasso, double eta) {
  const std::size_t n = 5 + rng.uniform_index(26);
  const std::size_t d = 2 + rng.uniform_index(7);
  auto syn = synth_regression(n, d, 1.0, 0.3, rng.next_u64());
  auto data = std::make_shared<const Dataset>(std::move(syn.data));
  const double lam = std::pow(10.0, -3.0 + 2.5 * rng.uniform01());
  Problem p = lasso ? Problem(data, Regularizer::lasso(lam), 0.0) : Problem(data, Regularizer::none(), lam);
  SdContext ctx;
  ctx.pre = SdPrecompute::build(*data, FastNormConfig{NormMode::Exact});
  ctx.zeta = step_plan_for_eta(p.lipschitz(), eta / p.lipschitz()).zeta;
  return {std::move(p), ctx};
}

// Points that push theta below 0 and above 1 as well as generic ones.
inline Vector probe_point(Rng& rng, const Problem& p, int kind) {
  const auto d = static_cast<Eigen::Index>(p.d());
  Vector x(d);
  for (Eigen::Index j = 0; j < d; ++j) x[j] = rng.normal();
  if (kind == 0) return x;
  Vector atb = Vector::Zero(d);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const RowView row = p.data().row(i);
    for (std::size_t k = 0; k < row.size(); ++k) atb[row.index[k]] += p.data().label(i) * row.value[k];
  }
  return kind == 1 ? Vector(-atb + 0.01 * x) : Vector(0.02 * atb + 1e-4 * x);
}

inline double phi_value(const Problem& p, const Vector& x, double theta, double zeta, double pn) {
  const double g = 1.0 - theta;
  return objective(p, theta * x) + 0.5 * zeta * g * g * pn;
}

}  // namespace detail

/// Mean over i of the SVRG and SAGA estimates equals the full gradient.
inline InvariantOutcome check_estimator_unbiasedness(const VerifyOptions& opt) {
  InvariantOutcome out{"estimator_unbiasedness", true, {}};
  Rng rng(opt.seed);
  const int trials = opt.quick ? 5 : 20;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto inst = detail::random_instance(rng, t % 2 == 1, 0.5);
    const Problem& p = inst.problem;
    const Vector x = detail::probe_point(rng, p, 0);
    const Vector xt = detail::probe_point(rng, p, 0);
    const SvrgSnapshot snap = SvrgSnapshot::at(p, xt);
    SagaTable table(p, xt);
    for (int k = 0; k < 10; ++k) table.estimate_and_update(p, rng.uniform_index(p.n()), detail::probe_point(rng, p, 0));
    Vector svrg_mean = Vector::Zero(x.size());
    Vector saga_mean = Vector::Zero(x.size());
    for (std::size_t i = 0; i < p.n(); ++i) {
      svrg_mean += svrg_estimate(snap, p, i, x).grad;
      saga_mean += table.peek(p, i, x).grad;
    }
    const double n = static_cast<double>(p.n());
    const Vector g = full_grad(p, x);
    const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (svrg_mean / n - g).lpNorm<Eigen::Infinity>() / scale);
    worst = std::max(worst, (saga_mean / n - g).lpNorm<Eigen::Infinity>() / scale);
  }
  out.passed = worst <= 1e-12;
  out.detail = "max deviation " + detail::format_double(worst);
  return out;
}

/// Property 1 for the closed-form coefficients on random triples.
inline InvariantOutcome check_property1_sampling(const VerifyOptions& opt) {
  InvariantOutcome out{"property1_sampling", true, {}};
  Rng rng(opt.seed + 1);
  const int trials = opt.quick ? 100 : 500;
  int violations = 0;
  for (int t = 0; t < trials; ++t) {
    const bool lasso = t % 2 == 1;
    auto inst = detail::random_instance(rng, lasso, 0.1 + 0.8 * rng.uniform01());
    const Vector x = detail::probe_point(rng, inst.problem, t % 3);
    const double pn = std::pow(10.0, -3.0 + 4.0 * rng.uniform01());
    const ThetaResult r = lasso ? opt.theta_lasso_fn(inst.ctx, inst.problem, x, pn)
                                : opt.theta_ridge_fn(inst.ctx, inst.problem, x, pn);
    if (!verify_property1(inst.problem, x, r.theta, inst.ctx.zeta, pn)) ++violations;
  }
  out.passed = violations == 0;
  out.detail = std::to_string(violations) + " violations in " + std::to_string(trials);
  return out;
}

/// Closed forms against a direct minimization of the scalar objective:
/// exact parabola fit for ridge, branch-wise stationary points for Lasso.
inline InvariantOutcome check_theta_oracle(const VerifyOptions& opt) {
  InvariantOutcome out{"theta_oracle_agreement", true, {}};
  Rng rng(opt.seed + 2);
  const int trials = opt.quick ? 60 : 300;
  double worst = 0.0;
  int below = 0, above = 0;
  for (int t = 0; t < trials; ++t) {
    const bool lasso = t % 2 == 1;
    auto inst = detail::random_instance(rng, lasso, 0.5);
    const Problem& p = inst.problem;
    const Vector x = detail::probe_point(rng, p, t % 3);
    const double pn = std::pow(10.0, -4.0 + 3.0 * rng.uniform01());
    const double z = inst.ctx.zeta;
    double oracle;
    if (!lasso) {
      const double fm = detail::phi_value(p, x, -1.0, z, pn);
      const double f0 = detail::phi_value(p, x, 0.0, z, pn);
      const double fp = detail::phi_value(p, x, 1.0, z, pn);
      const double a = 0.5 * (fm + fp) - f0;
      const double b = 0.5 * (fp - fm);
      oracle = -b / (2.0 * a);
    } else {
      // Smooth part a/2 t^2 - b t + const, plus lam |t| |x|_1.
      const double n = static_cast<double>(p.n());
      double ax2 = 0.0, btax = 0.0;
      for (std::size_t i = 0; i < p.n(); ++i) {
        const double v = p.data().row(i).dot(x);
        ax2 += v * v;
        btax += p.data().label(i) * v;
      }
      const double a = ax2 / n + z * pn;
      const double b = btax / n + z * pn;
      const double l = p.reg().l1 * x.lpNorm<1>();
      const double pos = (b - l) / a, neg = (b + l) / a;
      oracle = pos > 0.0 ? pos : (neg < 0.0 ? neg : 0.0);
    }
    const ThetaResult r = lasso ? opt.theta_lasso_fn(inst.ctx, p, x, pn) : opt.theta_ridge_fn(inst.ctx, p, x, pn);
    if (oracle < 0.0) ++below;
    if (oracle > 1.0) ++above;
    worst = std::max(worst, std::abs(r.theta - oracle) / std::max(1.0, std::abs(oracle)));
  }
  out.passed = worst <= 1e-6;
  out.detail = "max relative error " + detail::format_double(worst) + " (" + std::to_string(below) +
               " cases theta<0, " + std::to_string(above) + " cases theta>1)";
  return out;
}

/// z = prox(y) satisfies (y - z)/eta in the subdifferential of r at z.
inline InvariantOutcome check_prox_optimality(const VerifyOptions& opt) {
  InvariantOutcome out{"prox_optimality", true, {}};
  Rng rng(opt.seed + 3);
  const int trials = opt.quick ? 200 : 2000;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double l1 = t % 3 == 0 ? 0.0 : rng.uniform01();
    const double l2 = t % 3 == 1 ? 0.0 : rng.uniform01();
    const Regularizer reg = Regularizer::elastic_net(l2, l1);
    const double eta = 0.01 + rng.uniform01();
    const double y = 3.0 * rng.normal();
    const double zv = reg.prox_coord(eta, y);
    const double resid = (y - zv) / eta - l2 * zv;  // must lie in l1 * d|z|
    double err;
    if (zv > 0.0) err = std::abs(resid - l1);
    else if (zv < 0.0) err = std::abs(resid + l1);
    else err = std::max(0.0, std::abs(resid) - l1);
    worst = std::max(worst, err);
  }
  out.passed = worst <= 1e-12;
  out.detail = "max subgradient residual " + detail::format_double(worst);
  return out;
}

/// S epochs of SVRG with m = 2n cost exactly 3S passes.
inline InvariantOutcome check_pass_accounting(const VerifyOptions& opt) {
  InvariantOutcome out{"pass_accounting", true, {}};
  auto syn = synth_regression(37, 4, 1.0, 0.1, opt.seed);
  Problem p(std::make_shared<const Dataset>(std::move(syn.data)), Regularizer::none(), 1e-2);
  SolverConfig c;
  c.algorithm = Algorithm::Svrg;
  c.epochs = 4;
  c.plan = step_plan_for_eta(p.lipschitz(), 0.1);
  c.seed = opt.seed;
  const SolverResult r = run_svrg(p, c);
  const double passes = r.trace.records.back().passes;
  out.passed = passes == 12.0;
  out.detail = "passes after 4 epochs = " + detail::format_double(passes);
  return out;
}

/// theta off and sigma = 1 turns SVRG-SD into average-snapshot Prox-SVRG.
inline InvariantOutcome check_reduction(const VerifyOptions& opt) {
  InvariantOutcome out{"sd_reduction", true, {}};
  auto syn = synth_regression(50, 5, 1.0, 0.1, opt.seed);
  Problem p(std::make_shared<const Dataset>(std::move(syn.data)), Regularizer::lasso(1e-3), 0.0);
  SolverConfig c;
  c.epochs = 3;
  c.plan = step_plan_for_eta(p.lipschitz(), 0.3, 1.0);
  c.seed = opt.seed;
  c.theta_mode = ThetaMode::Off;
  c.snapshot = SnapshotRule::Average;
  std::vector<Vector> a, b;
  c.on_iterate = [&](std::size_t, std::size_t, const Vector& x) { a.push_back(x); };
  run_svrg_sd(p, c);
  c.on_iterate = [&](std::size_t, std::size_t, const Vector& x) { b.push_back(x); };
  run_prox_svrg(p, c);
  std::size_t mismatches = a.size() == b.size() ? 0 : 1;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
    for (Eigen::Index j = 0; j < a[k].size(); ++j)
      if (!same_bits(a[k][j], b[k][j])) ++mismatches;
  out.passed = mismatches == 0;
  out.detail = std::to_string(a.size()) + " iterates compared, " + std::to_string(mismatches) + " mismatches";
  return out;
}

inline std::vector<InvariantOutcome> run_invariant_battery(const VerifyOptions& opt = {}) {
  return {check_estimator_unbiasedness(opt), check_property1_sampling(opt), check_theta_oracle(opt),
          check_prox_optimality(opt), check_pass_accounting(opt), check_reduction(opt)};
}

}  // namespace vrsd
