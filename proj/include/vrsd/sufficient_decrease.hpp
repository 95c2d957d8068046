#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrsd/precompute.hpp"
#include "vrsd/problem.hpp"
#include "vrsd/rng.hpp"

namespace vrsd {

/// Problem-level data shared by every run on the same dataset.
struct SdPrecompute {
  Vector btA;
  FastNorm fastnorm;

  static std::shared_ptr<const SdPrecompute> build(const Dataset& ds, const FastNormConfig& cfg) {
    auto pre = std::make_shared<SdPrecompute>();
    pre->btA = compute_btA(ds);
    pre->fastnorm = build_fastnorm(ds, cfg);
    return pre;
  }
};

struct SdContext {
  std::shared_ptr<const SdPrecompute> pre;
  double zeta = 0.0;
};

enum class ThetaKind { ClosedFormLasso, ClosedFormRidge, Armijo, Skipped };

inline std::string to_string(ThetaKind k) {
  switch (k) {
    case ThetaKind::ClosedFormLasso: return "closed_form_lasso";
    case ThetaKind::ClosedFormRidge: return "closed_form_ridge";
    case ThetaKind::Armijo: return "armijo";
    case ThetaKind::Skipped: return "skipped";
  }
  return "?";
}

struct ThetaResult {
  double theta = 1.0;
  /// zeta (1-theta)^2 / 2 * |p|^2
  double decreased_by = 0.0;
  ThetaKind kind = ThetaKind::Skipped;
  /// Full objective evaluations spent (Armijo only).
  int objective_evals = 0;
};

inline constexpr double kThetaDenominatorFloor = 1e-30;

namespace detail {

inline ThetaResult make_theta(double theta, double zeta, double p_norm_sq, ThetaKind kind) {
  const double gap = 1.0 - theta;
  return {theta, 0.5 * zeta * gap * gap * p_norm_sq, kind, 0};
}

}  // namespace detail

/// argmin_theta F(theta x) + zeta/2 (1-theta)^2 |p|^2 for ridge-type F:
///   theta = (b^T A x/n + zeta|p|^2) / (|Ax|^2/n + zeta|p|^2 + lambda|x|^2)
/// with lambda the total quadratic weight.
inline ThetaResult theta_ridge(const SdContext& ctx, const Problem& p, const Vector& x,
                               double p_norm_sq) {
  if (p.reg().l1 != 0.0) throw std::invalid_argument("theta_ridge: problem has an L1 term");
  if (!(p_norm_sq >= 0.0)) throw std::invalid_argument("theta_ridge: |p|^2 must be >= 0");
  const double n = static_cast<double>(p.n());
  const double ax2 = norm_Ax_sq(ctx.pre->fastnorm, p.data(), x);
  const double zp = ctx.zeta * p_norm_sq;
  const double num = ctx.pre->btA.dot(x) / n + zp;
  const double den = ax2 / n + zp + p.total_l2() * x.squaredNorm();
  if (!(den >= kThetaDenominatorFloor)) return {};
  return detail::make_theta(num / den, ctx.zeta, p_norm_sq, ThetaKind::ClosedFormRidge);
}

/// Lasso version: the quadratic minimizer soft-thresholded at
///   tau = lambda |x|_1 / (|Ax|^2/n + zeta|p|^2).
inline ThetaResult theta_lasso(const SdContext& ctx, const Problem& p, const Vector& x,
                               double p_norm_sq) {
  if (p.total_l2() != 0.0) throw std::invalid_argument("theta_lasso: problem has an L2 term");
  if (!(p_norm_sq >= 0.0)) throw std::invalid_argument("theta_lasso: |p|^2 must be >= 0");
  const double n = static_cast<double>(p.n());
  const double ax2 = norm_Ax_sq(ctx.pre->fastnorm, p.data(), x);
  const double zp = ctx.zeta * p_norm_sq;
  const double den = ax2 / n + zp;
  if (!(den >= kThetaDenominatorFloor)) return {};
  const double center = (ctx.pre->btA.dot(x) / n + zp) / den;
  const double tau = p.reg().l1 * x.lpNorm<1>() / den;
  return detail::make_theta(soft_threshold(tau, center), ctx.zeta, p_norm_sq,
                            ThetaKind::ClosedFormLasso);
}

/// Backtracking search for losses without a closed form.
///
/// With phi(theta) = F(theta x) + zeta/2 (1-theta)^2 |p|^2, the decrease
/// condition is phi(theta) <= phi(1) = F(x). The first candidate is the
/// minimizer of the parabola through phi(0), phi(1), phi(2); candidates then
/// contract towards 1 by a factor 0.5 and are probed on both sides of 1.
/// theta = 1 always satisfies the condition, so the search cannot fail.
inline ThetaResult theta_armijo(const Problem& p, const Vector& x, double p_norm_sq,
                                double zeta) {
  constexpr double kShrink = 0.5;
  constexpr int kMaxBacktracks = 30;
  int evals = 0;
  auto phi = [&](double theta) {
    ++evals;
    const double g = 1.0 - theta;
    return objective(p, theta * x) + 0.5 * zeta * g * g * p_norm_sq;
  };
  const double f1 = objective(p, x);
  ++evals;
  const double f0 = phi(0.0);
  const double f2 = phi(2.0);
  const double curv = 0.5 * (f0 - 2.0 * f1 + f2);
  const double slope = f1 - f0 - curv;
  double start = 1.0;
  if (curv > 0.0) {
    start = -slope / (2.0 * curv);
  } else if (f0 < f1 || f2 < f1) {
    start = f0 <= f2 ? 0.0 : 2.0;
  }

  ThetaResult res = detail::make_theta(1.0, zeta, p_norm_sq, ThetaKind::Armijo);
  if (std::isfinite(start) && start != 1.0) {
    double step = start - 1.0;
    for (int it = 0; it < kMaxBacktracks; ++it, step *= kShrink) {
      const double ahead = 1.0 + step;
      if (phi(ahead) <= f1) {
        res = detail::make_theta(ahead, zeta, p_norm_sq, ThetaKind::Armijo);
        break;
      }
      const double behind = 1.0 - step;
      if (phi(behind) <= f1) {
        res = detail::make_theta(behind, zeta, p_norm_sq, ThetaKind::Armijo);
        break;
      }
    }
  }
  res.objective_evals = evals;
  return res;
}

enum class ThetaMode { ClosedForm, Armijo, Off };

inline std::string to_string(ThetaMode m) {
  switch (m) {
    case ThetaMode::ClosedForm: return "closed";
    case ThetaMode::Armijo: return "armijo";
    case ThetaMode::Off: return "off";
  }
  return "?";
}

inline ThetaMode theta_mode_from_string(const std::string& s) {
  if (s == "closed") return ThetaMode::ClosedForm;
  if (s == "armijo") return ThetaMode::Armijo;
  if (s == "off") return ThetaMode::Off;
  throw std::invalid_argument("unknown theta mode '" + s + "' (closed|armijo|off)");
}

/// Closed form when one exists (ridge or Lasso), Armijo otherwise.
inline ThetaResult solve_theta(const SdContext& ctx, const Problem& p, const Vector& x,
                               double p_norm_sq, ThetaMode mode) {
  switch (mode) {
    case ThetaMode::Off: return {};
    case ThetaMode::Armijo: return theta_armijo(p, x, p_norm_sq, ctx.zeta);
    case ThetaMode::ClosedForm:
      if (p.reg().l1 == 0.0) return theta_ridge(ctx, p, x, p_norm_sq);
      if (p.total_l2() == 0.0) return theta_lasso(ctx, p, x, p_norm_sq);
      return theta_armijo(p, x, p_norm_sq, ctx.zeta);
  }
  return {};
}

/// F(theta x) <= F(x) - zeta (1-theta)^2/2 |p|^2, up to 1e-9 max(1, |F(x)|).
inline bool verify_property1(const Problem& p, const Vector& x, double theta, double zeta,
                             double p_norm_sq) {
  const double fx = objective(p, x);
  const double g = 1.0 - theta;
  const double tol = 1e-9 * std::max(1.0, std::abs(fx));
  return objective(p, theta * x) <= fx - 0.5 * zeta * g * g * p_norm_sq + tol;
}

/// floor(m / 1000), at least 1.
inline std::size_t default_sd_count(std::size_t m) { return std::max<std::size_t>(1, m / 1000); }

/// Mask over the m inner iterations marking the m1 that run the
/// sufficient-decrease step, drawn without replacement.
inline std::vector<char> sd_schedule(Rng& rng, std::size_t m, std::size_t m1) {
  return rng.sample_mask(m, std::min(m1, m));
}

}  // namespace vrsd
