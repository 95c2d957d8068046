#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "vrsd/dataset.hpp"

namespace vrsd {

using Vector = Eigen::VectorXd;

inline double soft_threshold(double tau, double z) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: threshold must be >= 0");
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}

enum class RegKind { None, L2, L1, ElasticNet };

/// r(x) = (l2/2)|x|^2 + l1 |x|_1.
struct Regularizer {
  RegKind kind = RegKind::None;
  double l2 = 0.0;
  double l1 = 0.0;

  static Regularizer none() { return {}; }
  static Regularizer ridge(double lambda) { return make(RegKind::L2, lambda, 0.0); }
  static Regularizer lasso(double lambda) { return make(RegKind::L1, 0.0, lambda); }
  static Regularizer elastic_net(double l2, double l1) {
    return make(RegKind::ElasticNet, l2, l1);
  }

  double value(const Vector& x) const {
    if (kind == RegKind::None) return 0.0;
    return 0.5 * l2 * x.squaredNorm() + l1 * x.lpNorm<1>();
  }

  /// Prox of eta*r applied to one coordinate.
  double prox_coord(double eta, double y) const {
    const double shrunk = l1 > 0.0 ? soft_threshold(eta * l1, y) : y;
    return l2 > 0.0 ? shrunk / (1.0 + eta * l2) : shrunk;
  }

  std::string describe() const {
    switch (kind) {
      case RegKind::None: return "none";
      case RegKind::L2: return "ridge:" + detail::format_double(l2);
      case RegKind::L1: return "lasso:" + detail::format_double(l1);
      case RegKind::ElasticNet:
        return "elastic:" + detail::format_double(l2) + "," + detail::format_double(l1);
    }
    return "?";
  }

 private:
  static Regularizer make(RegKind k, double l2, double l1) {
    if (!(l2 >= 0.0) || !(l1 >= 0.0))
      throw std::invalid_argument("regularizer weights must be non-negative");
    return {k, l2, l1};
  }
};

inline Vector prox(const Regularizer& reg, double eta, const Vector& y) {
  if (!(eta > 0.0)) throw std::invalid_argument("prox: eta must be positive");
  Vector out(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) out[j] = reg.prox_coord(eta, y[j]);
  return out;
}

/// Composite least-squares problem
///   F(x) = 1/(2n) sum_i (a_i^T x - b_i)^2 + (smooth_l2/2)|x|^2 + r(x).
///
/// `smooth_l2` is the ridge weight carried inside each f_i (elastic-net
/// component functions); a ridge weight in `reg` is handled by the prox.
class Problem {
 public:
  Problem(std::shared_ptr<const Dataset> data, Regularizer reg, double smooth_l2 = 0.0)
      : data_(std::move(data)), reg_(reg), smooth_l2_(smooth_l2) {
    if (!data_) throw std::invalid_argument("problem: null dataset");
    if (!(smooth_l2_ >= 0.0)) throw std::invalid_argument("problem: smooth_l2 must be >= 0");
    lipschitz_ = data_->max_row_norm_sq() + smooth_l2_;
  }

  const Dataset& data() const { return *data_; }
  std::shared_ptr<const Dataset> data_ptr() const { return data_; }
  const Regularizer& reg() const { return reg_; }
  double smooth_l2() const { return smooth_l2_; }
  /// Total quadratic weight, smooth part plus regularizer.
  double total_l2() const { return smooth_l2_ + reg_.l2; }
  double lipschitz() const { return lipschitz_; }
  std::size_t n() const { return data_->n(); }
  std::size_t d() const { return data_->d(); }

  void check_dim(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != d())
      throw std::invalid_argument("dimension mismatch: got " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(d()));
  }
  void check_index(std::size_t i) const {
    if (i >= n()) throw std::out_of_range("sample index out of range");
  }

  /// a_i^T x - b_i
  double residual(std::size_t i, const Vector& x) const {
    return data_->row(i).dot(x) - data_->label(i);
  }

 private:
  std::shared_ptr<const Dataset> data_;
  Regularizer reg_;
  double smooth_l2_;
  double lipschitz_;
};

inline double smooth_value(const Problem& p, const Vector& x) {
  p.check_dim(x);
  double s = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double r = p.residual(i, x);
    s += r * r;
  }
  double f = p.n() > 0 ? s / (2.0 * static_cast<double>(p.n())) : 0.0;
  if (p.smooth_l2() > 0.0) f += 0.5 * p.smooth_l2() * x.squaredNorm();
  return f;
}

inline double objective(const Problem& p, const Vector& x) {
  return smooth_value(p, x) + p.reg().value(x);
}

/// grad f_i(x) = (a_i^T x - b_i) a_i + smooth_l2 x
inline Vector component_grad(const Problem& p, std::size_t i, const Vector& x) {
  p.check_index(i);
  p.check_dim(x);
  Vector g = p.smooth_l2() * x;
  const double r = p.residual(i, x);
  const RowView row = p.data().row(i);
  for (std::size_t k = 0; k < row.size(); ++k) g[row.index[k]] += r * row.value[k];
  return g;
}

inline Vector full_grad(const Problem& p, const Vector& x) {
  p.check_dim(x);
  Vector g = Vector::Zero(static_cast<Eigen::Index>(p.d()));
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double r = p.residual(i, x);
    const RowView row = p.data().row(i);
    for (std::size_t k = 0; k < row.size(); ++k) g[row.index[k]] += r * row.value[k];
  }
  if (p.n() > 0) g /= static_cast<double>(p.n());
  if (p.smooth_l2() > 0.0) g += p.smooth_l2() * x;
  return g;
}

/// Step size and sufficient-decrease constants.
struct StepPlan {
  double alpha = 1.0;
  double eta = 1.0;
  double sigma = 0.5;
  double delta = 0.1;
  double zeta = 0.0;
};

/// Floor applied to 1 - L*eta when forming zeta.
inline constexpr double kZetaFloor = 1e-3;

/// eta = 1/(L alpha), zeta = delta*eta / max(1 - L*eta, zeta_floor).
inline StepPlan make_step_plan(double lipschitz, double alpha, double sigma = 0.5,
                               double delta = 0.1, double zeta_floor = kZetaFloor) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("step plan: L must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("step plan: alpha must be positive");
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("step plan: sigma must lie in [0,1]");
  if (!(delta >= 0.0)) throw std::invalid_argument("step plan: delta must be >= 0");
  if (!(zeta_floor > 0.0)) throw std::invalid_argument("step plan: zeta floor must be positive");
  StepPlan plan;
  plan.alpha = alpha;
  plan.eta = 1.0 / (lipschitz * alpha);
  plan.sigma = sigma;
  plan.delta = delta;
  plan.zeta = delta * plan.eta / std::max(1.0 - lipschitz * plan.eta, zeta_floor);
  return plan;
}

/// Same plan expressed through an explicit step size (grid search).
inline StepPlan step_plan_for_eta(double lipschitz, double eta, double sigma = 0.5,
                                  double delta = 0.1, double zeta_floor = kZetaFloor) {
  if (!(eta > 0.0)) throw std::invalid_argument("step plan: eta must be positive");
  StepPlan plan = make_step_plan(lipschitz, 1.0 / (lipschitz * eta), sigma, delta, zeta_floor);
  plan.eta = eta;
  plan.zeta = delta * eta / std::max(1.0 - lipschitz * eta, zeta_floor);
  return plan;
}

}  // namespace vrsd
