#pragma once

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <vector>

#include "vrsd/problem.hpp"

namespace vrsd {

/// Estimate of grad f(x) plus the residual p = grad f_i(x) - grad f_i(anchor)
/// that drives the sufficient-decrease term.
struct Estimate {
  Vector grad;
  Vector residual;
};

/// SVRG anchor: snapshot point, full gradient there, and the cached
/// residuals a_i^T x~ - b_i so that grad f_i(x~) costs nothing per step.
struct SvrgSnapshot {
  Vector x_tilde;
  Vector mu;
  std::vector<double> anchor_residual;

  static SvrgSnapshot at(const Problem& p, const Vector& x_tilde) {
    p.check_dim(x_tilde);
    SvrgSnapshot s;
    s.x_tilde = x_tilde;
    s.anchor_residual.resize(p.n());
    s.mu = Vector::Zero(static_cast<Eigen::Index>(p.d()));
    for (std::size_t i = 0; i < p.n(); ++i) {
      const double r = p.residual(i, x_tilde);
      s.anchor_residual[i] = r;
      const RowView row = p.data().row(i);
      for (std::size_t k = 0; k < row.size(); ++k) s.mu[row.index[k]] += r * row.value[k];
    }
    if (p.n() > 0) s.mu /= static_cast<double>(p.n());
    if (p.smooth_l2() > 0.0) s.mu += p.smooth_l2() * x_tilde;
    return s;
  }
};

/// grad f_i(x) - grad f_i(x~), accumulated into `out` (which must be zeroed
/// or hold a value to add to).
inline void add_svrg_residual(const SvrgSnapshot& snap, const Problem& p, std::size_t i,
                              const Vector& x, double weight, Vector& out) {
  const double dr = p.residual(i, x) - snap.anchor_residual[i];
  const RowView row = p.data().row(i);
  for (std::size_t k = 0; k < row.size(); ++k) out[row.index[k]] += weight * dr * row.value[k];
  if (p.smooth_l2() > 0.0) out += (weight * p.smooth_l2()) * (x - snap.x_tilde);
}

/// grad f_i(x) - grad f_i(x~) + mu~
inline Estimate svrg_estimate(const SvrgSnapshot& snap, const Problem& p, std::size_t i,
                              const Vector& x) {
  p.check_index(i);
  p.check_dim(x);
  Estimate e;
  e.residual = Vector::Zero(x.size());
  add_svrg_residual(snap, p, i, x, 1.0, e.residual);
  e.grad = e.residual + snap.mu;
  return e;
}

/// (1/b) sum_{i in batch} [grad f_i(x) - grad f_i(x~)] + mu~
inline Vector svrg_estimate_minibatch(const SvrgSnapshot& snap, const Problem& p,
                                      std::span<const std::size_t> batch, const Vector& x) {
  if (batch.empty()) throw std::invalid_argument("svrg_estimate_minibatch: empty batch");
  p.check_dim(x);
  Vector acc = Vector::Zero(x.size());
  for (std::size_t i : batch) {
    p.check_index(i);
    add_svrg_residual(snap, p, i, x, 1.0, acc);
  }
  return acc / static_cast<double>(batch.size()) + snap.mu;
}

/// SAGA gradient table.
///
/// For least squares each stored gradient is r_j a_j, so only the scalar
/// residual r_j is kept. With a smooth ridge term the stored gradient also
/// carries smooth_l2 * phi_j and the dense phi_j is stored per slot.
class SagaTable {
 public:
  SagaTable() = default;

  /// All slots at x0; average equals full_grad(x0).
  SagaTable(const Problem& p, const Vector& x0) : n_(p.n()), d_(p.d()) {
    p.check_dim(x0);
    dense_ = p.smooth_l2() > 0.0;
    residual_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) residual_[i] = p.residual(i, x0);
    if (dense_) {
      phi_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_));
      for (std::size_t i = 0; i < n_; ++i) phi_.row(static_cast<Eigen::Index>(i)) = x0.transpose();
    }
    recompute_average(p);
  }

  bool dense() const { return dense_; }
  std::size_t size() const { return n_; }
  const Vector& average() const { return avg_; }
  double stored_residual(std::size_t j) const { return residual_[j]; }

  Vector stored_gradient(const Problem& p, std::size_t j) const {
    Vector g = Vector::Zero(static_cast<Eigen::Index>(d_));
    const RowView row = p.data().row(j);
    for (std::size_t k = 0; k < row.size(); ++k) g[row.index[k]] += residual_[j] * row.value[k];
    if (dense_) g += p.smooth_l2() * phi_.row(static_cast<Eigen::Index>(j)).transpose();
    return g;
  }

  /// Mean of the stored gradients, summed from scratch.
  Vector recomputed_average(const Problem& p) const {
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(d_));
    for (std::size_t j = 0; j < n_; ++j) {
      const RowView row = p.data().row(j);
      for (std::size_t k = 0; k < row.size(); ++k) acc[row.index[k]] += residual_[j] * row.value[k];
    }
    if (dense_) acc += p.smooth_l2() * phi_.colwise().sum().transpose();
    if (n_ > 0) acc /= static_cast<double>(n_);
    return acc;
  }

  void recompute_average(const Problem& p) {
    avg_ = recomputed_average(p);
    since_refresh_ = 0;
  }

  /// Estimate at x for sample i without touching the table.
  Estimate peek(const Problem& p, std::size_t i, const Vector& x) const {
    p.check_index(i);
    p.check_dim(x);
    Estimate e;
    e.residual = Vector::Zero(x.size());
    const double dr = p.residual(i, x) - residual_[i];
    const RowView row = p.data().row(i);
    for (std::size_t k = 0; k < row.size(); ++k) e.residual[row.index[k]] += dr * row.value[k];
    if (dense_) e.residual += p.smooth_l2() * (x - phi_.row(static_cast<Eigen::Index>(i)).transpose());
    e.grad = e.residual + avg_;
    return e;
  }

  /// Estimate, then store grad f_i(x) in slot i and update the average.
  Estimate estimate_and_update(const Problem& p, std::size_t i, const Vector& x) {
    Estimate e = peek(p, i, x);
    commit(p, i, x, e.residual);
    return e;
  }

  /// Moves slot i to x; `delta` is the stored-gradient change g_i(x) - g_i(old).
  void commit(const Problem& p, std::size_t i, const Vector& x, const Vector& delta) {
    residual_[i] = p.residual(i, x);
    if (dense_) phi_.row(static_cast<Eigen::Index>(i)) = x.transpose();
    avg_ += delta / static_cast<double>(n_);
    if (++since_refresh_ >= n_) recompute_average(p);
  }

  // Raw access for the fused solver kernels.
  double* residual_data() { return residual_.data(); }
  double* avg_data() { return avg_.data(); }
  double* phi_row(std::size_t i) { return phi_.data() + i * d_; }
  /// Counts one update; returns true when the average was refreshed.
  bool note_update(const Problem& p) {
    if (++since_refresh_ >= n_) {
      recompute_average(p);
      return true;
    }
    return false;
  }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  bool dense_ = false;
  std::vector<double> residual_;
  RowMatrix phi_;
  Vector avg_;
  std::size_t since_refresh_ = 0;
};

}  // namespace vrsd
