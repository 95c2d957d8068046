#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vrsd/problem.hpp"

namespace vrsd {

enum class RefMethod { NormalEquations, LongProxGradient };

inline std::string to_string(RefMethod m) {
  return m == RefMethod::NormalEquations ? "normal_equations" : "long_prox_gradient";
}

/// Solver-independent optimum used for objective gaps.
struct ReferenceOptimum {
  Vector x_star;
  double f_star = 0.0;
  RefMethod method = RefMethod::NormalEquations;
  /// |grad F(x*)|_inf for smooth problems, prox-gradient mapping norm otherwise.
  double residual_check = 0.0;
  std::string dataset;
};

struct ReferenceOptions {
  std::size_t max_iterations = 200000;
  double relative_change_stop = 1e-14;
  /// Above this dimension the d x d Gram matrix is not formed.
  std::size_t gram_limit = 4096;
};

namespace detail {

struct Gram {
  Eigen::MatrixXd h;  // A^T A / n
  Vector c;           // A^T b / n
};

inline Gram gram_of(const Dataset& ds) {
  const auto d = static_cast<Eigen::Index>(ds.d());
  Gram g{Eigen::MatrixXd::Zero(d, d), Vector::Zero(d)};
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const RowView row = ds.row(i);
    for (std::size_t a = 0; a < row.size(); ++a) {
      g.c[row.index[a]] += ds.label(i) * row.value[a];
      for (std::size_t b = 0; b < row.size(); ++b)
        g.h(row.index[a], row.index[b]) += row.value[a] * row.value[b];
    }
  }
  if (ds.n() > 0) {
    g.h /= static_cast<double>(ds.n());
    g.c /= static_cast<double>(ds.n());
  }
  return g;
}

inline Vector smooth_gradient_plus_l2(const Problem& p, const Vector& x) {
  Vector g = full_grad(p, x);
  if (p.reg().l2 > 0.0) g += p.reg().l2 * x;
  return g;
}

inline double prox_mapping_norm(const Problem& p, const Vector& x, double eta) {
  const Vector step = x - eta * full_grad(p, x);
  return (x - prox(p.reg(), eta, step)).lpNorm<Eigen::Infinity>() / eta;
}

// Cyclic coordinate descent on the Gram form; cheap for desk-scale d and
// much faster than prox-gradient at settling small coordinates.
inline void coordinate_refine(const Problem& p, const Gram& g, Vector& x, std::size_t max_sweeps) {
  const double l1 = p.reg().l1;
  const double l2 = p.total_l2();
  Vector hx = g.h * x;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double largest = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double hjj = g.h(j, j) + l2;
      if (!(hjj > 0.0)) continue;
      const double z = g.c[j] - (hx[j] - g.h(j, j) * x[j]);
      const double next = soft_threshold(l1, z) / hjj;
      const double delta = next - x[j];
      if (delta != 0.0) {
        hx += delta * g.h.col(j);
        x[j] = next;
        largest = std::max(largest, std::abs(delta));
      }
    }
    if (largest <= 1e-15 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) break;
  }
}

// Re-solves on the support of x with its signs fixed; keeps the result when
// it is sign-consistent, satisfies the off-support optimality condition and
// does not raise the objective.
inline bool polish_on_support(const Problem& p, const Gram& g, Vector& x) {
  const double l1 = p.reg().l1;
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (x[j] != 0.0) support.push_back(j);
  const auto k = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd hs(k, k);
  Vector rhs(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) hs(a, b) = g.h(support[a], support[b]);
    hs(a, a) += p.total_l2();
    rhs[a] = g.c[support[a]] - l1 * (x[support[a]] > 0 ? 1.0 : -1.0);
  }
  Vector candidate = Vector::Zero(x.size());
  if (k > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hs);
    if (ldlt.info() != Eigen::Success) return false;
    const Vector xs = ldlt.solve(rhs);
    for (Eigen::Index a = 0; a < k; ++a) {
      if (!std::isfinite(xs[a]) || (xs[a] > 0) != (x[support[a]] > 0) || xs[a] == 0.0) return false;
      candidate[support[a]] = xs[a];
    }
  }
  const Vector grad = g.h * candidate - g.c + p.total_l2() * candidate;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (candidate[j] == 0.0 && std::abs(grad[j]) > l1 * (1.0 + 1e-9)) return false;
  if (objective(p, candidate) > objective(p, x)) return false;
  x = candidate;
  return true;
}

}  // namespace detail

/// Ridge-type problems: dense solve of (A^T A/n + lambda I) x = A^T b/n.
/// Anything with an L1 term, or a singular system: long proximal gradient
/// run, then coordinate descent and a support re-solve.
inline ReferenceOptimum reference_optimum(const Problem& p, const ReferenceOptions& opt = {}) {
  ReferenceOptimum ref;
  ref.dataset = p.data().id();
  const bool use_gram = p.d() <= opt.gram_limit;
  detail::Gram g;
  if (use_gram) g = detail::gram_of(p.data());

  if (p.reg().l1 == 0.0 && use_gram) {
    Eigen::MatrixXd h = g.h;
    h.diagonal().array() += p.total_l2();
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    bool ok = llt.info() == Eigen::Success;
    if (ok && p.total_l2() == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      ok = ev.size() > 0 && ev[0] > 1e-12 * std::max(1.0, ev[ev.size() - 1]);
    }
    if (ok) {
      ref.x_star = llt.solve(g.c);
      ref.method = RefMethod::NormalEquations;
      ref.f_star = objective(p, ref.x_star);
      ref.residual_check = detail::smooth_gradient_plus_l2(p, ref.x_star).lpNorm<Eigen::Infinity>();
      return ref;
    }
  }

  // Proximal gradient on the smooth part f (with smooth_l2), prox on r.
  double lip = p.lipschitz();
  if (use_gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.h, Eigen::EigenvaluesOnly);
    lip = std::max(es.eigenvalues().maxCoeff(), 0.0) + p.smooth_l2();
  }
  if (!(lip > 0.0)) lip = 1.0;
  const double eta = 1.0 / lip;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(p.d()));
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const Vector grad = use_gram ? Vector(g.h * x - g.c + p.smooth_l2() * x) : full_grad(p, x);
    const Vector next = prox(p.reg(), eta, x - eta * grad);
    const double change = (next - x).norm();
    x = next;
    if (change <= opt.relative_change_stop * std::max(1.0, x.norm())) break;
  }
  if (use_gram && p.reg().l1 > 0.0) {
    Vector refined = x;
    detail::coordinate_refine(p, g, refined, 20000);
    if (objective(p, refined) <= objective(p, x)) x = refined;
    detail::polish_on_support(p, g, x);
  }
  ref.x_star = x;
  ref.method = RefMethod::LongProxGradient;
  ref.f_star = objective(p, x);
  ref.residual_check = detail::prox_mapping_norm(p, x, eta);
  return ref;
}

}  // namespace vrsd
