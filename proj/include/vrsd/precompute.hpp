#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vrsd/dataset.hpp"
#include "vrsd/problem.hpp"
#include "vrsd/rng.hpp"

namespace vrsd {

/// b^T A as a dense vector, one pass over the non-zeros.
inline Vector compute_btA(const Dataset& ds) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(ds.d()));
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double b = ds.label(i);
    const RowView row = ds.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) out[row.index[k]] += b * row.value[k];
  }
  return out;
}

enum class NormMode { Auto, Exact, LowRank, LazySparse };

inline std::string to_string(NormMode m) {
  switch (m) {
    case NormMode::Auto: return "auto";
    case NormMode::Exact: return "exact";
    case NormMode::LowRank: return "lowrank";
    case NormMode::LazySparse: return "lazy";
  }
  return "?";
}

inline NormMode norm_mode_from_string(const std::string& s) {
  if (s == "auto") return NormMode::Auto;
  if (s == "exact") return NormMode::Exact;
  if (s == "lowrank") return NormMode::LowRank;
  if (s == "lazy") return NormMode::LazySparse;
  throw std::invalid_argument("unknown norm mode '" + s + "' (auto|exact|lowrank|lazy)");
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Evaluator for |Ax|.
///
/// Exact keeps a dense copy of A and sums over all d columns; LazySparse
/// walks only the stored non-zeros; LowRank uses the r x d factor S_r V_r^T
/// of a partial SVD, which never overestimates |Ax|.
struct FastNorm {
  NormMode mode = NormMode::LazySparse;
  RowMajorMatrix dense;   // Exact
  Eigen::MatrixXd factor; // LowRank, r x d
  int rank = 0;
  double energy_fraction = 1.0;
};

inline FastNorm exact_norm(const Dataset& ds) {
  FastNorm fn;
  fn.mode = NormMode::Exact;
  fn.dense = RowMajorMatrix::Zero(static_cast<Eigen::Index>(ds.n()), static_cast<Eigen::Index>(ds.d()));
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const RowView row = ds.row(i);
    for (std::size_t k = 0; k < row.size(); ++k)
      fn.dense(static_cast<Eigen::Index>(i), row.index[k]) = row.value[k];
  }
  return fn;
}

inline FastNorm lazy_norm() { return FastNorm{}; }

namespace detail {

// Y = A * M for sparse A (n x d) and dense M (d x k).
inline Eigen::MatrixXd sparse_times(const Dataset& ds, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.n()), m.cols());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const RowView row = ds.row(i);
    for (std::size_t k = 0; k < row.size(); ++k)
      y.row(static_cast<Eigen::Index>(i)) += row.value[k] * m.row(row.index[k]);
  }
  return y;
}

// Z = A^T * M for sparse A (n x d) and dense M (n x k).
inline Eigen::MatrixXd sparse_transpose_times(const Dataset& ds, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.d()), m.cols());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const RowView row = ds.row(i);
    for (std::size_t k = 0; k < row.size(); ++k)
      z.row(row.index[k]) += row.value[k] * m.row(static_cast<Eigen::Index>(i));
  }
  return z;
}

inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace detail

/// Randomized subspace iteration (oversampling 8, 4 power iterations).
///
/// Picks the smallest r <= r_max whose leading singular values carry at
/// least `energy_target` of |A|_F^2. Falls back to Exact when r_max is not
/// enough.
inline FastNorm partial_svd(const Dataset& ds, double energy_target, std::size_t r_max,
                            std::uint64_t seed) {
  if (ds.n() == 0 || ds.d() == 0) throw std::invalid_argument("partial_svd: empty dataset");
  if (!(energy_target > 0.0 && energy_target <= 1.0))
    throw std::invalid_argument("partial_svd: energy target must lie in (0, 1]");
  const std::size_t full = std::min(ds.n(), ds.d());
  if (r_max < 1 || r_max > full)
    throw std::invalid_argument("partial_svd: r_max must lie in [1, min(n, d)]");

  constexpr std::size_t kOversample = 8;
  constexpr int kPowerIterations = 4;
  const auto k = static_cast<Eigen::Index>(std::min(r_max + kOversample, full));

  Rng rng(seed);
  Eigen::MatrixXd omega(static_cast<Eigen::Index>(ds.d()), k);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < omega.rows(); ++r) omega(r, c) = rng.normal();

  Eigen::MatrixXd q = detail::orthonormal_basis(detail::sparse_times(ds, omega));
  for (int it = 0; it < kPowerIterations; ++it) {
    const Eigen::MatrixXd w = detail::orthonormal_basis(detail::sparse_transpose_times(ds, q));
    q = detail::orthonormal_basis(detail::sparse_times(ds, w));
  }
  // B = Q^T A  (k x d)
  const Eigen::MatrixXd b = detail::sparse_transpose_times(ds, q).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  double total = 0.0;
  for (double v : ds.row_norms_sq()) total += v;
  if (!(total > 0.0)) throw std::invalid_argument("partial_svd: matrix is zero");

  double captured = 0.0;
  for (std::size_t r = 1; r <= r_max; ++r) {
    const double s = sv[static_cast<Eigen::Index>(r - 1)];
    captured += s * s;
    if (captured >= energy_target * total * (1.0 - 1e-12)) {
      FastNorm fn;
      fn.mode = NormMode::LowRank;
      fn.rank = static_cast<int>(r);
      fn.energy_fraction = std::min(1.0, captured / total);
      const auto rr = static_cast<Eigen::Index>(r);
      fn.factor = sv.head(rr).asDiagonal() * svd.matrixV().leftCols(rr).transpose();
      return fn;
    }
  }
  return exact_norm(ds);
}

inline double norm_Ax_sq(const FastNorm& fn, const Dataset& ds, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != ds.d())
    throw std::invalid_argument("norm_Ax: dimension mismatch");
  switch (fn.mode) {
    case NormMode::Exact: return (fn.dense * x).squaredNorm();
    case NormMode::LowRank: return (fn.factor * x).squaredNorm();
    default: break;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double v = ds.row(i).dot(x);
    s += v * v;
  }
  return s;
}

inline double norm_Ax(const FastNorm& fn, const Dataset& ds, const Vector& x) {
  return std::sqrt(norm_Ax_sq(fn, ds, x));
}

struct FastNormConfig {
  NormMode mode = NormMode::Auto;
  double energy_target = 0.995;
  std::size_t r_max = 64;
  std::uint64_t seed = 0x5eed;
};

/// Auto: LazySparse below 10% density; LowRank for dense data with d > 32
/// and n >= 10^4, where an O(nd) evaluation per SD step would dominate the
/// epoch; Exact otherwise. LowRank can underestimate |Ax|, in which case
/// theta is only approximately optimal.
inline NormMode resolve_norm_mode(const Dataset& ds, NormMode requested) {
  if (requested != NormMode::Auto) return requested;
  if (ds.density() < 0.1) return NormMode::LazySparse;
  if (ds.d() > 32 && ds.n() >= 10000) return NormMode::LowRank;
  return NormMode::Exact;
}

inline FastNorm build_fastnorm(const Dataset& ds, const FastNormConfig& cfg) {
  switch (resolve_norm_mode(ds, cfg.mode)) {
    case NormMode::Exact: return exact_norm(ds);
    case NormMode::LowRank: {
      const std::size_t r_max = std::min(cfg.r_max, std::min(ds.n(), ds.d()));
      return partial_svd(ds, cfg.energy_target, r_max, cfg.seed);
    }
    default: return lazy_norm();
  }
}

}  // namespace vrsd
