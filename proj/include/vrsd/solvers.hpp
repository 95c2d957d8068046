#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrsd/estimators.hpp"
#include "vrsd/problem.hpp"
#include "vrsd/rng.hpp"
#include "vrsd/sufficient_decrease.hpp"
#include "vrsd/trace.hpp"

namespace vrsd {

enum class Algorithm { Svrg, ProxSvrg, Saga, SvrgSd, SagaSd };
enum class Convexity { StronglyConvex, NonStronglyConvex };
/// How an epoch hands its result to the next one: the last inner iterate,
/// or the mean of the points at which the m stochastic gradients were taken.
enum class SnapshotRule { LastIterate, Average };
enum class RunStatus { Completed, Diverged };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Svrg: return "svrg";
    case Algorithm::ProxSvrg: return "prox-svrg";
    case Algorithm::Saga: return "saga";
    case Algorithm::SvrgSd: return "svrg-sd";
    case Algorithm::SagaSd: return "saga-sd";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "svrg") return Algorithm::Svrg;
  if (s == "prox-svrg") return Algorithm::ProxSvrg;
  if (s == "saga") return Algorithm::Saga;
  if (s == "svrg-sd") return Algorithm::SvrgSd;
  if (s == "saga-sd") return Algorithm::SagaSd;
  throw std::invalid_argument("unknown solver '" + s + "' (svrg|prox-svrg|saga|svrg-sd|saga-sd)");
}

inline std::string to_string(RunStatus s) { return s == RunStatus::Completed ? "completed" : "diverged"; }

struct SolverConfig {
  Algorithm algorithm = Algorithm::SvrgSd;
  std::size_t epochs = 10;
  /// Inner iterations per epoch; 0 selects 2n (SVRG family) or n (SAGA family).
  std::size_t m = 0;
  /// Sufficient-decrease iterations per epoch; default floor(m/1000), at least 1.
  std::optional<std::size_t> m1;
  StepPlan plan;
  Convexity convexity = Convexity::StronglyConvex;
  std::uint64_t seed = 1;
  ThetaMode theta_mode = ThetaMode::ClosedForm;
  /// Used by Svrg, ProxSvrg and Saga. The SD variants always average.
  SnapshotRule snapshot = SnapshotRule::LastIterate;
  FastNormConfig fastnorm;
  /// Shared b^T A and |Ax| evaluator; built from `fastnorm` when null.
  std::shared_ptr<const SdPrecompute> precompute;
  /// Extra component-gradient equivalents charged per SD iteration.
  double sd_gradient_charge = 1.0;
  /// Inner iterations between intermediate trace records; 0 = epoch ends only.
  std::size_t record_every = 0;
  double divergence_factor = 1e3;
  /// Replace wall time by a work counter (component-gradient evaluations),
  /// which makes whole trace files reproducible.
  bool logical_clock = false;
  /// Evaluate Property 1 at every SD step (two extra objective evaluations,
  /// excluded from the timing and the pass count).
  bool check_property1 = false;
  std::optional<Vector> x0;
  std::string dataset_id;
  /// Called with (epoch, k, x_k) after every inner iteration.
  std::function<void(std::size_t, std::size_t, const Vector&)> on_iterate;
};

inline std::size_t resolved_epoch_length(const SolverConfig& cfg, std::size_t n) {
  if (cfg.m > 0) return cfg.m;
  const bool saga_family = cfg.algorithm == Algorithm::Saga || cfg.algorithm == Algorithm::SagaSd;
  return saga_family ? n : 2 * n;
}

/// Hash of every field that influences a run's numbers.
inline std::uint64_t config_hash(const SolverConfig& cfg) {
  std::string key = to_string(cfg.algorithm);
  key += "|" + std::to_string(cfg.epochs) + "|" + std::to_string(cfg.m) + "|" +
         (cfg.m1 ? std::to_string(*cfg.m1) : std::string("-")) + "|" +
         detail::format_double(cfg.plan.eta) + "|" + detail::format_double(cfg.plan.sigma) + "|" +
         detail::format_double(cfg.plan.zeta) + "|" +
         std::to_string(cfg.convexity == Convexity::StronglyConvex) + "|" + std::to_string(cfg.seed) +
         "|" + to_string(cfg.theta_mode) + "|" + std::to_string(static_cast<int>(cfg.snapshot)) + "|" +
         to_string(cfg.fastnorm.mode) + "|" + detail::format_double(cfg.sd_gradient_charge);
  return fnv1a(key);
}

struct SdStats {
  std::size_t steps = 0;
  std::size_t negative = 0;
  std::size_t expanding = 0;
  std::size_t property1_checks = 0;
  std::size_t property1_violations = 0;
  double theta_min = std::numeric_limits<double>::infinity();
  double theta_max = -std::numeric_limits<double>::infinity();
};

struct SolverResult {
  Vector x;
  double objective = 0.0;
  Trace trace;
  RunStatus status = RunStatus::Completed;
  SdStats sd;
};

namespace detail {

struct IdentityProx {
  double operator()(double y) const { return y; }
};
struct RidgeProx {
  double denom;
  double operator()(double y) const { return y / denom; }
};
struct LassoProx {
  double thr;
  double operator()(double y) const { return y > thr ? y - thr : (y < -thr ? y + thr : 0.0); }
};
struct ElasticProx {
  double thr, denom;
  double operator()(double y) const {
    return (y > thr ? y - thr : (y < -thr ? y + thr : 0.0)) / denom;
  }
};

// Calls f with a coordinate prox functor matching Regularizer::prox_coord.
template <typename F>
void with_prox(const Regularizer& reg, double eta, F&& f) {
  const bool l1 = reg.l1 > 0.0, l2 = reg.l2 > 0.0;
  if (!l1 && !l2) return f(IdentityProx{});
  if (!l1) return f(RidgeProx{1.0 + eta * reg.l2});
  if (!l2) return f(LassoProx{eta * reg.l1});
  return f(ElasticProx{eta * reg.l1, 1.0 + eta * reg.l2});
}

/// Wall clock that can be paused while trace records are evaluated.
class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  void pause() { paused_at_ = Clock::now(); }
  void resume() { excluded_ += Clock::now() - paused_at_; }
  std::int64_t elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_ - excluded_)
        .count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
  Clock::time_point paused_at_;
  Clock::duration excluded_{};
};

/// Shared bookkeeping: passes, wall time, records, divergence.
class RunLog {
 public:
  RunLog(const Problem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {
    trace_.solver = to_string(cfg.algorithm);
    trace_.dataset = cfg.dataset_id.empty() ? p.data().id() : cfg.dataset_id;
    trace_.seed = cfg.seed;
    trace_.config_hash = config_hash(cfg);
    n_ = static_cast<double>(std::max<std::size_t>(p.n(), 1));
  }

  void add_passes(double passes) { full_ += passes; }
  void add_component_grads(double count) { components_ += count; }
  // Both counters hold integers (or integer multiples of the SD charge), so
  // S epochs of SVRG with m = 2n give exactly 3S.
  double passes() const { return full_ + components_ / n_; }

  /// Appends a record; returns false if the run has diverged.
  bool record(std::size_t epoch, const Vector& x) {
    clock_.pause();
    const double f = objective(p_, x);
    clock_.resume();
    TraceRecord r;
    r.epoch = epoch;
    r.passes = passes();
    r.wall_ns = cfg_.logical_clock ? static_cast<std::int64_t>(std::llround(passes() * n_))
                                   : clock_.elapsed_ns();
    if (!trace_.records.empty()) r.wall_ns = std::max(r.wall_ns, trace_.records.back().wall_ns + 1);
    r.objective = f;
    trace_.records.push_back(r);
    if (trace_.records.size() == 1) f0_ = f;
    const double limit = cfg_.divergence_factor * std::max(std::abs(f0_), 1e-12);
    if (!std::isfinite(f) || f > limit) {
      status_ = RunStatus::Diverged;
      return false;
    }
    return true;
  }

  void pause() { clock_.pause(); }
  void resume() { clock_.resume(); }

  RunStatus status() const { return status_; }
  Trace take_trace() { return std::move(trace_); }

 private:
  const Problem& p_;
  const SolverConfig& cfg_;
  Trace trace_;
  Stopwatch clock_;
  double full_ = 0.0;
  double components_ = 0.0;
  double n_ = 1.0;
  double f0_ = 0.0;
  RunStatus status_ = RunStatus::Completed;
};

inline Vector start_point(const Problem& p, const SolverConfig& cfg) {
  if (cfg.x0) {
    p.check_dim(*cfg.x0);
    return *cfg.x0;
  }
  return Vector::Zero(static_cast<Eigen::Index>(p.d()));
}

inline void validate(const Problem& p, const SolverConfig& cfg, std::size_t m) {
  if (p.n() == 0) throw std::invalid_argument("solver: empty dataset");
  if (cfg.epochs < 1) throw std::invalid_argument("solver: epochs must be >= 1");
  if (m < 1) throw std::invalid_argument("solver: epoch length must be >= 1");
  if (!(cfg.plan.eta > 0.0)) throw std::invalid_argument("solver: step size must be positive");
  if (!(cfg.plan.sigma >= 0.0 && cfg.plan.sigma <= 1.0))
    throw std::invalid_argument("solver: sigma must lie in [0, 1]");
  if (cfg.m1 && *cfg.m1 > m) throw std::invalid_argument("solver: m1 must not exceed m");
  if (cfg.convexity == Convexity::NonStronglyConvex && cfg.algorithm != Algorithm::SvrgSd)
    throw std::invalid_argument("solver: the non-strongly-convex variant exists only for svrg-sd");
}

inline SdContext make_context(const Problem& p, const SolverConfig& cfg) {
  SdContext ctx;
  ctx.pre = cfg.precompute ? cfg.precompute : SdPrecompute::build(p.data(), cfg.fastnorm);
  ctx.zeta = cfg.plan.zeta;
  return ctx;
}

inline void note_theta(SdStats& st, double theta) {
  ++st.steps;
  if (theta < 0.0) ++st.negative;
  if (theta > 1.0) ++st.expanding;
  st.theta_min = std::min(st.theta_min, theta);
  st.theta_max = std::max(st.theta_max, theta);
}

// Scatters dr * a_i into the zeroed scratch vector u.
inline void scatter_row(const RowView& row, double dr, double* u) {
  for (std::size_t k = 0; k < row.size(); ++k) u[row.index[k]] = dr * row.value[k];
}
inline void clear_row(const RowView& row, double* u) {
  for (std::size_t k = 0; k < row.size(); ++k) u[row.index[k]] = 0.0;
}

// One SVRG-SD inner update over all coordinates. Reads x_{k-1} from xv and
// x^_{k-1} from hv; writes x_k into hv and, when Scaled, x^_k = theta x_{k-1}
// into xv. When not scaled x^_k = x_{k-1} is already in xv, so the caller
// only swaps the two buffers.
template <bool Smooth, bool Scaled, typename Prox>
inline void momentum_step(std::size_t d, const double* uv, const double* mu, const double* xt,
                          double s, double eta, double c, double theta, Prox prox, double* xv,
                          double* hv, double* sv) {
  for (std::size_t j = 0; j < d; ++j) {
    const double xj = xv[j];
    double g = uv[j] + mu[j];
    if constexpr (Smooth) g += s * (xj - xt[j]);
    const double y = prox(xj - eta * g);
    const double h = Scaled ? theta * xj : xj;
    const double next = y + c * (h - hv[j]);
    sv[j] += h;
    hv[j] = next;
    if constexpr (Scaled) xv[j] = h;
  }
}

// Plain / proximal SVRG. Svrg is this loop with the identity prox.
inline SolverResult svrg_loop(const Problem& p, const SolverConfig& cfg) {
  const std::size_t m = resolved_epoch_length(cfg, p.n());
  validate(p, cfg, m);
  const auto d = static_cast<std::size_t>(p.d());
  const double eta = cfg.plan.eta;
  const double s = p.smooth_l2();
  const bool average = cfg.snapshot == SnapshotRule::Average;

  RunLog log(p, cfg);
  Rng rng(cfg.seed);
  Vector x_tilde = start_point(p, cfg);
  Vector x = x_tilde;
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector u = Vector::Zero(static_cast<Eigen::Index>(d));
  log.record(0, x_tilde);

  with_prox(p.reg(), eta, [&](auto prox) {
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const SvrgSnapshot snap = SvrgSnapshot::at(p, x_tilde);
      log.add_passes(1.0);
      x = x_tilde;
      sum.setZero();
      const double* mu = snap.mu.data();
      const double* xt = snap.x_tilde.data();
      double* xv = x.data();
      double* sv = sum.data();
      double* uv = u.data();
      for (std::size_t k = 1; k <= m; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform_index(p.n()));
        const RowView row = p.data().row(i);
        const double dr = row.dot(x) - p.data().label(i) - snap.anchor_residual[i];
        scatter_row(row, dr, uv);
        if (s > 0.0) {
          for (std::size_t j = 0; j < d; ++j) {
            const double g = uv[j] + mu[j] + s * (xv[j] - xt[j]);
            if (average) sv[j] += xv[j];
            xv[j] = prox(xv[j] - eta * g);
          }
        } else {
          for (std::size_t j = 0; j < d; ++j) {
            const double g = uv[j] + mu[j];
            if (average) sv[j] += xv[j];
            xv[j] = prox(xv[j] - eta * g);
          }
        }
        clear_row(row, uv);
        log.add_component_grads(1.0);
        if (cfg.on_iterate) cfg.on_iterate(epoch, k, x);
        if (cfg.record_every > 0 && k % cfg.record_every == 0 && k < m) {
          if (!log.record(epoch, x)) return;
        }
      }
      x_tilde = average ? Vector(sum / static_cast<double>(m)) : x;
      if (!log.record(epoch, x_tilde)) return;
    }
  });

  SolverResult res;
  res.status = log.status();
  res.x = x_tilde;
  res.objective = objective(p, res.x);
  res.trace = log.take_trace();
  return res;
}

}  // namespace detail

// ----------------------------------------------------------- SVRG family

inline SolverResult run_svrg(const Problem& p, SolverConfig cfg) {
  if (p.reg().kind != RegKind::None && (p.reg().l1 > 0.0 || p.reg().l2 > 0.0))
    throw std::invalid_argument("run_svrg: problem has a regularizer; use prox-svrg");
  cfg.algorithm = Algorithm::Svrg;
  return detail::svrg_loop(p, cfg);
}

inline SolverResult run_prox_svrg(const Problem& p, SolverConfig cfg) {
  cfg.algorithm = Algorithm::ProxSvrg;
  return detail::svrg_loop(p, cfg);
}

/// SVRG with sufficient decrease and momentum coupling.
///
/// Per inner step: y = prox(x - eta*g) with the SVRG estimate g; on the
/// scheduled SD steps x^ = theta*x, otherwise x^ = x; then
/// x <- y + (1-sigma)(x^_k - x^_{k-1}). The epoch result is the mean of the x^.
inline SolverResult run_svrg_sd(const Problem& p, SolverConfig cfg) {
  cfg.algorithm = Algorithm::SvrgSd;
  const std::size_t m = resolved_epoch_length(cfg, p.n());
  detail::validate(p, cfg, m);
  const bool non_sc = cfg.convexity == Convexity::NonStronglyConvex;
  if (non_sc && !(cfg.plan.sigma > 0.0))
    throw std::invalid_argument("run_svrg_sd: the non-strongly-convex variant needs sigma > 0");
  const auto d = static_cast<std::size_t>(p.d());
  const double eta = cfg.plan.eta;
  const double sigma = cfg.plan.sigma;
  const double c = 1.0 - sigma;
  const double s = p.smooth_l2();
  const bool sd_on = cfg.theta_mode != ThetaMode::Off;
  const std::size_t m1 = sd_on ? cfg.m1.value_or(default_sd_count(m)) : 0;
  const SdContext ctx = sd_on ? detail::make_context(p, cfg) : SdContext{};

  detail::RunLog log(p, cfg);
  Rng rng(cfg.seed);
  SolverResult res;
  Vector x_tilde = detail::start_point(p, cfg);
  Vector y_tilde = x_tilde;
  Vector tilde_sum = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector x(static_cast<Eigen::Index>(d));
  Vector xhat = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector u = Vector::Zero(static_cast<Eigen::Index>(d));
  std::size_t epochs_done = 0;
  log.record(0, x_tilde);

  detail::with_prox(p.reg(), eta, [&](auto prox) {
    std::vector<char> schedule;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const SvrgSnapshot snap = SvrgSnapshot::at(p, x_tilde);
      log.add_passes(1.0);
      x = non_sc ? y_tilde : x_tilde;
      xhat = x;
      sum.setZero();
      if (sd_on) schedule = sd_schedule(rng, m, m1);
      const double* mu = snap.mu.data();
      const double* xt = snap.x_tilde.data();
      double* xv = x.data();
      double* hv = xhat.data();
      double* sv = sum.data();
      double* uv = u.data();
      for (std::size_t k = 1; k <= m; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform_index(p.n()));
        const RowView row = p.data().row(i);
        const double dr = row.dot(x) - p.data().label(i) - snap.anchor_residual[i];
        detail::scatter_row(row, dr, uv);
        double theta = 1.0;
        if (sd_on && schedule[k - 1]) {
          double pn = 0.0;  // |grad f_i(x) - grad f_i(x~)|^2
          for (std::size_t j = 0; j < d; ++j) {
            const double pj = uv[j] + s * (xv[j] - xt[j]);
            pn += pj * pj;
          }
          // A diverging run can make pn non-finite; the epoch-end record stops it.
          const ThetaResult tr =
              std::isfinite(pn) ? solve_theta(ctx, p, x, pn, cfg.theta_mode) : ThetaResult{};
          theta = std::isfinite(tr.theta) ? tr.theta : 1.0;
          log.add_component_grads(cfg.sd_gradient_charge);
          log.add_passes(static_cast<double>(tr.objective_evals));
          detail::note_theta(res.sd, theta);
          if (cfg.check_property1) {
            log.pause();
            ++res.sd.property1_checks;
            if (!verify_property1(p, x, theta, ctx.zeta, pn)) ++res.sd.property1_violations;
            log.resume();
          }
        }
        const bool scaled = theta != 1.0;
        if (s > 0.0) {
          if (scaled)
            detail::momentum_step<true, true>(d, uv, mu, xt, s, eta, c, theta, prox, xv, hv, sv);
          else
            detail::momentum_step<true, false>(d, uv, mu, xt, s, eta, c, theta, prox, xv, hv, sv);
        } else {
          if (scaled)
            detail::momentum_step<false, true>(d, uv, mu, xt, s, eta, c, theta, prox, xv, hv, sv);
          else
            detail::momentum_step<false, false>(d, uv, mu, xt, s, eta, c, theta, prox, xv, hv, sv);
        }
        // The x^ buffer now holds x_k and the x buffer holds x^_k.
        x.swap(xhat);
        xv = x.data();
        hv = xhat.data();
        detail::clear_row(row, uv);
        log.add_component_grads(1.0);
        if (cfg.on_iterate) cfg.on_iterate(epoch, k, x);
        if (cfg.record_every > 0 && k % cfg.record_every == 0 && k < m) {
          if (!log.record(epoch, x)) return;
        }
      }
      x_tilde = sum / static_cast<double>(m);
      if (non_sc) y_tilde = (x - c * xhat) / sigma;
      tilde_sum += x_tilde;
      ++epochs_done;
      if (!log.record(epoch, x_tilde)) return;
    }
  });

  res.status = log.status();
  res.x = x_tilde;
  res.objective = objective(p, res.x);
  if (non_sc && epochs_done > 0) {
    const Vector mean = tilde_sum / static_cast<double>(epochs_done);
    const double f_mean = objective(p, mean);
    if (f_mean < res.objective) {
      res.x = mean;
      res.objective = f_mean;
    }
  }
  res.trace = log.take_trace();
  return res;
}

// ----------------------------------------------------------- SAGA family

namespace detail {

// Single SAGA / SAGA-SD inner loop; WithSd selects the momentum form.
template <bool WithSd>
SolverResult saga_loop(const Problem& p, const SolverConfig& cfg) {
  const std::size_t m = resolved_epoch_length(cfg, p.n());
  validate(p, cfg, m);
  const auto d = static_cast<std::size_t>(p.d());
  const double eta = cfg.plan.eta;
  const double c = 1.0 - cfg.plan.sigma;
  const double s = p.smooth_l2();
  const double inv_n = 1.0 / static_cast<double>(p.n());
  const bool average = WithSd || cfg.snapshot == SnapshotRule::Average;
  const bool sd_on = WithSd && cfg.theta_mode != ThetaMode::Off;
  const std::size_t m1 = sd_on ? cfg.m1.value_or(default_sd_count(m)) : 0;
  const SdContext ctx = sd_on ? make_context(p, cfg) : SdContext{};

  RunLog log(p, cfg);
  Rng rng(cfg.seed);
  SolverResult res;
  Vector x = start_point(p, cfg);
  Vector x_tilde = x;
  Vector xhat = x;
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector u = Vector::Zero(static_cast<Eigen::Index>(d));
  log.record(0, x);
  SagaTable table(p, x);
  log.add_passes(1.0);

  with_prox(p.reg(), eta, [&](auto prox) {
    std::vector<char> schedule;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      if (average) {
        x = x_tilde;
        xhat = x;
        sum.setZero();
      }
      if (sd_on) schedule = sd_schedule(rng, m, m1);
      double* xv = x.data();
      double* hv = xhat.data();
      double* sv = sum.data();
      double* uv = u.data();
      for (std::size_t k = 1; k <= m; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform_index(p.n()));
        const RowView row = p.data().row(i);
        const double rx = row.dot(x) - p.data().label(i);
        const double dr = rx - table.residual_data()[i];
        scatter_row(row, dr, uv);
        double* av = table.avg_data();
        double* phi = table.dense() ? table.phi_row(i) : nullptr;
        double theta = 1.0;
        if (sd_on && schedule[k - 1]) {
          double pn = 0.0;  // |grad f_i(x) - g_i(old)|^2
          for (std::size_t j = 0; j < d; ++j) {
            const double pj = phi ? uv[j] + s * (xv[j] - phi[j]) : uv[j];
            pn += pj * pj;
          }
          // A diverging run can make pn non-finite; the epoch-end record stops it.
          const ThetaResult tr =
              std::isfinite(pn) ? solve_theta(ctx, p, x, pn, cfg.theta_mode) : ThetaResult{};
          theta = std::isfinite(tr.theta) ? tr.theta : 1.0;
          log.add_component_grads(cfg.sd_gradient_charge);
          log.add_passes(static_cast<double>(tr.objective_evals));
          note_theta(res.sd, theta);
          if (cfg.check_property1) {
            log.pause();
            ++res.sd.property1_checks;
            if (!verify_property1(p, x, theta, ctx.zeta, pn)) ++res.sd.property1_violations;
            log.resume();
          }
        }
        for (std::size_t j = 0; j < d; ++j) {
          const double delta = phi ? uv[j] + s * (xv[j] - phi[j]) : uv[j];
          const double g = delta + av[j];
          const double y = prox(xv[j] - eta * g);
          av[j] += delta * inv_n;
          if (phi) phi[j] = xv[j];
          if constexpr (WithSd) {
            const double h = theta * xv[j];
            const double next = y + c * (h - hv[j]);
            sv[j] += h;
            hv[j] = h;
            xv[j] = next;
          } else {
            if (average) sv[j] += xv[j];
            xv[j] = y;
          }
        }
        clear_row(row, uv);
        table.residual_data()[i] = rx;
        table.note_update(p);
        log.add_component_grads(1.0);
        if (cfg.on_iterate) cfg.on_iterate(epoch, k, x);
        if (cfg.record_every > 0 && k % cfg.record_every == 0 && k < m) {
          if (!log.record(epoch, x)) return;
        }
      }
      x_tilde = average ? Vector(sum / static_cast<double>(m)) : x;
      if (!log.record(epoch, x_tilde)) return;
    }
  });

  res.status = log.status();
  res.x = x_tilde;
  res.objective = objective(p, res.x);
  res.trace = log.take_trace();
  return res;
}

}  // namespace detail

inline SolverResult run_saga(const Problem& p, SolverConfig cfg) {
  cfg.algorithm = Algorithm::Saga;
  return detail::saga_loop<false>(p, cfg);
}

/// SAGA estimator with sufficient decrease and momentum; the gradient table
/// persists across epochs.
inline SolverResult run_saga_sd(const Problem& p, SolverConfig cfg) {
  cfg.algorithm = Algorithm::SagaSd;
  return detail::saga_loop<true>(p, cfg);
}

inline SolverResult run_solver(const Problem& p, const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::Svrg: return run_svrg(p, cfg);
    case Algorithm::ProxSvrg: return run_prox_svrg(p, cfg);
    case Algorithm::Saga: return run_saga(p, cfg);
    case Algorithm::SvrgSd: return run_svrg_sd(p, cfg);
    case Algorithm::SagaSd: return run_saga_sd(p, cfg);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace vrsd
