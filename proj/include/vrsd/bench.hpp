#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vrsd/dataset.hpp"
#include "vrsd/dataset_file.hpp"
#include "vrsd/reference.hpp"
#include "vrsd/solvers.hpp"
#include "vrsd/trace.hpp"

namespace vrsd {

struct SynthParams {
  std::size_t n = 500;
  std::size_t d = 20;
  double sparsity = 1.0;
  double noise = 0.1;
  std::uint64_t seed = 1;
  double decay = 0.0;
  /// Unit-length rows, as in the usual benchmark protocol; unit=0 keeps raw rows.
  bool unit = true;
};

/// Parses "n=500,d=20,sparsity=1,noise=0.1,seed=1,decay=1,unit=1"; every key is optional.
inline SynthParams parse_synth_params(const std::string& text) {
  SynthParams sp;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--synth: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    double v = 0.0;
    if (!detail::parse_double(val, v)) throw std::invalid_argument("--synth: bad number for " + key + ": '" + val + "'");
    auto as_count = [&](const char* what) {
      if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument(std::string("--synth: ") + what + " must be a positive integer");
      return static_cast<std::size_t>(v);
    };
    if (key == "n") sp.n = as_count("n");
    else if (key == "d") sp.d = as_count("d");
    else if (key == "sparsity") sp.sparsity = v;
    else if (key == "noise") sp.noise = v;
    else if (key == "seed") sp.seed = as_count("seed");
    else if (key == "decay") sp.decay = v;
    else if (key == "unit" && (v == 0.0 || v == 1.0)) sp.unit = v == 1.0;
    else if (key == "unit") throw std::invalid_argument("--synth: unit must be 0 or 1");
    else throw std::invalid_argument("--synth: unknown key '" + key + "' (n, d, sparsity, noise, seed, decay, unit)");
  }
  return sp;
}

/// Which problem to build on top of a dataset. Quadratic weights live in the
/// smooth part f, so ridge problems can be handed to plain SVRG.
struct ProblemSpec {
  double l2 = 0.0;
  double l1 = 0.0;

  Problem build(std::shared_ptr<const Dataset> data) const {
    const Regularizer reg = l1 > 0.0 ? Regularizer::lasso(l1) : Regularizer::none();
    return Problem(std::move(data), reg, l2);
  }
  std::string describe() const {
    if (l1 > 0.0 && l2 > 0.0) return "elastic:" + detail::format_double(l2) + "," + detail::format_double(l1);
    if (l1 > 0.0) return "lasso:" + detail::format_double(l1);
    if (l2 > 0.0) return "ridge:" + detail::format_double(l2);
    return "none";
  }
};

/// "ridge:1e-4", "lasso:1e-4", "elastic:1e-4,1e-5" (l2 first) or "none".
inline ProblemSpec parse_problem_spec(const std::string& text) {
  ProblemSpec ps;
  if (text == "none") return ps;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("--reg: expected kind:value, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  auto num = [&](const std::string& s) {
    double v = 0.0;
    if (!detail::parse_double(s, v) || !(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("--reg: weights must be finite and >= 0, got '" + s + "'");
    return v;
  };
  if (kind == "ridge") {
    ps.l2 = num(rest);
  } else if (kind == "lasso") {
    ps.l1 = num(rest);
  } else if (kind == "elastic") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("--reg: elastic needs l2,l1");
    ps.l2 = num(rest.substr(0, comma));
    ps.l1 = num(rest.substr(comma + 1));
  } else {
    throw std::invalid_argument("--reg: unknown kind '" + kind + "' (ridge|lasso|elastic|none)");
  }
  return ps;
}

/// {1, 2.5, 5, 7.5, 10} x 10^j for every j, sorted and without duplicates.
inline std::vector<double> step_grid(const std::vector<int>& js) {
  std::vector<double> out;
  for (int j : js)
    for (double c : {1.0, 2.5, 5.0, 7.5, 10.0}) out.push_back(c * std::pow(10.0, j));
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double v : out)
    if (unique.empty() || std::abs(v - unique.back()) > 1e-12 * v) unique.push_back(v);
  return unique;
}

struct RunSpec {
  std::optional<std::string> data_path;
  std::optional<std::size_t> data_dim;
  SynthParams synth;
  bool normalize = false;
  ProblemSpec problem;
  std::vector<Algorithm> solvers{Algorithm::Svrg, Algorithm::SvrgSd};
  std::vector<double> etas = step_grid({-2, -1, 0});
  /// When set, replaces the grid by the single step 1/(L alpha).
  std::optional<double> alpha;
  std::size_t epochs = 30;
  std::size_t m = 0;
  std::optional<std::size_t> m1;
  double sigma = 0.5;
  double delta = 0.1;
  std::vector<std::uint64_t> seeds{1};
  FastNormConfig fastnorm;
  ThetaMode theta = ThetaMode::ClosedForm;
  SnapshotRule snapshot = SnapshotRule::LastIterate;
  Convexity convexity = Convexity::StronglyConvex;
  double sd_gradient_charge = 0.0;
  bool logical_clock = false;
  double target_gap = 1e-8;
  std::size_t jobs = 1;
  std::filesystem::path out_dir = "vrsd-out";
  bool write_json = false;
};

inline void validate(const RunSpec& spec) {
  if (spec.solvers.empty()) throw std::invalid_argument("no solvers selected");
  if (spec.etas.empty() && !spec.alpha) throw std::invalid_argument("step-size grid is empty");
  for (double e : spec.etas)
    if (!(e > 0.0)) throw std::invalid_argument("step sizes must be positive");
  if (spec.alpha && !(*spec.alpha > 0.0)) throw std::invalid_argument("--alpha must be positive");
  if (spec.seeds.empty()) throw std::invalid_argument("no seeds given");
  if (spec.epochs < 1) throw std::invalid_argument("--epochs must be >= 1");
  if (!(spec.sigma >= 0.0 && spec.sigma <= 1.0)) throw std::invalid_argument("--sigma must lie in [0, 1]");
  if (!(spec.delta > 0.0)) throw std::invalid_argument("--delta must be positive");
  if (!(spec.target_gap > 0.0)) throw std::invalid_argument("--target-gap must be positive");
  if (spec.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
  if (spec.m1 && spec.m > 0 && *spec.m1 > spec.m) throw std::invalid_argument("--m1 must not exceed --m");
}

inline std::shared_ptr<const Dataset> load_dataset(const RunSpec& spec) {
  Dataset ds;
  if (spec.data_path) {
    ds = load_libsvm_file(*spec.data_path, spec.data_dim);
  } else {
    const auto& s = spec.synth;
    ds = synth_regression(s.n, s.d, s.sparsity, s.noise, s.seed, SynthOptions{s.decay, s.unit || spec.normalize})
             .data;
    return std::make_shared<const Dataset>(std::move(ds));
  }
  if (spec.normalize) {
    const std::string id = ds.id();
    ds = normalize_rows(ds);
    ds.set_id(id + "#unit");
  }
  return std::make_shared<const Dataset>(std::move(ds));
}

inline std::vector<double> effective_etas(const RunSpec& spec, const Problem& p) {
  if (spec.alpha) return {1.0 / (p.lipschitz() * *spec.alpha)};
  return spec.etas;
}

inline SolverConfig make_solver_config(const RunSpec& spec, const Problem& p, Algorithm a, double eta,
                                       std::uint64_t seed) {
  SolverConfig c;
  c.algorithm = a;
  c.epochs = spec.epochs;
  c.m = spec.m;
  c.m1 = spec.m1;
  c.plan = step_plan_for_eta(p.lipschitz(), eta, spec.sigma, spec.delta);
  c.convexity = a == Algorithm::SvrgSd ? spec.convexity : Convexity::StronglyConvex;
  c.seed = seed;
  c.theta_mode = spec.theta;
  c.snapshot = spec.snapshot;
  c.fastnorm = spec.fastnorm;
  c.sd_gradient_charge = spec.sd_gradient_charge;
  c.logical_clock = spec.logical_clock;
  return c;
}

struct CellResult {
  Algorithm algorithm;
  double eta = 0.0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Completed;
  /// NaN when the target gap was never reached.
  double passes_to_target = std::numeric_limits<double>::quiet_NaN();
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  std::string error;
  Trace trace;
};

struct SolverSummary {
  Algorithm algorithm;
  bool all_diverged = false;
  bool target_reached = false;
  double best_eta = std::numeric_limits<double>::quiet_NaN();
  /// Median over seeds at best_eta.
  double best_passes = std::numeric_limits<double>::quiet_NaN();
};

struct GridReport {
  std::string dataset;
  std::string problem;
  std::size_t n = 0, d = 0;
  double lipschitz = 0.0;
  ReferenceOptimum reference;
  double target_gap = 0.0;
  std::vector<CellResult> cells;
  std::vector<SolverSummary> summaries;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Fewest median passes to the target gap over non-diverged grid points;
/// if nothing reaches it, the smallest median final gap.
inline SolverSummary select_best_eta(Algorithm a, const std::vector<CellResult>& cells) {
  SolverSummary s;
  s.algorithm = a;
  std::map<double, std::vector<const CellResult*>> by_eta;
  for (const auto& c : cells)
    if (c.algorithm == a) by_eta[c.eta].push_back(&c);
  double best_passes = std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();
  double fallback_eta = std::numeric_limits<double>::quiet_NaN();
  bool any_ok = false;
  for (const auto& [eta, group] : by_eta) {
    bool diverged = false;
    std::vector<double> passes, gaps;
    for (const CellResult* c : group) {
      if (c->status == RunStatus::Diverged || !c->error.empty()) diverged = true;
      passes.push_back(std::isnan(c->passes_to_target) ? std::numeric_limits<double>::infinity()
                                                       : c->passes_to_target);
      gaps.push_back(c->final_gap);
    }
    if (diverged) continue;
    any_ok = true;
    const double mp = median_of(passes);
    if (std::isfinite(mp) && mp < best_passes) {
      best_passes = mp;
      s.best_eta = eta;
    }
    const double mg = median_of(gaps);
    if (mg < best_gap) {
      best_gap = mg;
      fallback_eta = eta;
    }
  }
  s.all_diverged = !any_ok;
  s.target_reached = std::isfinite(best_passes);
  if (s.target_reached) s.best_passes = best_passes;
  else s.best_eta = fallback_eta;
  return s;
}

/// Runs every (solver, eta, seed) cell; cells share the problem and the SD
/// precompute, and at most `spec.jobs` run at once. Results are in grid
/// order regardless of scheduling.
inline GridReport run_grid(const RunSpec& spec) {
  validate(spec);
  const auto data = load_dataset(spec);
  const Problem p = spec.problem.build(data);
  GridReport rep;
  rep.dataset = data->id();
  rep.problem = spec.problem.describe();
  rep.n = p.n();
  rep.d = p.d();
  rep.lipschitz = p.lipschitz();
  rep.target_gap = spec.target_gap;
  rep.reference = reference_optimum(p);

  const auto pre = SdPrecompute::build(*data, spec.fastnorm);
  const auto etas = effective_etas(spec, p);
  for (Algorithm a : spec.solvers)
    for (double eta : etas)
      for (auto seed : spec.seeds) {
        CellResult c;
        c.algorithm = a;
        c.eta = eta;
        c.seed = seed;
        rep.cells.push_back(std::move(c));
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < rep.cells.size(); k = next++) {
      CellResult& c = rep.cells[k];
      try {
        SolverConfig cfg = make_solver_config(spec, p, c.algorithm, c.eta, c.seed);
        cfg.precompute = pre;
        SolverResult r = run_solver(p, cfg);
        attach_gaps(r.trace, rep.reference.dataset, rep.reference.f_star);
        c.status = r.status;
        c.trace = std::move(r.trace);
        if (c.status == RunStatus::Completed) {
          c.passes_to_target = passes_to_gap(c.trace, spec.target_gap);
          c.final_gap = std::max(r.objective - rep.reference.f_star, kGapFloor);
        }
      } catch (const std::exception& e) {
        c.error = e.what();
      }
    }
  };
  const std::size_t threads = std::min(spec.jobs, rep.cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (Algorithm a : spec.solvers) rep.summaries.push_back(select_best_eta(a, rep.cells));
  return rep;
}

inline std::string trace_file_name(const CellResult& c) {
  return to_string(c.algorithm) + "_eta" + detail::format_double(c.eta) + "_seed" +
         std::to_string(c.seed) + ".csv";
}

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json summary_json(const GridReport& rep) {
  nlohmann::json j;
  j["dataset"] = rep.dataset;
  j["problem"] = rep.problem;
  j["n"] = rep.n;
  j["d"] = rep.d;
  j["lipschitz"] = rep.lipschitz;
  j["f_star"] = rep.reference.f_star;
  j["reference_method"] = to_string(rep.reference.method);
  j["reference_residual"] = rep.reference.residual_check;
  j["target_gap"] = rep.target_gap;
  auto& solvers = j["solvers"] = nlohmann::json::array();
  for (const auto& s : rep.summaries) {
    nlohmann::json js{{"solver", to_string(s.algorithm)},
                      {"all_diverged", s.all_diverged},
                      {"target_reached", s.target_reached},
                      {"best_eta", json_number(s.best_eta)},
                      {"best_passes", json_number(s.best_passes)}};
    auto& runs = js["runs"] = nlohmann::json::array();
    for (const auto& c : rep.cells) {
      if (c.algorithm != s.algorithm) continue;
      nlohmann::json jc{{"eta", c.eta},
                        {"seed", c.seed},
                        {"status", c.error.empty() ? to_string(c.status) : "error"},
                        {"passes_to_target", json_number(c.passes_to_target)},
                        {"final_gap", json_number(c.final_gap)},
                        {"trace", trace_file_name(c)}};
      if (!c.error.empty()) jc["error"] = c.error;
      runs.push_back(std::move(jc));
    }
    solvers.push_back(std::move(js));
  }
  return j;
}

/// One CSV per cell (plus a JSON mirror when asked) and summary.json.
inline void write_outputs(const GridReport& rep, const RunSpec& spec) {
  std::filesystem::create_directories(spec.out_dir);
  for (const auto& c : rep.cells) {
    if (!c.error.empty()) continue;
    const auto path = spec.out_dir / trace_file_name(c);
    write_trace_csv(std::span<const Trace>(&c.trace, 1), path);
    if (spec.write_json) {
      auto jpath = path;
      jpath.replace_extension(".json");
      write_file_atomic(jpath, trace_to_json(c.trace).dump(2) + "\n");
    }
  }
  write_file_atomic(spec.out_dir / "summary.json", summary_json(rep).dump(2) + "\n");
}

}  // namespace vrsd
