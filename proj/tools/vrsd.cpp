// vrsd: command-line driver for the variance-reduced solvers.
//
//   vrsd run      grid of (solver, step size, seed) runs, traces + summary.json
//   vrsd verify   fast invariant battery, exit 0 iff everything holds
//   vrsd optimum  reference optimum of a problem
//   vrsd info     dataset and problem statistics

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vrsd/bench.hpp"
#include "vrsd/verify.hpp"

namespace {

using namespace vrsd;

struct DataFlags {
  std::string synth;
  std::string data;
  std::size_t dim = 0;
  bool normalize = false;
  std::string reg = "ridge:1e-4";
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  auto* synth = cmd->add_option("--synth", f.synth,
                                "Synthetic data: n=,d=,sparsity=,noise=,seed=,decay=,unit= (default n=500,d=20, unit rows)");
  auto* data = cmd->add_option("--data", f.data, "LIBSVM file (.gz accepted)");
  synth->excludes(data);
  cmd->add_option("--dim", f.dim, "Feature dimension for --data (default: largest index)");
  cmd->add_flag("--normalize", f.normalize, "Scale every sample to unit length");
  cmd->add_option("--reg", f.reg, "ridge:L | lasso:L | elastic:L2,L1 | none")->capture_default_str();
}

void apply_data_flags(const DataFlags& f, RunSpec& spec) {
  if (!f.data.empty()) spec.data_path = f.data;
  if (f.dim > 0) spec.data_dim = f.dim;
  if (!f.synth.empty()) spec.synth = parse_synth_params(f.synth);
  spec.normalize = f.normalize;
  spec.problem = parse_problem_spec(f.reg);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<Algorithm> parse_solvers(const std::string& s) {
  if (s == "all")
    return {Algorithm::Svrg, Algorithm::ProxSvrg, Algorithm::Saga, Algorithm::SvrgSd, Algorithm::SagaSd};
  std::vector<Algorithm> out;
  for (const auto& name : split(s, ',')) out.push_back(algorithm_from_string(name));
  return out;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("VRSD_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric VRSD_SEED='" << env << "'\n";
    }
  }
  return 1;
}

int cmd_run(const RunSpec& spec) {
  const GridReport rep = run_grid(spec);
  write_outputs(rep, spec);
  int code = 0;
  std::cout << "dataset " << rep.dataset << " (n=" << rep.n << ", d=" << rep.d << "), " << rep.problem
            << ", F*=" << detail::format_double(rep.reference.f_star) << "\n";
  for (const auto& s : rep.summaries) {
    std::cout << "  " << to_string(s.algorithm) << ": ";
    if (s.all_diverged) {
      std::cout << "every grid point diverged\n";
      code = 2;
    } else if (s.target_reached) {
      std::cout << "best eta " << detail::format_double(s.best_eta) << ", "
                << detail::format_double(s.best_passes) << " passes to gap "
                << detail::format_double(rep.target_gap) << "\n";
    } else {
      std::cout << "target gap not reached; smallest final gap at eta "
                << detail::format_double(s.best_eta) << "\n";
    }
  }
  for (const auto& c : rep.cells)
    if (!c.error.empty()) {
      std::cerr << "error: " << to_string(c.algorithm) << " eta=" << c.eta << " seed=" << c.seed << ": "
                << c.error << "\n";
      code = 2;
    }
  std::cout << rep.cells.size() << " runs written to " << spec.out_dir.string() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced stochastic solvers with sufficient decrease"};
  app.set_config("--config", "", "Key/value config file; command-line flags take precedence");
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a step-size grid and write traces");
  DataFlags run_data;
  add_data_flags(run, run_data);
  std::string solvers = "svrg,svrg-sd";
  std::vector<int> grid_j{-2, -1, 0};
  std::vector<double> etas;
  std::optional<double> alpha;
  std::size_t epochs = 30, m = 0, m1 = 0, jobs = 1;
  double sigma = 0.5, delta = 0.1, target_gap = 1e-8, sd_charge = 0.0;
  std::vector<std::uint64_t> seeds;
  std::string fastnorm = "auto", theta = "closed", snapshot = "last", convexity = "sc", out = "vrsd-out";
  double energy = 0.995;
  std::size_t r_max = 64;
  bool json = false, logical_clock = false;
  run->add_option("--solvers", solvers, "Comma list of svrg,prox-svrg,saga,svrg-sd,saga-sd or 'all'")
      ->capture_default_str();
  run->add_option("--grid-j", grid_j, "Exponents j of the grid {1,2.5,5,7.5,10} x 10^j")
      ->delimiter(',')
      ->capture_default_str();
  run->add_option("--eta", etas, "Explicit step sizes (replace the grid)")->delimiter(',');
  run->add_option("--alpha", alpha, "Single step 1/(L alpha) instead of a grid");
  run->add_option("--epochs", epochs, "Epochs S")->capture_default_str();
  run->add_option("--m", m, "Inner iterations per epoch (0: 2n, or n for SAGA)")->capture_default_str();
  run->add_option("--m1", m1, "SD iterations per epoch (0: floor(m/1000), at least 1)");
  run->add_option("--sigma", sigma, "Momentum constant sigma in [0,1]")->capture_default_str();
  run->add_option("--delta", delta, "Constant delta in zeta = delta eta/(1 - L eta)")->capture_default_str();
  run->add_option("--seeds", seeds, "Comma list of seeds (default: $VRSD_SEED or 1)")->delimiter(',');
  run->add_option("--fastnorm", fastnorm, "auto|exact|lowrank|lazy")->capture_default_str();
  run->add_option("--energy", energy, "Spectral energy kept by the low-rank |Ax|")->capture_default_str();
  run->add_option("--rank-max", r_max, "Largest rank tried by the low-rank |Ax|")->capture_default_str();
  run->add_option("--theta", theta, "closed|armijo|off")->capture_default_str();
  run->add_option("--snapshot", snapshot, "last|average (svrg, prox-svrg, saga)")->capture_default_str();
  run->add_option("--convexity", convexity, "sc|nonsc (svrg-sd only)")->capture_default_str();
  run->add_option("--sd-charge", sd_charge, "Component gradients charged per SD iteration")
      ->capture_default_str();
  run->add_option("--target-gap", target_gap, "Gap used to pick the best step size")->capture_default_str();
  run->add_option("--jobs", jobs, "Grid cells run in parallel")->capture_default_str();
  run->add_option("--out", out, "Output directory")->capture_default_str();
  run->add_flag("--json", json, "Also write a JSON mirror of every trace");
  run->add_flag("--logical-clock", logical_clock, "Record work units instead of wall time");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the invariant battery");
  bool quick = false;
  verify->add_flag("--quick", quick, "Smaller sample counts");

  // optimum
  auto* optimum = app.add_subcommand("optimum", "Compute the reference optimum");
  DataFlags opt_data;
  add_data_flags(optimum, opt_data);
  std::string x_out;
  optimum->add_option("--x-out", x_out, "Write x* (one value per line)");

  // info
  auto* info = app.add_subcommand("info", "Print dataset and problem statistics");
  DataFlags info_data;
  add_data_flags(info, info_data);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunSpec spec;
      apply_data_flags(run_data, spec);
      spec.solvers = parse_solvers(solvers);
      spec.etas = etas.empty() ? step_grid(grid_j) : etas;
      spec.alpha = alpha;
      spec.epochs = epochs;
      spec.m = m;
      if (m1 > 0) spec.m1 = m1;
      spec.sigma = sigma;
      spec.delta = delta;
      spec.seeds = seeds.empty() ? std::vector<std::uint64_t>{default_seed()} : seeds;
      spec.fastnorm.mode = norm_mode_from_string(fastnorm);
      spec.fastnorm.energy_target = energy;
      spec.fastnorm.r_max = r_max;
      spec.theta = theta_mode_from_string(theta);
      if (snapshot == "last") spec.snapshot = SnapshotRule::LastIterate;
      else if (snapshot == "average") spec.snapshot = SnapshotRule::Average;
      else throw std::invalid_argument("--snapshot must be last or average");
      if (convexity == "sc") spec.convexity = Convexity::StronglyConvex;
      else if (convexity == "nonsc") spec.convexity = Convexity::NonStronglyConvex;
      else throw std::invalid_argument("--convexity must be sc or nonsc");
      spec.sd_gradient_charge = sd_charge;
      spec.logical_clock = logical_clock;
      spec.target_gap = target_gap;
      spec.jobs = jobs;
      spec.out_dir = out;
      spec.write_json = json;
      return cmd_run(spec);
    }
    if (*verify) {
      VerifyOptions vo;
      vo.quick = quick;
      vo.seed = default_seed();
      bool ok = true;
      for (const auto& r : run_invariant_battery(vo)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
    if (*optimum) {
      RunSpec spec;
      apply_data_flags(opt_data, spec);
      const auto data = load_dataset(spec);
      const Problem p = spec.problem.build(data);
      const ReferenceOptimum ref = reference_optimum(p);
      nlohmann::json j{{"dataset", ref.dataset},
                       {"problem", spec.problem.describe()},
                       {"f_star", ref.f_star},
                       {"method", to_string(ref.method)},
                       {"residual_check", ref.residual_check},
                       {"x_norm", ref.x_star.norm()},
                       {"nonzeros", (ref.x_star.array() != 0.0).count()}};
      std::cout << j.dump(2) << "\n";
      if (!x_out.empty()) {
        std::string text;
        for (Eigen::Index k = 0; k < ref.x_star.size(); ++k) text += detail::format_double(ref.x_star[k]) + "\n";
        write_file_atomic(x_out, text);
      }
      return 0;
    }
    if (*info) {
      RunSpec spec;
      apply_data_flags(info_data, spec);
      const auto data = load_dataset(spec);
      const Problem p = spec.problem.build(data);
      nlohmann::json j{{"dataset", data->id()},
                       {"n", data->n()},
                       {"d", data->d()},
                       {"nnz", data->nnz()},
                       {"density", data->density()},
                       {"max_row_norm_sq", data->max_row_norm_sq()},
                       {"problem", spec.problem.describe()},
                       {"lipschitz", p.lipschitz()},
                       {"fastnorm_auto", to_string(resolve_norm_mode(*data, NormMode::Auto))},
                       {"default_m_svrg", 2 * data->n()},
                       {"default_m_saga_sd", data->n()}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
