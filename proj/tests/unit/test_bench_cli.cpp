#include <gtest/gtest.h>

#include <filesystem>

#include "vrsd/bench.hpp"
#include "vrsd/verify.hpp"

using namespace vrsd;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("vrsd-bench-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

RunSpec small_spec() {
  RunSpec s;
  s.synth = parse_synth_params("n=80,d=6,seed=4");
  s.problem = parse_problem_spec("ridge:1e-3");
  s.etas = step_grid({-1});
  s.epochs = 8;
  s.logical_clock = true;
  return s;
}

}  // namespace

TEST(Parsing, SynthParams) {
  const SynthParams s = parse_synth_params("n=100,d=7,sparsity=0.25,noise=0,seed=9,decay=1.5");
  EXPECT_EQ(s.n, 100u);
  EXPECT_EQ(s.d, 7u);
  EXPECT_EQ(s.sparsity, 0.25);
  EXPECT_EQ(s.noise, 0.0);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.decay, 1.5);
  EXPECT_TRUE(s.unit);
  EXPECT_FALSE(parse_synth_params("unit=0").unit);
  EXPECT_EQ(parse_synth_params("").n, 500u);
  EXPECT_THROW(parse_synth_params("unit=2"), std::invalid_argument);
  EXPECT_THROW(parse_synth_params("n=0"), std::invalid_argument);
  EXPECT_THROW(parse_synth_params("n=2.5"), std::invalid_argument);
  EXPECT_THROW(parse_synth_params("rows=5"), std::invalid_argument);
  EXPECT_THROW(parse_synth_params("n"), std::invalid_argument);
  EXPECT_THROW(parse_synth_params("d=abc"), std::invalid_argument);
}

TEST(Parsing, ProblemSpec) {
  EXPECT_EQ(parse_problem_spec("ridge:1e-4").l2, 1e-4);
  EXPECT_EQ(parse_problem_spec("lasso:0.5").l1, 0.5);
  const ProblemSpec e = parse_problem_spec("elastic:1e-4,1e-5");
  EXPECT_EQ(e.l2, 1e-4);
  EXPECT_EQ(e.l1, 1e-5);
  EXPECT_EQ(e.describe(), "elastic:1e-04,1e-05");
  EXPECT_EQ(parse_problem_spec("none").describe(), "none");
  for (const char* bad : {"ridge", "ridge:-1", "lasso:x", "elastic:1", "l3:1", "ridge:inf"})
    EXPECT_THROW(parse_problem_spec(bad), std::invalid_argument) << bad;
}

TEST(Parsing, ProblemSpecBuildsSmoothRidge) {
  auto data = std::make_shared<const Dataset>(synth_regression(10, 3, 1.0, 0.1, 1).data);
  const Problem p = parse_problem_spec("ridge:0.1").build(data);
  EXPECT_EQ(p.smooth_l2(), 0.1);
  EXPECT_EQ(p.reg().kind, RegKind::None);
  const Problem q = parse_problem_spec("lasso:0.1").build(data);
  EXPECT_EQ(q.reg().l1, 0.1);
}

TEST(StepGrid, DefaultGrid) {
  const auto g = step_grid({-2, -1, 0});
  EXPECT_EQ(g.size(), 13u);
  EXPECT_EQ(g.front(), 0.01);
  EXPECT_EQ(g.back(), 10.0);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_EQ(step_grid({-1}), (std::vector<double>{0.1, 0.25, 0.5, 0.75, 1.0}));
}

TEST(RunSpec, Validation) {
  RunSpec s = small_spec();
  EXPECT_NO_THROW(validate(s));
  auto expect_bad = [](RunSpec bad) { EXPECT_THROW(validate(bad), std::invalid_argument); };
  RunSpec b = s;
  b.solvers.clear();
  expect_bad(b);
  b = s;
  b.etas = {};
  expect_bad(b);
  b = s;
  b.etas = {0.1, -1.0};
  expect_bad(b);
  b = s;
  b.sigma = 1.5;
  expect_bad(b);
  b = s;
  b.seeds.clear();
  expect_bad(b);
  b = s;
  b.m = 10;
  b.m1 = 20;
  expect_bad(b);
  b = s;
  b.data_path = "/nonexistent/data.libsvm";
  EXPECT_THROW(run_grid(b), std::runtime_error);
}

TEST(RunGrid, CombinatorialOutputs) {
  RunSpec s = small_spec();
  s.out_dir = scratch("combinatorial");
  s.seeds = {1, 2};
  s.write_json = true;
  const GridReport rep = run_grid(s);
  write_outputs(rep, s);
  std::size_t csv = 0, json = 0;
  for (const auto& e : std::filesystem::directory_iterator(s.out_dir)) {
    if (e.path().extension() == ".csv") ++csv;
    if (e.path().extension() == ".json") ++json;
  }
  EXPECT_EQ(csv, 2u * 5u * 2u);
  EXPECT_EQ(json, csv + 1);
  EXPECT_TRUE(std::filesystem::exists(s.out_dir / "svrg-sd_eta0.25_seed2.csv"));
  const auto back = read_trace_csv(s.out_dir / "svrg_eta0.5_seed1.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].solver, "svrg");
  EXPECT_EQ(back[0].dataset, "synth-n80-d6-s4-unit");
  std::filesystem::remove_all(s.out_dir);
}

TEST(RunGrid, BestEtaIsNoWorseThanAnyOther) {
  RunSpec s = small_spec();
  s.seeds = {1, 2, 3};
  s.etas = step_grid({-2, -1, 0});
  s.epochs = 20;
  const GridReport rep = run_grid(s);
  for (const auto& sum : rep.summaries) {
    ASSERT_TRUE(sum.target_reached) << to_string(sum.algorithm);
    std::map<double, std::vector<double>> by_eta;
    std::set<double> bad;
    for (const auto& c : rep.cells) {
      if (c.algorithm != sum.algorithm) continue;
      if (c.status == RunStatus::Diverged) bad.insert(c.eta);
      by_eta[c.eta].push_back(std::isnan(c.passes_to_target) ? INFINITY : c.passes_to_target);
    }
    EXPECT_FALSE(bad.empty()) << "grid should include diverging steps";
    EXPECT_FALSE(bad.count(sum.best_eta));
    for (const auto& [eta, v] : by_eta)
      if (!bad.count(eta)) {
        EXPECT_LE(sum.best_passes, median_of(v));
      }
  }
}

TEST(RunGrid, AllDivergedIsReported) {
  RunSpec s = small_spec();
  s.etas = {50.0, 100.0};
  const GridReport rep = run_grid(s);
  for (const auto& sum : rep.summaries) EXPECT_TRUE(sum.all_diverged);
  const auto j = summary_json(rep);
  EXPECT_TRUE(j.at("solvers").at(0).at("best_eta").is_null());
  EXPECT_EQ(j.at("solvers").at(0).at("runs").at(0).at("status"), "diverged");
}

TEST(RunGrid, ParallelMatchesSerial) {
  RunSpec s = small_spec();
  s.solvers = {Algorithm::Svrg, Algorithm::ProxSvrg, Algorithm::Saga, Algorithm::SvrgSd, Algorithm::SagaSd};
  const GridReport a = run_grid(s);
  s.jobs = 3;
  const GridReport b = run_grid(s);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t k = 0; k < a.cells.size(); ++k) EXPECT_TRUE(same_csv_fields(a.cells[k].trace, b.cells[k].trace));
  EXPECT_EQ(summary_json(a).dump(), summary_json(b).dump());
}

TEST(RunGrid, LibraryAndGridAgree) {
  RunSpec s = small_spec();
  s.seeds = {3};
  const GridReport rep = run_grid(s);
  const auto data = load_dataset(s);
  const Problem p = s.problem.build(data);
  SolverConfig c = make_solver_config(s, p, Algorithm::SvrgSd, 0.5, 3);
  const SolverResult direct = run_solver(p, c);
  for (const auto& cell : rep.cells)
    if (cell.algorithm == Algorithm::SvrgSd && cell.eta == 0.5) {
      ASSERT_EQ(cell.trace.records.size(), direct.trace.records.size());
      for (std::size_t k = 0; k < direct.trace.records.size(); ++k)
        EXPECT_TRUE(same_bits(cell.trace.records[k].objective, direct.trace.records[k].objective));
    }
}

TEST(RunGrid, AlphaOverridesGridAndFileInputWorks) {
  const auto dir = scratch("file-input");
  std::filesystem::create_directories(dir);
  const auto path = dir / "d.libsvm";
  write_file_atomic(path, serialize_libsvm(synth_regression(40, 5, 0.5, 0.1, 2).data));
  RunSpec s = small_spec();
  s.data_path = path.string();
  s.normalize = true;
  s.alpha = 2.0;
  const GridReport rep = run_grid(s);
  EXPECT_EQ(rep.cells.size(), 2u);
  EXPECT_EQ(rep.dataset, path.string() + "#unit");
  EXPECT_DOUBLE_EQ(rep.cells[0].eta, 1.0 / (2.0 * rep.lipschitz));
  EXPECT_NEAR(rep.lipschitz, 1.0 + 1e-3, 1e-12);
  std::filesystem::remove_all(dir);
}

TEST(Verify, FreshBatteryPasses) {
  VerifyOptions o;
  o.quick = true;
  for (const auto& r : run_invariant_battery(o)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Verify, ClampedThetaIsCaught) {
  VerifyOptions o;
  o.quick = true;
  o.theta_ridge_fn = [](const SdContext& ctx, const Problem& p, const Vector& x, double pn) {
    ThetaResult r = theta_ridge(ctx, p, x, pn);
    r.theta = std::clamp(r.theta, 0.0, 1.0);
    return r;
  };
  std::vector<std::string> failed;
  for (const auto& r : run_invariant_battery(o))
    if (!r.passed) failed.push_back(r.name);
  EXPECT_NE(std::find(failed.begin(), failed.end(), "theta_oracle_agreement"), failed.end());
}
