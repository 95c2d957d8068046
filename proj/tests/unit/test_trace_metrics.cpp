#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "vrsd/reference.hpp"
#include "vrsd/solvers.hpp"
#include "vrsd/trace.hpp"

using namespace vrsd;

namespace {

Trace sample_trace(const std::string& solver, std::uint64_t seed) {
  Trace t;
  t.solver = solver;
  t.dataset = "synth-n5-d2-s1";
  t.seed = seed;
  Rng rng(seed);
  for (std::size_t k = 0; k < 6; ++k) {
    TraceRecord r;
    r.epoch = k;
    r.passes = 3.0 * static_cast<double>(k) + 0.1;
    r.wall_ns = static_cast<std::int64_t>(1000 * k + 7);
    r.objective = std::exp(rng.normal()) / 3.0;
    r.gap = k % 2 ? r.objective * 1e-7 : std::numeric_limits<double>::quiet_NaN();
    t.records.push_back(r);
  }
  return t;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("vrsd-trace-test-" + name);
}

}  // namespace

TEST(ReferenceOptimum, RidgeIdentityDesign) {
  const Dataset ds = Dataset::from_rows(2, {{{0, 1.0}}, {{1, 1.0}}}, {3.0, -6.0});
  const Problem p(std::make_shared<const Dataset>(ds), Regularizer::none(), 1.0);
  const ReferenceOptimum ref = reference_optimum(p);
  // (x - b)/n + x = 0 gives x = b/(1 + n).
  EXPECT_EQ(ref.method, RefMethod::NormalEquations);
  EXPECT_NEAR(ref.x_star[0], 1.0, 1e-14);
  EXPECT_NEAR(ref.x_star[1], -2.0, 1e-14);
  const auto dn = oracle::densify(ds);
  EXPECT_LE((ref.x_star - oracle::ridge_solution(dn, 1.0)).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(ReferenceOptimum, RidgeAgreesWithQr) {
  for (bool in_reg : {false, true}) {
    auto ds = std::make_shared<const Dataset>(synth_regression(80, 12, 0.7, 0.2, 3).data);
    const Problem p(ds, in_reg ? Regularizer::ridge(1e-3) : Regularizer::none(), in_reg ? 0.0 : 1e-3);
    const ReferenceOptimum ref = reference_optimum(p);
    const auto dn = oracle::densify(*ds);
    EXPECT_LE((ref.x_star - oracle::ridge_solution(dn, 1e-3)).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LE(ref.residual_check, 1e-12);
    EXPECT_EQ(ref.dataset, ds->id());
  }
}

TEST(ReferenceOptimum, HugeLassoPenaltyGivesZero) {
  auto ds = std::make_shared<const Dataset>(synth_regression(30, 5, 1.0, 0.2, 4).data);
  const Problem p(ds, Regularizer::lasso(1e6));
  const ReferenceOptimum ref = reference_optimum(p);
  EXPECT_EQ(ref.x_star, Vector::Zero(5));
  double s = 0.0;
  for (double b : ds->labels()) s += b * b;
  EXPECT_NEAR(ref.f_star, s / 60.0, 1e-15);
}

TEST(ReferenceOptimum, LassoBeatsLongProxGradientOracle) {
  auto ds = std::make_shared<const Dataset>(synth_regression(60, 10, 1.0, 0.2, 5).data);
  const Problem p(ds, Regularizer::lasso(1e-2));
  const ReferenceOptimum ref = reference_optimum(p);
  const auto dn = oracle::densify(*ds);
  const oracle::Weights w{0, 0, 1e-2};
  EXPECT_EQ(ref.method, RefMethod::LongProxGradient);
  EXPECT_LE(ref.f_star, oracle::objective(dn, w, oracle::prox_gradient(dn, w, 20000)) + 1e-14);
  EXPECT_LE(ref.residual_check, 1e-10);
}

TEST(ReferenceOptimum, SingularSystemFallsBack) {
  auto ds = std::make_shared<const Dataset>(synth_regression(5, 10, 1.0, 0.2, 6).data);
  const Problem p(ds, Regularizer::none());
  const ReferenceOptimum ref = reference_optimum(p, ReferenceOptions{20000, 1e-14, 4096});
  EXPECT_EQ(ref.method, RefMethod::LongProxGradient);
  EXPECT_LE(ref.f_star, 1e-12);
}

TEST(ReferenceOptimum, NoSolverGoesBelow) {
  auto ds = std::make_shared<const Dataset>(synth_regression(100, 8, 1.0, 0.2, 7).data);
  for (Regularizer reg : {Regularizer::none(), Regularizer::lasso(1e-3)}) {
    const Problem p(ds, reg, reg.l1 > 0 ? 0.0 : 1e-3);
    const ReferenceOptimum ref = reference_optimum(p);
    for (Algorithm a : {Algorithm::ProxSvrg, Algorithm::Saga, Algorithm::SvrgSd, Algorithm::SagaSd}) {
      SolverConfig c;
      c.algorithm = a;
      c.epochs = 40;
      c.plan = step_plan_for_eta(p.lipschitz(), 0.5 / p.lipschitz());
      SolverResult r = run_solver(p, c);
      for (const auto& rec : r.trace.records) EXPECT_GE(rec.objective - ref.f_star, -1e-12);
    }
  }
}

TEST(Gap, FloorsAndChecksDataset) {
  Trace t = sample_trace("svrg", 1);
  t.records[2].objective = 0.5;
  const auto pts = gap(t, t.dataset, 0.5);
  ASSERT_EQ(pts.size(), t.records.size());
  EXPECT_EQ(pts[2].gap, kGapFloor);
  EXPECT_EQ(pts[3].passes, t.records[3].passes);
  EXPECT_EQ(pts[3].wall_ns, t.records[3].wall_ns);
  EXPECT_DOUBLE_EQ(pts[1].gap, t.records[1].objective - 0.5 > kGapFloor ? t.records[1].objective - 0.5 : kGapFloor);
  EXPECT_THROW(gap(t, "another-dataset", 0.0), std::invalid_argument);
}

TEST(Gap, MonotoneInObjective) {
  Trace t;
  for (double f : {3.0, 2.0, 1.5, 1.0 + 1e-12, 1.0}) t.records.push_back({0, 0, 0, f, NAN});
  const auto pts = gap(t, "", 1.0);
  for (std::size_t k = 1; k < pts.size(); ++k) EXPECT_LE(pts[k].gap, pts[k - 1].gap);
}

TEST(Gap, PassesToTarget) {
  Trace t;
  t.records = {{0, 0.0, 1, 1.0, NAN}, {1, 3.0, 2, 0.1, NAN}, {2, 6.0, 3, 1e-9, NAN}};
  EXPECT_TRUE(std::isnan(passes_to_gap(t, 1e-8)));
  attach_gaps(t, "", 0.0);
  EXPECT_EQ(passes_to_gap(t, 1e-8), 6.0);
  EXPECT_EQ(passes_to_gap(t, 0.5), 3.0);
  EXPECT_TRUE(std::isnan(passes_to_gap(t, 1e-10)));
}

TEST(TraceCsv, RoundTrip) {
  const std::vector<Trace> traces{sample_trace("svrg", 1), sample_trace("saga-sd", 2), sample_trace("a,\"b\"", 3)};
  const auto path = temp_file("roundtrip.csv");
  write_trace_csv(traces, path);
  const auto back = read_trace_csv(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_TRUE(same_csv_fields(back[k], traces[k]));
  std::filesystem::remove(path);
}

TEST(TraceCsv, HeaderOnlyForEmptyList) {
  const std::string text = trace_csv_string({});
  EXPECT_EQ(text, "solver,dataset,seed,epoch,passes,wall_ns,objective,gap\n");
  EXPECT_TRUE(parse_trace_csv(text).empty());
}

TEST(TraceCsv, ErrorsNameTheRow) {
  const std::string header = "solver,dataset,seed,epoch,passes,wall_ns,objective,gap\n";
  auto message = [](const std::string& text) {
    try {
      parse_trace_csv(text);
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(header + "svrg,d,1,0,0,0,1,\nsvrg,d,1,x,0,0,1,\n").find("row 3"), std::string::npos);
  EXPECT_NE(message(header + "svrg,d,1,0,0\n").find("row 2"), std::string::npos);
  EXPECT_NE(message("solver,seed\n").find("header"), std::string::npos);
  EXPECT_NE(message("").find("header"), std::string::npos);
  EXPECT_NE(message(header + "\"svrg,d,1,0,0,0,1,\n").find("quote"), std::string::npos);
  EXPECT_THROW(read_trace_csv(temp_file("does-not-exist.csv")), std::runtime_error);
}

TEST(TraceCsv, ShortestRoundTripRendering) {
  Trace t;
  t.solver = "s";
  t.records = {{0, 0.1, 5, 1.0 / 3.0, 5e-324}, {1, 1e300, 6, -0.0, std::numeric_limits<double>::max()}};
  const std::string text = trace_csv_string(std::span<const Trace>(&t, 1));
  EXPECT_NE(text.find(",0.1,5,0.3333333333333333,5e-324"), std::string::npos);
  const auto back = parse_trace_csv(text);
  EXPECT_TRUE(same_csv_fields(back.at(0), t));
}

TEST(TraceJson, MirrorsCsvFields) {
  const Trace t = sample_trace("svrg-sd", 9);
  const nlohmann::json j = trace_to_json(t);
  EXPECT_EQ(j.at("solver"), "svrg-sd");
  EXPECT_EQ(j.at("records").size(), t.records.size());
  EXPECT_TRUE(j.at("records").at(0).at("gap").is_null());
  EXPECT_TRUE(same_csv_fields(trace_from_json(nlohmann::json::parse(j.dump())), t));
}

TEST(TraceJson, NonFiniteValuesSurvive) {
  Trace t;
  t.solver = "svrg";
  t.records = {{0, 0.0, 1, 1.0, NAN}, {1, 3.0, 2, INFINITY, INFINITY}, {2, 6.0, 3, -INFINITY, NAN}};
  EXPECT_TRUE(same_csv_fields(trace_from_json(nlohmann::json::parse(trace_to_json(t).dump())), t));
  EXPECT_TRUE(same_csv_fields(parse_trace_csv(trace_csv_string(std::span<const Trace>(&t, 1))).at(0), t));
}
