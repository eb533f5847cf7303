#include "jfft/experiments.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

namespace {

using namespace jfft;
namespace fs = std::filesystem;

ConfigDocument doc(const std::string& text) { return parse_config_text(text, "inline.json"); }

class Experiments : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("jfft_experiments_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::vector<std::string> lines(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
  }
  fs::path dir_;
};

TEST(Config, ParseErrorsReportTheLine) {
  try {
    parse_config_text("{\n  \"n\": 8,\n  \"geometry\": oops\n}", "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config_text("[1, 2]"), ConfigError);
}

TEST(Config, StrictKeysAndTypes) {
  EXPECT_THROW(run_solve(doc(R"({"n": 8, "geometry": {"kind": "uniform"}, "etaa": 1})"), {}), ConfigError);
  EXPECT_THROW(run_solve(doc(R"({"n": "8", "geometry": {"kind": "uniform"}})"), {}), ConfigError);
  EXPECT_THROW(run_solve(doc(R"({"n": 8, "geometry": {"kind": "hexagon"}})"), {}), ConfigError);
  EXPECT_THROW(run_solve(doc(R"({"n": 8})"), {}), ConfigError);
  EXPECT_THROW(run_solve(doc(R"({"n": 8, "geometry": {"kind": "laminate", "p": 3}})"), {}), ConfigError);
  EXPECT_THROW(run_solve(doc(R"({"n": 8, "geometry": {"kind": "uniform"}, "preconditioner": "ilu"})"), {}),
               ConfigError);
  EXPECT_THROW(run_solve(doc(R"({"n": 8, "geometry": {"kind": "uniform"}, "strain": [1, 1]})"), {}), ConfigError);
  EXPECT_THROW(run_laminate_sweep(doc(R"({"contrasts": ["inf"]})"), {}), ConfigError);
  EXPECT_THROW(run_laminate_sweep(doc(R"({"n": {"min": 3, "max": 10}})"), {}), ConfigError);
}

TEST(Config, MissingGeometryFileIsAConfigError) {
  EXPECT_THROW(run_solve(doc(R"({"n": 8, "geometry": {"kind": "file", "path": "/nonexistent/rho.json"}})"), {}),
               ConfigError);
}

TEST(Config, ContrastAcceptsInfinity) {
  const auto d = doc(R"({"c": ["inf", 10]})");
  ConfigSection s(d.json, "config");
  const auto c = parse_contrast_list(s, "c", {});
  EXPECT_TRUE(std::isinf(c[0]));
  EXPECT_EQ(c[1], 10.0);
}

TEST_F(Experiments, SolveUniformWritesArtifacts) {
  const auto d = doc(R"({"n": 8, "geometry": {"kind": "uniform", "value": 1.0}, "preconditioner": "green"})");
  const auto out = run_solve(d, {dir_, 1});
  const auto& sb = out.result.homogenized_stress;
  EXPECT_NEAR(sb[0], 7.0 / 3.0, 1e-12);
  EXPECT_NEAR(sb[1], 7.0 / 3.0, 1e-12);
  EXPECT_NEAR(sb[2], 1.0, 1e-12);
  for (const char* f : {"config.json", "solution.json", "solution.raw", "residuals.csv", "result.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  EXPECT_EQ(lines(dir_ / "residuals.csv").front(), "# jfft residuals v1");
  std::ifstream is(dir_ / "result.json");
  const auto j = nlohmann::json::parse(is);
  EXPECT_NEAR(j["homogenized_stress"][0].get<double>(), 7.0 / 3.0, 1e-12);
  EXPECT_EQ(j["terminated"], "converged");
  EXPECT_EQ(read_vector_field(dir_ / "solution.json").values, out.result.linear.solution.values);
}

TEST_F(Experiments, LaminateSweepTable) {
  const std::string text =
      R"({"p": [2, 3], "n": [2, 3, 4], "contrasts": [100], "preconditioners": ["green", "jacobi"]})";
  const auto t1 = run_laminate_sweep(doc(text), {dir_, 1});
  EXPECT_EQ(t1.rows.size(), 2u * (2 + 2 + 1));
  for (const auto& r : t1.rows) {
    EXPECT_LE(r.p, r.n);
    EXPECT_EQ(r.terminated, "converged");
    EXPECT_EQ(r.experiment, "laminate");
  }
  // Green counts do not depend on the mesh for the laminate
  EXPECT_EQ(t1.find(PreconditionerKind::Green, 4, 4, 100)->iterations,
            t1.find(PreconditionerKind::Green, 4, 16, 100)->iterations);
  const auto csv = lines(dir_ / "iterations.csv");
  EXPECT_EQ(csv[0], "# jfft iteration-table v1");
  EXPECT_EQ(csv[1], "experiment,preconditioner,p,n,chi_tot,iterations,terminated,wall_time");
  EXPECT_EQ(csv.size(), 2 + t1.rows.size());

  const auto t3 = run_laminate_sweep(doc(text), {{}, 3});
  ASSERT_EQ(t3.rows.size(), t1.rows.size());
  for (std::size_t k = 0; k < t1.rows.size(); ++k) {
    EXPECT_EQ(t1.rows[k].p, t3.rows[k].p);
    EXPECT_EQ(t1.rows[k].n, t3.rows[k].n);
    EXPECT_EQ(t1.rows[k].iterations, t3.rows[k].iterations);
  }
}

TEST_F(Experiments, CosineSweepHandlesVoids) {
  const auto t = run_cosine_sweep(
      doc(R"({"p": [2, 3], "n": [3, 4], "contrasts": ["inf"], "preconditioners": ["green-jacobi"]})"), {});
  EXPECT_EQ(t.rows.size(), 4u);
  for (const auto& r : t.rows) {
    EXPECT_TRUE(std::isinf(r.chi_tot));
    EXPECT_EQ(r.terminated, "converged");
  }
}

TEST_F(Experiments, MotivateStopsAtTargetContrast) {
  const auto out = run_motivate(doc(R"({"n": 16, "rho_soft": 1e-2, "stop_contrast": 10, "solve_stride": 3})"),
                                {dir_, 1});
  ASSERT_FALSE(out.steps.empty());
  EXPECT_EQ(out.steps.front().step, 0u);
  EXPECT_NEAR(out.steps.front().contrast, 100.0, 1e-9);
  EXPECT_LE(out.steps.back().contrast, 10.0);
  for (std::size_t k = 0; k + 1 < out.steps.size(); ++k) {
    EXPECT_EQ(out.steps[k].step % 3, 0u);
    EXPECT_GT(out.steps[k].contrast, 10.0);
  }
  ASSERT_TRUE(out.step_II.has_value());
  EXPECT_EQ(*out.step_II, out.steps.back().step);
  EXPECT_TRUE(out.step_I.has_value());
  EXPECT_TRUE(fs::exists(dir_ / "motivate.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "summary.json"));
}

TEST_F(Experiments, TopOptAndSmoothVsSharpChain) {
  std::ofstream(dir_ / "topopt.json") << R"({"n": 8, "max_iterations": 3, "seed": 2, "monitor": ["green"]})";
  const auto topo_dir = dir_ / "topo";
  const auto res = run_topopt(load_config(dir_ / "topopt.json"), {topo_dir, 1});
  EXPECT_GE(res.history.records.size(), 2u);
  for (const char* f : {"config.json", "history.csv", "inner_iterations.csv", "rho_final.json", "summary.json"}) {
    EXPECT_TRUE(fs::exists(topo_dir / f)) << f;
  }
  const auto inner = lines(topo_dir / "inner_iterations.csv");
  EXPECT_EQ(inner.size(), 2 + res.history.records.size() * 6);

  std::ofstream(dir_ / "svs.json") << R"({"density": "topo/rho_final.json", "contrasts": [100, 1e5]})";
  const auto svs = run_smooth_vs_sharp(load_config(dir_ / "svs.json"), {dir_ / "svs", 1});
  EXPECT_EQ(svs.runs.size(), 2u * 2u * 2u);
  for (const auto& r : svs.runs) {
    EXPECT_FALSE(r.aborted);
    EXPECT_EQ(r.report.terminated, Termination::Converged);
  }
  EXPECT_TRUE(fs::exists(dir_ / "svs" / "residual_histories.csv"));
  EXPECT_EQ(lines(dir_ / "svs" / "summary.csv").size(), 2 + svs.runs.size());
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(detail::parallel_for(10, 3,
                                    [](std::size_t k) {
                                      if (k == 4) throw std::runtime_error("boom");
                                    }),
               std::runtime_error);
  std::vector<int> hits(50, 0);
  detail::parallel_for(hits.size(), 4, [&](std::size_t k) { hits[k] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
