#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sdse/bench.hpp"
#include "sdse/cli.hpp"
#include "sdse/explorer.hpp"
#include "test_support.hpp"

using namespace sdse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sdse");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = (dir_ / "system.json").string();
    std::ofstream(config_) << render_config(sdse::testing::six_by_three_spec());
  }

  fs::path dir_;
  std::string config_;
};

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_F(CliTest, ExploreZeroGenerationsPrintsBestOfInitial) {
  const auto r = run_cli({"explore", "--config", config_, "--generations", "0", "--population",
                          "4", "--seed", "1", "--out", (dir_ / "run").string(), "--workers", "2"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;

  const auto spec = sdse::testing::six_by_three_spec();
  GaParams params;
  params.population = 4;
  params.seed = 1;
  auto pop = init_population(spec, params);
  for (auto& ind : pop) ind.fitness = evaluate_mapping(spec, ind.mapping, full_subset(spec), Aggregate::average);
  const auto best = *std::min_element(pop.begin(), pop.end(), fitter);
  EXPECT_EQ(r.out.rfind("genes=" + format_genes(best.mapping) + " fitness=", 0), 0u) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "history.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "selector.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "best.json"));
}

TEST_F(CliTest, OracleMatchesLibrary) {
  const auto r = run_cli({"oracle", "--config", config_});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto expected = brute_force_optimum(sdse::testing::six_by_three_spec(), Aggregate::average);
  EXPECT_NE(r.out.find("genes=" + format_genes(expected.mapping) + " "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("evaluated=729"), std::string::npos) << r.out;
}

TEST_F(CliTest, OracleCapIsRuntimeError) {
  const auto r = run_cli({"oracle", "--config", config_, "--cap", "10"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("explore"), std::string::npos);
}

TEST_F(CliTest, BenchWritesOneRowPerRecord) {
  const auto csv = dir_ / "b.csv";
  const auto r = run_cli({"bench", "--jobs", "1000", "--workers", "1,2,4", "--queue", "lockless",
                          "--repeat", "2", "--cost", "100", "--out", csv.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto text = slurp(csv);
  EXPECT_EQ(count_lines(text), 7u);
  EXPECT_EQ(parse_csv(text).size(), 6u);
  EXPECT_NE(r.out.find("checksum="), std::string::npos);
}

TEST_F(CliTest, EvaluatePrintsEveryScenario) {
  const auto r = run_cli({"evaluate", "--config", config_, "--genes", "0,1,2,0,1,2"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("scenario,name,makespan,energy\n", 0), 0u);
  EXPECT_EQ(count_lines(r.out), 5u);
  EXPECT_NE(r.out.find("\naggregate,average,"), std::string::npos);
}

TEST_F(CliTest, SelectSubsetFromTrainingFile) {
  const auto training = dir_ / "training.json";
  std::ofstream(training) << R"({"mappings": [[0,0,0,0,0,0],[0,1,2,0,1,2],[2,2,1,1,0,0],[1,1,1,2,2,2]]})";
  const auto r = run_cli({"select-subset", "--config", config_, "--training", training.string(),
                          "--k", "3"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("tau=1 "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("training=4"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  const auto r = run_cli({"explore", "--config", config_, "--frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"transmogrify"}).code, cli::kExitUsage);
}

TEST_F(CliTest, BadConfigIsConfigError) {
  const auto bad = dir_ / "bad.json";
  std::ofstream(bad) << R"({"applications": [}])";
  auto r = run_cli({"oracle", "--config", bad.string()});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("syntax error"), std::string::npos) << r.err;

  r = run_cli({"oracle", "--config", (dir_ / "missing.json").string()});
  EXPECT_EQ(r.code, cli::kExitConfig);
}

TEST_F(CliTest, EvalOneMatchesEvaluator) {
  const auto spec = sdse::testing::six_by_three_spec();
  const auto r = run_cli({"--eval-one", "--config", config_, "--genes", "0,1,2,2,1,0",
                          "--scenario", "2"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, format_metrics_line(scenario_metrics(spec, parse_genes("0,1,2,2,1,0"),
                                                        spec.scenarios()[2])) +
                       "\n");
  EXPECT_EQ(run_cli({"--eval-one", "--config", config_}).code, cli::kExitUsage);
}

TEST_F(CliTest, SyncExploreIsByteIdenticalWithoutTiming) {
  auto once = [&](const std::string& name, const std::string& workers) {
    const auto out = dir_ / name;
    const auto r = run_cli({"explore", "--config", config_, "--generations", "15", "--seed", "3",
                            "--selector-mode", "sync", "--no-timing", "--workers", workers,
                            "--k", "2", "--out", out.string()});
    EXPECT_EQ(r.code, cli::kExitOk) << r.err;
    return std::vector<std::string>{r.out, slurp(out / "history.csv"), slurp(out / "selector.csv"),
                                    slurp(out / "best.json")};
  };
  const auto a = once("a", "1");
  const auto b = once("b", "1");
  const auto c = once("c", "4");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(ResolveWorkers, FlagThenEnvironmentThenHardware) {
  ::setenv("SDSE_WORKERS", "3", 1);
  EXPECT_EQ(cli::resolve_workers(5), 5u);
  EXPECT_EQ(cli::resolve_workers(std::nullopt), 3u);
  ::setenv("SDSE_WORKERS", "zero", 1);
  EXPECT_EQ(cli::resolve_workers(std::nullopt), std::max(1u, std::thread::hardware_concurrency()));
  ::unsetenv("SDSE_WORKERS");
  EXPECT_GE(cli::resolve_workers(std::nullopt), 1u);
}

#ifdef SDSE_BINARY
TEST_F(CliTest, ProcessEvalModeMatchesInProcess) {
  // Child-process evaluation re-executes the binary, so run it for real.
  auto explore = [&](const std::string& mode) {
    const auto out = dir_ / mode;
    const std::string cmd = std::string(SDSE_BINARY) + " explore --config " + config_ +
                            " --generations 3 --population 6 --seed 2 --no-timing --workers 2" +
                            " --eval-mode " + mode + " --out " + out.string() + " > " +
                            (dir_ / (mode + ".txt")).string();
    EXPECT_EQ(std::system(cmd.c_str()), 0) << cmd;
    return slurp(dir_ / (mode + ".txt")) + slurp(out / "history.csv");
  };
  EXPECT_EQ(explore("in-process"), explore("process"));
}
#endif
