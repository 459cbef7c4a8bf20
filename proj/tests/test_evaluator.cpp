#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "sdse/evaluator.hpp"
#include "test_support.hpp"

using namespace sdse;
using sdse::testing::json;
using sdse::testing::spec_from;

namespace {

// A(60), B(40) with channel A->B (data 30) over bandwidth 3.
SystemSpec two_process_spec(double speed_a, double speed_b, double energy_per_unit) {
  return spec_from({
      {"applications",
       {{{"name", "app"}, {"processes", {"A", "B"}}, {"channels", json::array({json::array({"A", "B"})})}}}},
      {"architecture",
       {{"processors",
         {{{"name", "r0"}, {"speed", speed_a}, {"power", 1}},
          {{"name", "r1"}, {"speed", speed_b}, {"power", 1}}}},
        {"interconnect", {{"bandwidth", 3}, {"energy_per_unit", energy_per_unit}}}}},
      {"scenarios",
       {{{"name", "s"}, {"comp", {{"A", 60}, {"B", 40}}}, {"data", {{"A->B", 30}}}}}},
  });
}

SystemSpec single_process_spec(double power) {
  return spec_from({
      {"applications", {{{"name", "app"}, {"processes", {"P"}}}}},
      {"architecture", {{"processors", {{{"name", "r"}, {"speed", 1}, {"power", power}}}}}},
      {"scenarios", {{{"name", "s"}, {"comp", {{"P", 100}}}}}},
  });
}

}  // namespace

TEST(ScenarioMakespan, SingleProcess) {
  const auto spec = single_process_spec(2);
  EXPECT_EQ(scenario_makespan(spec, parse_genes("0"), spec.scenarios()[0]), 100.0);
}

TEST(ScenarioMakespan, SharedProcessorHasNoCommunication) {
  const auto spec = two_process_spec(2, 1, 0);
  EXPECT_EQ(scenario_makespan(spec, parse_genes("0,0"), spec.scenarios()[0]), 50.0);
}

TEST(ScenarioMakespan, SplitProcessorsPayForTheInterconnect) {
  const auto spec = two_process_spec(1, 1, 0.5);
  EXPECT_EQ(scenario_makespan(spec, parse_genes("0,1"), spec.scenarios()[0]), 70.0);
}

TEST(ScenarioEnergy, Examples) {
  const auto one = single_process_spec(2);
  EXPECT_EQ(scenario_energy(one, parse_genes("0"), one.scenarios()[0]), 200.0);

  const auto split = two_process_spec(1, 1, 0.5);
  EXPECT_EQ(scenario_energy(split, parse_genes("0,1"), split.scenarios()[0]), 115.0);

  auto doc = json::parse(render_config(split));
  doc["scenarios"][0]["comp"] = {{"A", 0}, {"B", 0}};
  doc["scenarios"][0]["data"] = {{"A->B", 0}};
  const auto zero = spec_from(doc);
  EXPECT_EQ(scenario_energy(zero, parse_genes("0,1"), zero.scenarios()[0]), 0.0);
  EXPECT_EQ(scenario_makespan(zero, parse_genes("0,1"), zero.scenarios()[0]), 0.0);
}

TEST(EvaluateMapping, AggregatesOverTheSubset) {
  // Scenario 0 gives 50 on a shared speed-2 processor, scenario 1 gives 70.
  auto doc = json::parse(render_config(two_process_spec(2, 2, 0)));
  doc["scenarios"].push_back({{"name", "t"}, {"comp", {{"A", 100}, {"B", 40}}}, {"data", {{"A->B", 0}}}});
  const auto spec = spec_from(doc);
  const auto m = parse_genes("0,0");
  EXPECT_EQ(scenario_makespan(spec, m, spec.scenarios()[0]), 50.0);
  EXPECT_EQ(scenario_makespan(spec, m, spec.scenarios()[1]), 70.0);

  const std::vector<std::size_t> both{0, 1};
  EXPECT_EQ(evaluate_mapping(spec, m, both, Aggregate::average).value, 60.0);
  EXPECT_EQ(evaluate_mapping(spec, m, both, Aggregate::worst).value, 70.0);
  EXPECT_EQ(evaluate_mapping(spec, m, std::vector<std::size_t>{1, 0}, Aggregate::average).value,
            60.0);
}

TEST(EvaluateMapping, RejectsBadSubsets) {
  const auto spec = two_process_spec(1, 1, 0);
  const auto m = parse_genes("0,1");
  try {
    evaluate_mapping(spec, m, std::vector<std::size_t>{}, Aggregate::average);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "empty scenario subset");
  }
  EXPECT_THROW(evaluate_mapping(spec, m, std::vector<std::size_t>{1}, Aggregate::average),
               std::invalid_argument);
  EXPECT_THROW(evaluate_mapping(spec, m, std::vector<std::size_t>{0, 0}, Aggregate::average),
               std::invalid_argument);
}

TEST(EvaluatorProperties, AgreesWithReferenceOnRandomInstances) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto spec = sdse::testing::random_dyadic_spec(rng, 1 + i % 8, 1 + i % 5, 2);
    const auto m = random_mapping(spec, rng);
    for (const auto& s : spec.scenarios()) {
      ASSERT_EQ(scenario_makespan(spec, m, s), sdse::testing::reference_makespan(spec, m, s));
    }
  }
}

TEST(SyntheticJob, ZeroCostReturnsSeed) { EXPECT_EQ(synthetic_job(0), kSyntheticSeed); }

TEST(SyntheticJob, Deterministic) {
  EXPECT_EQ(synthetic_job(12345), synthetic_job(12345));
  EXPECT_NE(synthetic_job(1), synthetic_job(2));
}

TEST(SyntheticJob, CalibratedCostTakesAboutOneMillisecond) {
  const auto cost = calibrate_synthetic_cost(std::chrono::milliseconds(1));
  // Median of a few runs to damp scheduler noise.
  std::vector<double> ms;
  for (int i = 0; i < 9; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    volatile auto sink = synthetic_job(cost);
    (void)sink;
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count());
  }
  std::nth_element(ms.begin(), ms.begin() + 4, ms.end());
  EXPECT_GE(ms[4], 0.5);
  EXPECT_LE(ms[4], 1.5);
}

TEST(AllocChurnJob, EmptyAndDeterministic) {
  const std::vector<std::size_t> sizes{16, 64, 4096};
  EXPECT_EQ(alloc_churn_job(0, sizes), kSyntheticSeed);
  EXPECT_EQ(alloc_churn_job(50, sizes), alloc_churn_job(50, sizes));
  EXPECT_NE(alloc_churn_job(50, sizes), alloc_churn_job(51, sizes));
}

#ifdef SDSE_BINARY
TEST(ChildProcess, MatchesInProcessEvaluation) {
  const auto spec = sdse::testing::six_by_three_spec();
  const std::string path = ::testing::TempDir() + "/child_eval.json";
  {
    std::ofstream(path) << render_config(spec);
  }
  const auto m = parse_genes("0,1,2,2,1,0");
  for (std::size_t s = 0; s < spec.scenario_count(); ++s) {
    const auto child = evaluate_scenario_in_child(SDSE_BINARY, path, m, s);
    EXPECT_EQ(child, scenario_metrics(spec, m, spec.scenarios()[s]));
  }
  const auto all = full_subset(spec);
  EXPECT_EQ(evaluate_mapping_in_child(SDSE_BINARY, path, spec.scenario_count(), m, all,
                                      Aggregate::average),
            evaluate_mapping(spec, m, all, Aggregate::average));
}

TEST(ChildProcess, FailingChildRaises) {
  EXPECT_THROW(evaluate_scenario_in_child(SDSE_BINARY, "/nonexistent/config.json",
                                          parse_genes("0"), 0),
               Error);
}
#endif
