#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "sdse/bench.hpp"
#include "sdse/evaluator.hpp"

using namespace sdse;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BenchRecord record(std::uint64_t workers, std::uint64_t wall_ns, std::uint64_t repeat = 0) {
  BenchRecord r;
  r.jobs = 100;
  r.workers = workers;
  r.repeat = repeat;
  r.wall_ns = wall_ns;
  r.jobs_per_sec = 100 * 1e9 / static_cast<double>(wall_ns);
  return r;
}

}  // namespace

TEST(ScalingExperiment, SingleRecordThroughputIdentity) {
  BenchConfig cfg;
  cfg.jobs = 100;
  cfg.job_cost = 1000;
  cfg.repeats = 1;
  const auto result = run_scaling_experiment(cfg);
  ASSERT_EQ(result.records.size(), 1u);
  const auto& r = result.records[0];
  EXPECT_EQ(r.jobs, 100u);
  EXPECT_GT(r.wall_ns, 0u);
  EXPECT_DOUBLE_EQ(r.jobs_per_sec * static_cast<double>(r.wall_ns) / 1e9, 100.0);
}

TEST(ScalingExperiment, ChecksumIndependentOfWorkersAndQueue) {
  BenchConfig cfg;
  cfg.jobs = 500;
  cfg.job_cost = 300;
  cfg.repeats = 1;
  cfg.workers = {1};
  const auto one = run_scaling_experiment(cfg);
  cfg.workers = {4};
  cfg.queues = {QueueKind::locked};
  const auto four = run_scaling_experiment(cfg);
  EXPECT_EQ(one.checksum, four.checksum);
  cfg.workers = {1, 2, 4};
  cfg.queues = {QueueKind::lockless, QueueKind::locked};
  const auto all = run_scaling_experiment(cfg);
  EXPECT_EQ(all.records.size(), 6u);
  EXPECT_EQ(all.checksum, one.checksum);
}

TEST(ScalingExperiment, AllJobKindsAreDeterministic) {
  for (auto kind : {JobKind::synthetic, JobKind::alloc_churn, JobKind::simulate}) {
    BenchConfig cfg;
    cfg.job_kind = kind;
    cfg.jobs = 200;
    cfg.job_cost = 20;
    cfg.repeats = 1;
    cfg.workers = {1, 3};
    const auto a = run_scaling_experiment(cfg);
    const auto b = run_scaling_experiment(cfg);
    EXPECT_EQ(a.checksum, b.checksum) << to_string(kind);
  }
}

TEST(ScalingExperiment, BusyTimeTracksWallAtOneWorker) {
  BenchConfig cfg;
  cfg.jobs = 200;
  cfg.job_cost = calibrate_synthetic_cost(std::chrono::milliseconds(1));
  cfg.repeats = 1;
  const auto r = run_scaling_experiment(cfg).records.at(0);
  const double ratio = static_cast<double>(r.busy_ns_total) / static_cast<double>(r.wall_ns);
  RecordProperty("busy_over_wall", std::to_string(ratio));
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.2);
}

TEST(ScalingExperiment, NoTimingZeroesMeasuredColumns) {
  BenchConfig cfg;
  cfg.jobs = 50;
  cfg.repeats = 2;
  cfg.workers = {1, 2};
  cfg.no_timing = true;
  const auto a = run_scaling_experiment(cfg);
  const auto b = run_scaling_experiment(cfg);
  EXPECT_EQ(a.records, b.records);
  for (const auto& r : a.records) {
    EXPECT_EQ(r.wall_ns, 0u);
    EXPECT_EQ(r.busy_ns_total, 0u);
  }
}

TEST(ScalingExperiment, RejectsBadConfig) {
  BenchConfig cfg;
  cfg.workers = {};
  EXPECT_THROW(run_scaling_experiment(cfg), std::invalid_argument);
  cfg.workers = {0};
  EXPECT_THROW(run_scaling_experiment(cfg), std::invalid_argument);
  cfg.workers = {1};
  cfg.repeats = 0;
  EXPECT_THROW(run_scaling_experiment(cfg), std::invalid_argument);
}

TEST(Summarize, SingleWorkerSpeedupIsOne) {
  const std::vector<BenchRecord> recs{record(1, 1000, 0), record(1, 3000, 1)};
  const auto rows = summarize(recs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].speedup, 1.0);
  EXPECT_EQ(rows[0].efficiency, 1.0);
  EXPECT_EQ(rows[0].mean_wall_ns, 2000.0);
  // Sample standard deviation sqrt(2e6) divided by sqrt(2).
  EXPECT_DOUBLE_EQ(rows[0].sem_wall_ns, 1000.0);
}

TEST(Summarize, IdenticalRepeatsHaveZeroError) {
  const std::vector<BenchRecord> recs{record(1, 800, 0), record(1, 800, 1), record(4, 200, 0),
                                      record(4, 200, 1)};
  const auto rows = summarize(recs);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.sem_wall_ns, 0.0);
  EXPECT_EQ(rows[1].workers, 4u);
  EXPECT_EQ(rows[1].speedup, 4.0);
  EXPECT_EQ(rows[1].efficiency, 1.0);
}

TEST(Summarize, MissingBaselineRejected) {
  const std::vector<BenchRecord> recs{record(2, 500)};
  EXPECT_THROW(summarize(recs), std::invalid_argument);
}

TEST(BenchCsv, EmptyListWritesHeaderOnly) {
  const std::string path = ::testing::TempDir() + "/empty.csv";
  write_csv({}, path);
  EXPECT_EQ(slurp(path),
            "queue_kind,job_kind,jobs,job_cost,workers,repeat,wall_ns,busy_ns_total,jobs_per_sec,"
            "voluntary_ctx_switches,involuntary_ctx_switches\n");
}

TEST(BenchCsv, RoundTripAndStableBytes) {
  std::vector<BenchRecord> recs{record(1, 123456789), record(3, 987, 2)};
  recs[1].queue_kind = QueueKind::locked;
  recs[1].job_kind = JobKind::alloc_churn;
  recs[1].voluntary_ctx_switches = 17;
  recs[1].busy_ns_total = 555;
  recs[0].jobs_per_sec = 1.0 / 3.0;
  EXPECT_EQ(parse_csv(format_csv(recs)), recs);

  const std::string a = ::testing::TempDir() + "/a.csv";
  const std::string b = ::testing::TempDir() + "/b.csv";
  write_csv(recs, a);
  write_csv(recs, b);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a), format_csv(recs));
  EXPECT_EQ(slurp(a).find('\r'), std::string::npos);
}

TEST(BenchCsv, UnwritablePathNamed) {
  try {
    write_csv({}, "/nonexistent-dir/x.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
}

TEST(PlotData, BlocksPerGroup) {
  const std::vector<BenchRecord> recs{record(1, 800), record(2, 400)};
  const std::string path = ::testing::TempDir() + "/plot.dat";
  write_plot_data(summarize(recs), path);
  const auto text = slurp(path);
  EXPECT_NE(text.find("workers,speedup"), std::string::npos);
  EXPECT_NE(text.find("# queue=lockless"), std::string::npos);
  EXPECT_NE(text.find("\n2,2\n"), std::string::npos) << text;
}

TEST(Platform, CoreCountAndCounters) {
  EXPECT_GE(physical_core_count(), 1u);
  const auto c = read_ctx_switches();
  EXPECT_GE(c.voluntary, 0);
  EXPECT_GE(c.involuntary, 0);
}

TEST(AllocChurn, RatioReported) {
  // Reported only: how allocation-heavy jobs scale depends on the allocator.
  BenchConfig cfg;
  cfg.job_kind = JobKind::alloc_churn;
  cfg.jobs = 2000;
  cfg.job_cost = 50;
  cfg.repeats = 1;
  cfg.workers = {1, 2};
  const auto rows = summarize(run_scaling_experiment(cfg).records);
  ASSERT_EQ(rows.size(), 2u);
  std::printf("alloc_churn speedup at 2 workers: %.3f\n", rows[1].speedup);
  EXPECT_GT(rows[1].speedup, 0.0);
}
