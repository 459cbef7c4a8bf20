#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdse/model.hpp"
#include "sdse/workpool.hpp"

namespace sdse {

enum class JobKind { synthetic, alloc_churn, simulate };

std::string_view to_string(JobKind kind) noexcept;
JobKind parse_job_kind(std::string_view text);

/// One measurement: a fresh pool of `workers` threads running `jobs` jobs.
struct BenchRecord {
  QueueKind queue_kind = QueueKind::lockless;
  JobKind job_kind = JobKind::synthetic;
  std::uint64_t jobs = 0;
  std::uint64_t job_cost = 0;
  std::uint64_t workers = 1;
  std::uint64_t repeat = 0;
  std::uint64_t wall_ns = 0;
  std::uint64_t busy_ns_total = 0;
  double jobs_per_sec = 0.0;
  std::int64_t voluntary_ctx_switches = -1;
  std::int64_t involuntary_ctx_switches = -1;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct BenchConfig {
  JobKind job_kind = JobKind::synthetic;
  std::uint64_t jobs = 10'000;
  /// synthetic: mixing iterations; alloc_churn: rounds; simulate: unused.
  std::uint64_t job_cost = 0;
  std::vector<std::size_t> workers{1};
  std::vector<QueueKind> queues{QueueKind::lockless};
  std::size_t repeats = 6;
  /// Discarded batch run on each fresh pool before measuring.
  std::uint64_t warmup_jobs = 100;
  std::vector<std::size_t> block_sizes{16, 64, 256, 1024, 4096};
  /// Needed for JobKind::simulate; a built-in system is used when null.
  std::shared_ptr<const SystemSpec> spec;
  std::uint64_t seed = 1;
  /// Zero every timing-dependent column so output is reproducible.
  bool no_timing = false;
};

struct ExperimentResult {
  std::vector<BenchRecord> records;
  /// Combined output of every job of one batch; identical for every record.
  std::uint64_t checksum = 0;
};

/// One record per (queue kind, worker count, repeat), each on a fresh pool.
/// Throws sdse::Error if any batch's job checksum differs from the others or
/// if a job fails.
ExperimentResult run_scaling_experiment(const BenchConfig& config);

struct SummaryRow {
  QueueKind queue_kind = QueueKind::lockless;
  JobKind job_kind = JobKind::synthetic;
  std::uint64_t jobs = 0;
  std::uint64_t job_cost = 0;
  std::uint64_t workers = 1;
  std::uint64_t repeats = 0;
  double mean_wall_ns = 0.0;
  double sem_wall_ns = 0.0;  // standard error of the mean
  double speedup = 0.0;      // mean wall at 1 worker / mean wall at `workers`
  double efficiency = 0.0;   // speedup / workers
};

/// Groups by (queue, job kind, jobs, cost) and worker count. Throws
/// std::invalid_argument when a group has no 1-worker baseline.
std::vector<SummaryRow> summarize(std::span<const BenchRecord> records);

void write_csv(std::span<const BenchRecord> records, const std::string& path);
void write_summary_csv(std::span<const SummaryRow> rows, const std::string& path);
/// `workers,speedup` pairs; one block per group, headed by a `#` comment.
void write_plot_data(std::span<const SummaryRow> rows, const std::string& path);

std::string format_csv(std::span<const BenchRecord> records);
std::vector<BenchRecord> parse_csv(std::string_view text);

/// Cores this process may run on, counting SMT siblings once.
std::size_t physical_core_count();

struct CtxSwitches {
  std::int64_t voluntary = -1;
  std::int64_t involuntary = -1;
};

/// Process-wide context switch counters, -1 where unavailable.
CtxSwitches read_ctx_switches();

/// A small built-in system used by the `simulate` job kind.
std::shared_ptr<const SystemSpec> demo_system();

}  // namespace sdse
