#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sdse/model.hpp"

namespace sdse {

struct ScenarioMetrics {
  double makespan = 0.0;
  double energy = 0.0;

  friend bool operator==(const ScenarioMetrics&, const ScenarioMetrics&) = default;
};

enum class Aggregate { average, worst };

/// Quality of a mapping over a scenario subset; lower `value` is better.
/// `subset_version` stamps which subset the value was computed against.
struct Fitness {
  double value = 0.0;
  double energy = 0.0;
  std::uint64_t subset_version = 0;
  bool error = false;

  /// Stand-in for a failed evaluation: worse than any real result.
  static Fitness failed(std::uint64_t version) {
    return {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(), version, true};
  }

  friend bool operator==(const Fitness&, const Fitness&) = default;
};

/// Busy time of one processor: (sum of compute demand mapped to it) / speed.
std::vector<double> processor_busy_times(const SystemSpec& spec, const Mapping& mapping,
                                         const Scenario& scenario);

/// Total data carried by the shared interconnect (channels whose endpoints
/// sit on distinct processors).
double external_data(const SystemSpec& spec, const Mapping& mapping, const Scenario& scenario);

/// max_r busy(r) + external_data / bandwidth
double scenario_makespan(const SystemSpec& spec, const Mapping& mapping, const Scenario& scenario);

/// sum_r power(r) * busy(r) + energy_per_unit * external_data
double scenario_energy(const SystemSpec& spec, const Mapping& mapping, const Scenario& scenario);

ScenarioMetrics scenario_metrics(const SystemSpec& spec, const Mapping& mapping,
                                 const Scenario& scenario);

/// Combines per-scenario metrics given in ascending scenario order. Both
/// evaluate_mapping and the subset selector go through here so the two agree
/// bit for bit.
Fitness aggregate_metrics(std::span<const ScenarioMetrics> metrics, Aggregate aggregate);

/// Sorted, de-duplicated copy of `subset`. Throws std::invalid_argument on an
/// empty subset, an out-of-range index, or a repeated index.
std::vector<std::size_t> normalize_subset(std::span<const std::size_t> subset,
                                          std::size_t scenario_count);

/// Fitness over `subset`; scenarios are always visited in ascending index
/// order regardless of the order given.
Fitness evaluate_mapping(const SystemSpec& spec, const Mapping& mapping,
                         std::span<const std::size_t> subset, Aggregate aggregate);

std::vector<std::size_t> full_subset(const SystemSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic job bodies for the benchmark harness.

inline constexpr std::uint64_t kSyntheticSeed = 0x243F6A8885A308D3ull;

/// Runs exactly `cost` rounds of an integer mixing function starting from
/// kSyntheticSeed and returns the final state.
std::uint64_t synthetic_job(std::uint64_t cost);

/// Picks a synthetic_job cost whose wall time on this host is close to
/// `target`.
std::uint64_t calibrate_synthetic_cost(std::chrono::nanoseconds target);

/// Each round allocates one block per size, touches one byte in each, and
/// frees them all. The checksum depends only on (rounds, block_sizes).
std::uint64_t alloc_churn_job(std::uint64_t rounds, std::span<const std::size_t> block_sizes);

/// Mixes `value` into a running checksum.
std::uint64_t checksum_combine(std::uint64_t acc, std::uint64_t value) noexcept;

// ---------------------------------------------------------------------------
// Child-process execution.

/// Evaluates one scenario by running `exe --eval-one --config <config_path>
/// --genes <g> --scenario <i>` and parsing its `makespan,energy` line.
/// Throws sdse::Error when the child fails or prints something unexpected.
ScenarioMetrics evaluate_scenario_in_child(const std::string& exe, const std::string& config_path,
                                           const Mapping& mapping, std::size_t scenario);

Fitness evaluate_mapping_in_child(const std::string& exe, const std::string& config_path,
                                  std::size_t scenario_count, const Mapping& mapping,
                                  std::span<const std::size_t> subset, Aggregate aggregate);

/// The `makespan,energy` line printed by single-job child mode.
std::string format_metrics_line(const ScenarioMetrics& metrics);

/// Path of the running executable.
std::string self_executable_path();

}  // namespace sdse
