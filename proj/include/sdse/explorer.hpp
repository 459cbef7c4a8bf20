#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdse/evaluator.hpp"
#include "sdse/model.hpp"
#include "sdse/selector.hpp"
#include "sdse/workpool.hpp"

namespace sdse {

struct GaParams {
  std::size_t population = 32;
  std::size_t generations = 50;
  std::size_t tournament = 2;
  double crossover_rate = 0.9;
  double mutation_rate = 0.05;  // per gene
  std::size_t elitism = 1;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

struct Individual {
  Mapping mapping;
  std::optional<Fitness> fitness;
};

using Population = std::vector<Individual>;

/// Orders by fitness value, then lexicographically by genes. Both must be
/// evaluated.
bool fitter(const Individual& a, const Individual& b);

/// How a job reaches the evaluator: a direct call, or a child process running
/// this program in single-job mode.
struct EvalBackend {
  bool child_process = false;
  std::string executable;
  std::string config_path;
};

/// Everything a fitness job needs besides its mapping. Outlives the batch.
struct EvalContext {
  const SystemSpec* spec = nullptr;
  std::vector<std::size_t> subset;
  Aggregate aggregate = Aggregate::average;
  std::uint64_t subset_version = 0;
  EvalBackend backend;
};

/// Version stamp used for the final full-scenario validation pass.
inline constexpr std::uint64_t kFullSetVersion = std::numeric_limits<std::uint64_t>::max();

struct EvalJob {
  const EvalContext* context = nullptr;
  Mapping mapping;
};

using EvalPool = BatchRunner<EvalJob, Fitness>;

Fitness run_eval_job(const EvalJob& job);

std::unique_ptr<EvalPool> make_eval_pool(QueueKind kind, std::size_t workers,
                                         PoolOptions options = {});

Population init_population(const SystemSpec& spec, const GaParams& params, Rng& rng);
Population init_population(const SystemSpec& spec, const GaParams& params);

/// Evaluates, as one batch, every individual whose fitness is missing or was
/// computed for another subset version. Failed jobs get Fitness::failed.
/// Returns the number of jobs submitted.
std::size_t evaluate_population(Population& population, const EvalContext& context,
                                EvalPool& pool);

/// Elitism, tournament selection, one-point crossover and per-gene uniform
/// mutation. Children identical to their first parent keep its fitness.
Population next_generation(const Population& population, const GaParams& params,
                           std::size_t processor_count, Rng& rng);

struct GenerationRecord {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::uint64_t subset_version = 0;
  std::uint64_t wall_ns = 0;
};

struct ExplorerOptions {
  Aggregate aggregate = Aggregate::average;
  EvalBackend backend;
  /// Distinct top individuals handed to the subset provider per generation.
  std::size_t offer_per_generation = 4;
  bool no_timing = false;
};

struct ExplorerResult {
  /// Best mapping seen, with fitness over the full scenario set.
  Individual best;
  std::vector<GenerationRecord> history;
  std::size_t evaluations = 0;
};

ExplorerResult run_explorer(const SystemSpec& spec, const GaParams& params,
                            SubsetProvider& subsets, EvalPool& pool,
                            const ExplorerOptions& options = {});

void write_history_csv(std::span<const GenerationRecord> history, const std::string& path);

struct OracleResult {
  Mapping mapping;
  Fitness fitness;
  std::uint64_t evaluated = 0;
};

inline constexpr std::uint64_t kDefaultOracleCap = 1'000'000;

/// Exhaustive optimum over the full scenario set; ties go to the
/// lexicographically smallest genes. Throws sdse::Error when
/// processors^processes exceeds `cap`.
OracleResult brute_force_optimum(const SystemSpec& spec, Aggregate aggregate,
                                 std::uint64_t cap = kDefaultOracleCap);

}  // namespace sdse
