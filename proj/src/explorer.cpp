#include "sdse/explorer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace sdse {

void GaParams::validate() const {
  if (population < 1) throw std::invalid_argument("population size must be >= 1");
  if (tournament < 1) throw std::invalid_argument("tournament size must be >= 1");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw std::invalid_argument("crossover rate must lie in [0, 1]");
  }
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    throw std::invalid_argument("mutation rate must lie in [0, 1]");
  }
  if (elitism > population) throw std::invalid_argument("elitism must not exceed population size");
}

bool fitter(const Individual& a, const Individual& b) {
  if (a.fitness->value != b.fitness->value) return a.fitness->value < b.fitness->value;
  return a.mapping < b.mapping;
}

Fitness run_eval_job(const EvalJob& job) {
  const auto& ctx = *job.context;
  Fitness f = ctx.backend.child_process
                  ? evaluate_mapping_in_child(ctx.backend.executable, ctx.backend.config_path,
                                              ctx.spec->scenario_count(), job.mapping, ctx.subset,
                                              ctx.aggregate)
                  : evaluate_mapping(*ctx.spec, job.mapping, ctx.subset, ctx.aggregate);
  f.subset_version = ctx.subset_version;
  return f;
}

std::unique_ptr<EvalPool> make_eval_pool(QueueKind kind, std::size_t workers,
                                         PoolOptions options) {
  return make_batch_runner<EvalJob, Fitness>(kind, workers, run_eval_job, std::move(options));
}

Population init_population(const SystemSpec& spec, const GaParams& params, Rng& rng) {
  params.validate();
  Population pop(params.population);
  for (auto& ind : pop) ind.mapping = random_mapping(spec, rng);
  return pop;
}

Population init_population(const SystemSpec& spec, const GaParams& params) {
  Rng rng(params.seed);
  return init_population(spec, params, rng);
}

std::size_t evaluate_population(Population& population, const EvalContext& context,
                                EvalPool& pool) {
  std::vector<std::size_t> pending;
  std::vector<EvalJob> jobs;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const auto& f = population[i].fitness;
    if (f && f->subset_version == context.subset_version) continue;
    pending.push_back(i);
    jobs.push_back({&context, population[i].mapping});
  }
  if (jobs.empty()) return 0;

  auto results = pool.submit_batch(std::move(jobs));
  for (std::size_t j = 0; j < pending.size(); ++j) {
    auto& slot = results[j];
    population[pending[j]].fitness =
        slot.ok() ? *slot.value : Fitness::failed(context.subset_version);
  }
  return pending.size();
}

Population next_generation(const Population& population, const GaParams& params,
                           std::size_t processor_count, Rng& rng) {
  params.validate();
  if (population.empty()) return {};
  for (const auto& ind : population) {
    if (!ind.fitness) throw std::invalid_argument("next_generation: unevaluated individual");
  }

  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return fitter(population[a], population[b]); });

  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto tournament = [&]() -> const Individual& {
    std::size_t best = pick(rng);
    for (std::size_t t = 1; t < params.tournament; ++t) {
      const std::size_t other = pick(rng);
      if (fitter(population[other], population[best])) best = other;
    }
    return population[best];
  };

  Population next;
  next.reserve(population.size());
  for (std::size_t e = 0; e < std::min(params.elitism, population.size()); ++e) {
    next.push_back(population[order[e]]);
  }

  const std::size_t genes = population.front().mapping.genes.size();
  while (next.size() < population.size()) {
    const Individual& first = tournament();
    const Individual& second = tournament();
    Individual child{first.mapping, std::nullopt};

    if (coin(rng) < params.crossover_rate && genes >= 2) {
      const std::size_t point = std::uniform_int_distribution<std::size_t>(1, genes - 1)(rng);
      std::copy(second.mapping.genes.begin() + static_cast<std::ptrdiff_t>(point),
                second.mapping.genes.end(),
                child.mapping.genes.begin() + static_cast<std::ptrdiff_t>(point));
    }
    if (processor_count > 1) {
      std::uniform_int_distribution<std::uint32_t> other(
          0, static_cast<std::uint32_t>(processor_count - 2));
      for (auto& g : child.mapping.genes) {
        if (coin(rng) < params.mutation_rate) {
          // Uniform over the alleles different from the current one.
          const std::uint32_t v = other(rng);
          g = v >= g ? v + 1 : v;
        }
      }
    }
    if (child.mapping == first.mapping) child.fitness = first.fitness;
    next.push_back(std::move(child));
  }
  return next;
}

ExplorerResult run_explorer(const SystemSpec& spec, const GaParams& params,
                            SubsetProvider& subsets, EvalPool& pool,
                            const ExplorerOptions& options) {
  using clock = std::chrono::steady_clock;
  params.validate();
  Rng rng(params.seed);
  Population population = init_population(spec, params, rng);

  ExplorerResult result;
  std::vector<Mapping> archive;
  auto remember = [&](const Mapping& m) {
    if (std::find(archive.begin(), archive.end(), m) == archive.end()) archive.push_back(m);
  };

  EvalContext context{&spec, {}, options.aggregate, 0, options.backend};
  for (std::size_t gen = 0; gen < params.generations; ++gen) {
    const auto t0 = clock::now();

    // Subsets are adopted at generation boundaries only.
    const auto snap = subsets.snapshot();
    context.subset = normalize_subset(snap->indices, spec.scenario_count());
    context.subset_version = snap->version;
    result.evaluations += evaluate_population(population, context, pool);

    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fitter(population[a], population[b]); });
    remember(population[order.front()].mapping);

    GenerationRecord rec;
    rec.generation = gen;
    rec.best_fitness = population[order.front()].fitness->value;
    rec.subset_version = snap->version;
    std::size_t counted = 0;
    for (const auto& ind : population) {
      if (ind.fitness->error) continue;
      rec.mean_fitness += ind.fitness->value;
      ++counted;
    }
    if (counted) rec.mean_fitness /= static_cast<double>(counted);

    std::vector<Mapping> offered;
    for (auto i : order) {
      if (offered.size() >= options.offer_per_generation) break;
      if (population[i].fitness->error) continue;
      if (std::find(offered.begin(), offered.end(), population[i].mapping) == offered.end()) {
        offered.push_back(population[i].mapping);
      }
    }
    subsets.offer(std::move(offered));

    if (gen + 1 < params.generations) {
      population = next_generation(population, params, spec.processor_count(), rng);
    }
    if (!options.no_timing) {
      rec.wall_ns = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
    }
    result.history.push_back(rec);
  }

  // Final validation: the subset only accelerates the search; the answer is
  // judged on every scenario.
  for (const auto& ind : population) remember(ind.mapping);
  EvalContext full{&spec, full_subset(spec), options.aggregate, kFullSetVersion, options.backend};
  Population finalists;
  for (auto& m : archive) finalists.push_back({std::move(m), std::nullopt});
  result.evaluations += evaluate_population(finalists, full, pool);
  result.best = *std::min_element(finalists.begin(), finalists.end(), fitter);
  return result;
}

void write_history_csv(std::span<const GenerationRecord> history, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "generation,best_fitness,mean_fitness,subset_version,wall_ns\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%llu,%llu\n", r.generation, r.best_fitness,
                  r.mean_fitness, static_cast<unsigned long long>(r.subset_version),
                  static_cast<unsigned long long>(r.wall_ns));
    out << line;
  }
  if (!out) throw Error("error writing " + path);
}

OracleResult brute_force_optimum(const SystemSpec& spec, Aggregate aggregate, std::uint64_t cap) {
  const std::uint64_t radix = spec.processor_count();
  std::uint64_t total = 1;
  for (std::size_t p = 0; p < spec.process_count(); ++p) {
    if (total > cap / radix) {
      throw Error("search space exceeds the brute-force cap of " + std::to_string(cap) +
                  " mappings; use the genetic explorer (explore) instead");
    }
    total *= radix;
  }

  const auto all = full_subset(spec);
  OracleResult best;
  Mapping m;
  m.genes.assign(spec.process_count(), 0);
  for (std::uint64_t n = 0; n < total; ++n) {
    const Fitness f = evaluate_mapping(spec, m, all, aggregate);
    ++best.evaluated;
    // Lexicographic enumeration: strict improvement keeps the smallest genes.
    if (n == 0 || f.value < best.fitness.value) {
      best.mapping = m;
      best.fitness = f;
    }
    for (std::size_t i = m.genes.size(); i-- > 0;) {
      if (++m.genes[i] < radix) break;
      m.genes[i] = 0;
    }
  }
  return best;
}

}  // namespace sdse
