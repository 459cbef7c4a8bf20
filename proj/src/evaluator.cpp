#include "sdse/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace sdse {

std::vector<double> processor_busy_times(const SystemSpec& spec, const Mapping& mapping,
                                         const Scenario& scenario) {
  // Demands are summed first and divided once, so that e.g. putting every
  // process on one processor yields exactly (sum comp) / speed.
  std::vector<double> load(spec.processor_count(), 0.0);
  for (std::size_t p = 0; p < spec.process_count(); ++p) {
    load[mapping.genes[p]] += scenario.comp[p];
  }
  const auto& procs = spec.architecture().processors;
  for (std::size_t r = 0; r < load.size(); ++r) load[r] /= procs[r].speed;
  return load;
}

double external_data(const SystemSpec& spec, const Mapping& mapping, const Scenario& scenario) {
  double total = 0.0;
  for (std::size_t c = 0; c < spec.channel_count(); ++c) {
    const auto& ch = spec.channel(c);
    if (mapping.genes[ch.from] != mapping.genes[ch.to]) total += scenario.data[c];
  }
  return total;
}

double scenario_makespan(const SystemSpec& spec, const Mapping& mapping, const Scenario& scenario) {
  return scenario_metrics(spec, mapping, scenario).makespan;
}

double scenario_energy(const SystemSpec& spec, const Mapping& mapping, const Scenario& scenario) {
  return scenario_metrics(spec, mapping, scenario).energy;
}

ScenarioMetrics scenario_metrics(const SystemSpec& spec, const Mapping& mapping,
                                 const Scenario& scenario) {
  const auto busy = processor_busy_times(spec, mapping, scenario);
  const double data = external_data(spec, mapping, scenario);
  const auto& arch = spec.architecture();

  ScenarioMetrics m;
  m.makespan = *std::max_element(busy.begin(), busy.end()) + data / arch.interconnect.bandwidth;
  for (std::size_t r = 0; r < busy.size(); ++r) m.energy += arch.processors[r].power * busy[r];
  m.energy += arch.interconnect.energy_per_unit * data;
  return m;
}

Fitness aggregate_metrics(std::span<const ScenarioMetrics> metrics, Aggregate aggregate) {
  if (metrics.empty()) throw std::invalid_argument("empty scenario subset");
  Fitness f;
  if (aggregate == Aggregate::worst) {
    for (const auto& m : metrics) {
      f.value = std::max(f.value, m.makespan);
      f.energy = std::max(f.energy, m.energy);
    }
  } else {
    for (const auto& m : metrics) {
      f.value += m.makespan;
      f.energy += m.energy;
    }
    f.value /= static_cast<double>(metrics.size());
    f.energy /= static_cast<double>(metrics.size());
  }
  return f;
}

std::vector<std::size_t> normalize_subset(std::span<const std::size_t> subset,
                                          std::size_t scenario_count) {
  if (subset.empty()) throw std::invalid_argument("empty scenario subset");
  std::vector<std::size_t> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() >= scenario_count) {
    throw std::invalid_argument("scenario index " + std::to_string(sorted.back()) +
                                " out of range");
  }
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate scenario index in subset");
  }
  return sorted;
}

Fitness evaluate_mapping(const SystemSpec& spec, const Mapping& mapping,
                         std::span<const std::size_t> subset, Aggregate aggregate) {
  const auto order = normalize_subset(subset, spec.scenario_count());
  validate_mapping(spec, mapping);
  std::vector<ScenarioMetrics> metrics;
  metrics.reserve(order.size());
  for (auto s : order) metrics.push_back(scenario_metrics(spec, mapping, spec.scenarios()[s]));
  return aggregate_metrics(metrics, aggregate);
}

std::vector<std::size_t> full_subset(const SystemSpec& spec) {
  std::vector<std::size_t> all(spec.scenario_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

// ---------------------------------------------------------------------------

namespace {

// splitmix64 finalizer
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t checksum_combine(std::uint64_t acc, std::uint64_t value) noexcept {
  return mix(acc ^ (value + 0x9E3779B97F4A7C15ull));
}

std::uint64_t synthetic_job(std::uint64_t cost) {
  std::uint64_t x = kSyntheticSeed;
  for (std::uint64_t i = 0; i < cost; ++i) x = mix(x + 0x9E3779B97F4A7C15ull);
  return x;
}

std::uint64_t calibrate_synthetic_cost(std::chrono::nanoseconds target) {
  using clock = std::chrono::steady_clock;
  auto time_once = [](std::uint64_t cost) {
    volatile std::uint64_t sink = 0;
    auto t0 = clock::now();
    sink = synthetic_job(cost);
    (void)sink;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0);
  };

  std::uint64_t probe = 1 << 14;
  while (time_once(probe) < std::chrono::milliseconds(20) && probe < (1ull << 40)) probe *= 2;
  auto best = time_once(probe);
  for (int i = 0; i < 4; ++i) best = std::min(best, time_once(probe));

  const double per_iter = static_cast<double>(best.count()) / static_cast<double>(probe);
  const double cost = static_cast<double>(target.count()) / per_iter;
  return cost < 1.0 ? 1 : static_cast<std::uint64_t>(cost);
}

std::uint64_t alloc_churn_job(std::uint64_t rounds, std::span<const std::size_t> block_sizes) {
  std::uint64_t acc = kSyntheticSeed;
  std::vector<volatile unsigned char*> blocks(block_sizes.size(), nullptr);
  for (std::uint64_t round = 0; round < rounds; ++round) {
    for (std::size_t i = 0; i < block_sizes.size(); ++i) {
      const std::size_t size = std::max<std::size_t>(block_sizes[i], 1);
      auto* p = static_cast<volatile unsigned char*>(std::malloc(size));
      if (p == nullptr) throw std::bad_alloc();
      p[size - 1] = static_cast<unsigned char>(round * 31 + i * 7 + size);
      blocks[i] = p;
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::size_t size = std::max<std::size_t>(block_sizes[i], 1);
      acc = checksum_combine(acc, blocks[i][size - 1]);
      std::free(const_cast<unsigned char*>(blocks[i]));
      blocks[i] = nullptr;
    }
  }
  return acc;
}

std::string format_metrics_line(const ScenarioMetrics& metrics) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g", metrics.makespan, metrics.energy);
  return buf;
}

}  // namespace sdse
