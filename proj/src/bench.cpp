#include "sdse/bench.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "sdse/evaluator.hpp"

namespace sdse {

std::string_view to_string(JobKind kind) noexcept {
  switch (kind) {
    case JobKind::alloc_churn: return "alloc_churn";
    case JobKind::simulate: return "simulate";
    case JobKind::synthetic: break;
  }
  return "synthetic";
}

JobKind parse_job_kind(std::string_view text) {
  if (text == "synthetic") return JobKind::synthetic;
  if (text == "alloc_churn") return JobKind::alloc_churn;
  if (text == "simulate") return JobKind::simulate;
  throw std::invalid_argument("unknown job kind '" + std::string(text) + "'");
}

std::shared_ptr<const SystemSpec> demo_system() {
  static const auto spec = std::make_shared<const SystemSpec>(parse_config(R"({
    "applications": [
      {"name": "decoder", "processes": ["vld", "idct", "cc"],
       "channels": [["vld", "idct"], ["idct", "cc"]]},
      {"name": "encoder", "processes": ["dct", "quant", "vle"],
       "channels": [["dct", "quant"], ["quant", "vle"]]}
    ],
    "architecture": {
      "processors": [{"name": "risc", "speed": 1, "power": 1},
                     {"name": "dsp", "speed": 2, "power": 3},
                     {"name": "acc", "speed": 4, "power": 6}],
      "interconnect": {"bandwidth": 8, "energy_per_unit": 0.25}
    },
    "scenarios": [
      {"name": "both", "comp": {"vld": 40, "idct": 120, "cc": 30, "dct": 100, "quant": 50, "vle": 40},
       "data": {"vld->idct": 64, "idct->cc": 64, "dct->quant": 64, "quant->vle": 32}},
      {"name": "decode_only", "active_apps": ["decoder"],
       "comp": {"vld": 60, "idct": 160, "cc": 40}, "data": {"vld->idct": 96, "idct->cc": 96}},
      {"name": "encode_only", "active_apps": ["encoder"],
       "comp": {"dct": 140, "quant": 70, "vle": 20}, "data": {"dct->quant": 80, "quant->vle": 16}},
      {"name": "light", "comp": {"vld": 10, "idct": 30, "cc": 8, "dct": 25, "quant": 12, "vle": 10},
       "data": {"vld->idct": 16, "idct->cc": 16, "dct->quant": 16, "quant->vle": 8}}
    ]
  })"));
  return spec;
}

namespace {

using BenchPool = BatchRunner<std::uint64_t, std::uint64_t>;

std::uint64_t ns_since(std::chrono::steady_clock::time_point t0) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
          .count());
}

std::vector<std::uint64_t> job_indices(std::uint64_t count) {
  std::vector<std::uint64_t> jobs(count);
  std::iota(jobs.begin(), jobs.end(), std::uint64_t{0});
  return jobs;
}

}  // namespace

ExperimentResult run_scaling_experiment(const BenchConfig& config) {
  if (config.workers.empty()) throw std::invalid_argument("workers list is empty");
  for (auto w : config.workers) {
    if (w < 1) throw std::invalid_argument("worker counts must be >= 1");
  }
  if (config.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (config.queues.empty()) throw std::invalid_argument("queue list is empty");

  // Job bodies; job i's output depends on i so misplaced results show up in
  // the checksum.
  BenchPool::Executor executor;
  std::vector<Mapping> mappings;
  std::shared_ptr<const SystemSpec> spec;
  switch (config.job_kind) {
    case JobKind::synthetic:
      executor = [cost = config.job_cost](const std::uint64_t& i) {
        return checksum_combine(synthetic_job(cost), i);
      };
      break;
    case JobKind::alloc_churn:
      executor = [cost = config.job_cost, sizes = config.block_sizes](const std::uint64_t& i) {
        return checksum_combine(alloc_churn_job(cost, sizes), i);
      };
      break;
    case JobKind::simulate: {
      spec = config.spec ? config.spec : demo_system();
      Rng rng(config.seed);
      const std::uint64_t distinct = std::max<std::uint64_t>(config.jobs, 1);
      for (std::uint64_t i = 0; i < distinct; ++i) mappings.push_back(random_mapping(*spec, rng));
      executor = [&spec, &mappings, all = full_subset(*spec)](const std::uint64_t& i) {
        const auto f =
            evaluate_mapping(*spec, mappings[i % mappings.size()], all, Aggregate::average);
        std::uint64_t bits = 0;
        std::memcpy(&bits, &f.value, sizeof bits);
        return checksum_combine(bits, i);
      };
      break;
    }
  }

  ExperimentResult out;
  bool have_checksum = false;
  PoolOptions options;
  options.measure_busy = !config.no_timing;

  for (auto queue : config.queues) {
    for (auto workers : config.workers) {
      for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        auto pool = make_batch_runner<std::uint64_t, std::uint64_t>(queue, workers, executor,
                                                                    options);
        if (config.warmup_jobs > 0) pool->submit_batch(job_indices(config.warmup_jobs));

        auto jobs = job_indices(config.jobs);
        const auto ctx0 = read_ctx_switches();
        const auto t0 = std::chrono::steady_clock::now();
        auto results = pool->submit_batch(std::move(jobs));
        const auto wall = ns_since(t0);
        const auto ctx1 = read_ctx_switches();
        const auto stats = pool->last_batch_stats();
        pool->shutdown();

        std::uint64_t checksum = kSyntheticSeed;
        for (std::size_t i = 0; i < results.size(); ++i) {
          if (!results[i].ok()) {
            throw Error("job " + std::to_string(i) + " failed: " + results[i].error);
          }
          checksum = checksum_combine(checksum, *results[i].value);
        }
        if (have_checksum && checksum != out.checksum) {
          throw Error("job checksum mismatch at " + std::string(to_string(queue)) + " queue, " +
                      std::to_string(workers) + " workers");
        }
        out.checksum = checksum;
        have_checksum = true;

        BenchRecord rec;
        rec.queue_kind = queue;
        rec.job_kind = config.job_kind;
        rec.jobs = config.jobs;
        rec.job_cost = config.job_cost;
        rec.workers = workers;
        rec.repeat = rep;
        if (config.no_timing) {
          rec.voluntary_ctx_switches = 0;
          rec.involuntary_ctx_switches = 0;
        } else {
          rec.wall_ns = std::max<std::uint64_t>(wall, 1);
          rec.busy_ns_total = stats.busy_ns_total;
          rec.jobs_per_sec = static_cast<double>(rec.jobs) * 1e9 / static_cast<double>(rec.wall_ns);
          if (ctx0.voluntary >= 0 && ctx1.voluntary >= 0) {
            rec.voluntary_ctx_switches = ctx1.voluntary - ctx0.voluntary;
            rec.involuntary_ctx_switches = ctx1.involuntary - ctx0.involuntary;
          }
        }
        out.records.push_back(rec);
      }
    }
  }
  return out;
}

std::vector<SummaryRow> summarize(std::span<const BenchRecord> records) {
  using Group = std::tuple<int, int, std::uint64_t, std::uint64_t>;
  std::map<Group, std::map<std::uint64_t, std::vector<double>>> groups;
  for (const auto& r : records) {
    groups[{static_cast<int>(r.queue_kind), static_cast<int>(r.job_kind), r.jobs, r.job_cost}]
          [r.workers]
              .push_back(static_cast<double>(r.wall_ns));
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  std::vector<SummaryRow> rows;
  for (const auto& [key, by_workers] : groups) {
    auto base = by_workers.find(1);
    if (base == by_workers.end()) {
      throw std::invalid_argument("summary needs a 1-worker baseline for every workload");
    }
    const double baseline = mean_of(base->second);
    for (const auto& [workers, walls] : by_workers) {
      SummaryRow row;
      row.queue_kind = static_cast<QueueKind>(std::get<0>(key));
      row.job_kind = static_cast<JobKind>(std::get<1>(key));
      row.jobs = std::get<2>(key);
      row.job_cost = std::get<3>(key);
      row.workers = workers;
      row.repeats = walls.size();
      row.mean_wall_ns = mean_of(walls);
      if (walls.size() > 1) {
        double ss = 0.0;
        for (double w : walls) ss += (w - row.mean_wall_ns) * (w - row.mean_wall_ns);
        const double n = static_cast<double>(walls.size());
        row.sem_wall_ns = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      if (row.mean_wall_ns > 0.0) {
        row.speedup = baseline / row.mean_wall_ns;
        row.efficiency = row.speedup / static_cast<double>(workers);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kRecordHeader =
    "queue_kind,job_kind,jobs,job_cost,workers,repeat,wall_ns,busy_ns_total,jobs_per_sec,"
    "voluntary_ctx_switches,involuntary_ctx_switches";

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error("error writing " + path);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t to_u64(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0 || s[0] == '-') {
    throw std::invalid_argument("bad integer '" + s + "'");
  }
  return v;
}

std::int64_t to_i64(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const auto v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_csv(std::span<const BenchRecord> records) {
  std::string out = std::string(kRecordHeader) + "\n";
  for (const auto& r : records) {
    out += std::string(to_string(r.queue_kind)) + ',' + std::string(to_string(r.job_kind)) + ',' +
           std::to_string(r.jobs) + ',' + std::to_string(r.job_cost) + ',' +
           std::to_string(r.workers) + ',' + std::to_string(r.repeat) + ',' +
           std::to_string(r.wall_ns) + ',' + std::to_string(r.busy_ns_total) + ',' +
           fmt_double(r.jobs_per_sec) + ',' + std::to_string(r.voluntary_ctx_switches) + ',' +
           std::to_string(r.involuntary_ctx_switches) + '\n';
  }
  return out;
}

std::vector<BenchRecord> parse_csv(std::string_view text) {
  std::vector<BenchRecord> records;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) {
    throw std::invalid_argument("missing or unexpected bench CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw std::invalid_argument("bench CSV row has wrong column count");
    BenchRecord r;
    r.queue_kind = parse_queue_kind(f[0]);
    r.job_kind = parse_job_kind(f[1]);
    r.jobs = to_u64(f[2]);
    r.job_cost = to_u64(f[3]);
    r.workers = to_u64(f[4]);
    r.repeat = to_u64(f[5]);
    r.wall_ns = to_u64(f[6]);
    r.busy_ns_total = to_u64(f[7]);
    r.jobs_per_sec = to_double(f[8]);
    r.voluntary_ctx_switches = to_i64(f[9]);
    r.involuntary_ctx_switches = to_i64(f[10]);
    records.push_back(r);
  }
  return records;
}

void write_csv(std::span<const BenchRecord> records, const std::string& path) {
  write_file(path, format_csv(records));
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::string& path) {
  std::string out =
      "queue_kind,job_kind,jobs,job_cost,workers,repeats,mean_wall_ns,sem_wall_ns,speedup,"
      "efficiency\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.queue_kind)) + ',' + std::string(to_string(r.job_kind)) + ',' +
           std::to_string(r.jobs) + ',' + std::to_string(r.job_cost) + ',' +
           std::to_string(r.workers) + ',' + std::to_string(r.repeats) + ',' +
           fmt_double(r.mean_wall_ns) + ',' + fmt_double(r.sem_wall_ns) + ',' +
           fmt_double(r.speedup) + ',' + fmt_double(r.efficiency) + '\n';
  }
  write_file(path, out);
}

void write_plot_data(std::span<const SummaryRow> rows, const std::string& path) {
  std::string out = "workers,speedup\n";
  std::tuple<int, int, std::uint64_t, std::uint64_t> current{-1, -1, 0, 0};
  for (const auto& r : rows) {
    const std::tuple<int, int, std::uint64_t, std::uint64_t> key{
        static_cast<int>(r.queue_kind), static_cast<int>(r.job_kind), r.jobs, r.job_cost};
    if (key != current) {
      out += "# queue=" + std::string(to_string(r.queue_kind)) +
             " job=" + std::string(to_string(r.job_kind)) + " jobs=" + std::to_string(r.jobs) +
             " cost=" + std::to_string(r.job_cost) + '\n';
      current = key;
    }
    out += std::to_string(r.workers) + ',' + fmt_double(r.speedup) + '\n';
  }
  write_file(path, out);
}

}  // namespace sdse
