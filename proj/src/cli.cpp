#include "sdse/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdse/bench.hpp"
#include "sdse/evaluator.hpp"
#include "sdse/explorer.hpp"
#include "sdse/model.hpp"
#include "sdse/selector.hpp"

namespace sdse::cli {

std::size_t resolve_workers(std::optional<std::size_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SDSE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Aggregate parse_aggregate(const std::string& s) {
  return s == "worst" ? Aggregate::worst : Aggregate::average;
}


std::vector<Mapping> load_training_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open training file " + path, path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("syntax error in training file at byte " + std::to_string(e.byte), path);
  }
  if (!doc.is_object() || !doc.contains("mappings") || !doc["mappings"].is_array()) {
    throw ConfigError("training file needs a 'mappings' array", "mappings");
  }
  std::vector<Mapping> out;
  for (const auto& jm : doc["mappings"]) {
    Mapping m;
    try {
      m.genes = jm.get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("training mapping must be an array of processor indices", "mappings");
    }
    out.push_back(std::move(m));
  }
  return out;
}

struct EvalOneArgs {
  std::string config;
  std::string genes;
  std::size_t scenario = 0;
};

int eval_one(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"single-job evaluation mode"};
  EvalOneArgs a;
  bool flag = false;
  app.add_flag("--eval-one", flag, "Evaluate one mapping under one scenario")->required();
  app.add_option("--config", a.config, "System configuration (JSON)")->required();
  app.add_option("--genes", a.genes, "Comma-separated processor index per process")->required();
  app.add_option("--scenario", a.scenario, "Scenario index")->required();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    if (rc != 0) err << app.help();
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const SystemSpec spec = load_config(a.config);
  const Mapping mapping = parse_genes(a.genes);
  validate_mapping(spec, mapping);
  if (a.scenario >= spec.scenario_count()) {
    throw std::invalid_argument("scenario index " + std::to_string(a.scenario) + " out of range");
  }
  out << format_metrics_line(scenario_metrics(spec, mapping, spec.scenarios()[a.scenario]))
      << '\n';
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (std::find(args.begin(), args.end(), "--eval-one") != args.end()) {
    return eval_one(args, out, err);
  }

  CLI::App app{"Scenario-based design space exploration toolkit", "sdse"};
  app.require_subcommand(1);
  const std::vector<std::string> aggregates{"average", "worst"};
  const std::vector<std::string> queues{"lockless", "locked"};

  // explore
  auto* explore = app.add_subcommand("explore", "Genetic search with concurrent subset selection");
  std::string config;
  std::string aggregate = "average";
  GaParams ga;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> k;
  std::string selector_mode = "sync";
  std::string selection = "sfs";
  std::string queue = "lockless";
  std::string out_dir = ".";
  std::string eval_mode = "in-process";
  std::size_t training_capacity = 16;
  bool no_timing = false;
  explore->add_option("--config", config, "System configuration (JSON)")->required();
  explore->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  explore->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  explore->add_option("--generations", ga.generations)->capture_default_str();
  explore->add_option("--population", ga.population)->capture_default_str();
  explore->add_option("--tournament", ga.tournament)->capture_default_str();
  explore->add_option("--crossover", ga.crossover_rate)->capture_default_str();
  explore->add_option("--mutation", ga.mutation_rate)->capture_default_str();
  explore->add_option("--elitism", ga.elitism)->capture_default_str();
  explore->add_option("--k", k, "Scenario subset size (default: half the scenarios)")
      ->check(CLI::PositiveNumber);
  explore->add_option("--selector-mode", selector_mode)
      ->check(CLI::IsMember({"sync", "async"}))
      ->capture_default_str();
  explore->add_option("--selection", selection)
      ->check(CLI::IsMember({"sfs", "sbs"}))
      ->capture_default_str();
  explore->add_option("--training-capacity", training_capacity)->capture_default_str();
  explore->add_option("--aggregate", aggregate)->check(CLI::IsMember(aggregates))->capture_default_str();
  explore->add_option("--queue", queue)->check(CLI::IsMember(queues))->capture_default_str();
  explore->add_option("--eval-mode", eval_mode)
      ->check(CLI::IsMember({"in-process", "process"}))
      ->capture_default_str();
  explore->add_option("--out", out_dir, "Directory for history.csv, selector.csv, best.json")
      ->capture_default_str();
  explore->add_flag("--no-timing", no_timing, "Zero wall-time columns");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Metrics of one mapping per scenario");
  std::string genes;
  evaluate->add_option("--config", config)->required();
  evaluate->add_option("--genes", genes, "Comma-separated processor index per process")->required();
  evaluate->add_option("--aggregate", aggregate)->check(CLI::IsMember(aggregates))->capture_default_str();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum (small systems only)");
  std::uint64_t cap = kDefaultOracleCap;
  oracle->add_option("--config", config)->required();
  oracle->add_option("--aggregate", aggregate)->check(CLI::IsMember(aggregates))->capture_default_str();
  oracle->add_option("--cap", cap, "Largest search space to enumerate")->capture_default_str();

  // select-subset
  auto* select = app.add_subcommand("select-subset", "One subset selection pass");
  std::string training;
  std::size_t select_k = 1;
  select->add_option("--config", config)->required();
  select->add_option("--training", training, "JSON file {\"mappings\": [[...], ...]}")->required();
  select->add_option("--k", select_k)->required()->check(CLI::PositiveNumber);
  select->add_option("--method", selection)->check(CLI::IsMember({"sfs", "sbs"}))->capture_default_str();
  select->add_option("--aggregate", aggregate)->check(CLI::IsMember(aggregates))->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Worker-count scaling experiment");
  BenchConfig bc;
  std::vector<std::size_t> bench_workers;
  std::string bench_queue = "lockless";
  std::string job_kind = "synthetic";
  std::optional<std::uint64_t> cost;
  double job_ms = 1.0;
  std::string bench_out;
  std::string summary_out;
  std::string plot_out;
  bench->add_option("--jobs", bc.jobs)->capture_default_str();
  bench->add_option("--workers", bench_workers, "Comma-separated worker counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench->add_option("--queue", bench_queue)
      ->check(CLI::IsMember({"lockless", "locked", "both"}))
      ->capture_default_str();
  bench->add_option("--repeat", bc.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--job-kind", job_kind)
      ->check(CLI::IsMember({"synthetic", "alloc_churn", "simulate"}))
      ->capture_default_str();
  bench->add_option("--cost", cost, "Iterations (synthetic) or rounds (alloc_churn)");
  bench->add_option("--job-ms", job_ms, "Calibrated synthetic job length when --cost is absent")
      ->capture_default_str();
  bench->add_option("--warmup", bc.warmup_jobs)->capture_default_str();
  bench->add_option("--seed", bc.seed)->capture_default_str();
  bench->add_option("--config", config, "System for --job-kind simulate");
  bench->add_option("--out", bench_out, "Per-record CSV");
  bench->add_option("--summary-out", summary_out, "Speedup summary CSV");
  bench->add_option("--plot-out", plot_out, "workers,speedup pairs");
  bench->add_flag("--no-timing", bc.no_timing, "Zero timing columns");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    if (rc != 0) {
      const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
      err << sub->help();
    }
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const Aggregate agg = parse_aggregate(aggregate);

  if (explore->parsed()) {
    const SystemSpec spec = load_config(config);
    const std::size_t subset_k = k.value_or((spec.scenario_count() + 1) / 2);
    if (subset_k > spec.scenario_count()) {
      err << "--k exceeds the scenario count (" << spec.scenario_count() << ")\n";
      return kExitUsage;
    }
    ga.validate();

    SelectorOptions so;
    so.k = subset_k;
    so.method = selection == "sbs" ? SelectionMethod::sbs : SelectionMethod::sfs;
    so.aggregate = agg;
    so.training_capacity = training_capacity;
    so.no_timing = no_timing;

    ExplorerOptions eo;
    eo.aggregate = agg;
    eo.no_timing = no_timing;
    if (eval_mode == "process") {
      eo.backend.child_process = true;
      eo.backend.executable = self_executable_path();
      eo.backend.config_path = std::filesystem::absolute(config).string();
    }

    auto pool = make_eval_pool(parse_queue_kind(queue), resolve_workers(workers));
    ExplorerResult result;
    std::vector<SelectorLogEntry> log;
    if (selector_mode == "async") {
      AsyncSubsetSelector selector(spec, so);
      result = run_explorer(spec, ga, selector, *pool, eo);
      selector.finish();
      log = selector.log();
    } else {
      SyncSubsetSelector selector(spec, so);
      result = run_explorer(spec, ga, selector, *pool, eo);
      log = selector.log();
    }
    pool->shutdown();

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_history_csv(result.history, (dir / "history.csv").string());
    write_selector_log(log, (dir / "selector.csv").string());
    nlohmann::json best;
    best["genes"] = result.best.mapping.genes;
    best["fitness"] = result.best.fitness->value;
    best["energy"] = result.best.fitness->energy;
    {
      std::ofstream bf(dir / "best.json", std::ios::binary | std::ios::trunc);
      if (!bf) throw Error("cannot write " + (dir / "best.json").string());
      bf << best.dump(2) << '\n';
    }
    out << "genes=" << format_genes(result.best.mapping)
        << " fitness=" << num(result.best.fitness->value)
        << " energy=" << num(result.best.fitness->energy) << '\n';
    return kExitOk;
  }

  if (evaluate->parsed()) {
    const SystemSpec spec = load_config(config);
    const Mapping mapping = parse_genes(genes);
    validate_mapping(spec, mapping);
    out << "scenario,name,makespan,energy\n";
    for (std::size_t s = 0; s < spec.scenario_count(); ++s) {
      const auto m = scenario_metrics(spec, mapping, spec.scenarios()[s]);
      out << s << ',' << spec.scenarios()[s].name << ',' << num(m.makespan) << ','
          << num(m.energy) << '\n';
    }
    const auto f = evaluate_mapping(spec, mapping, full_subset(spec), agg);
    out << "aggregate," << aggregate << ',' << num(f.value) << ',' << num(f.energy) << '\n';
    return kExitOk;
  }

  if (oracle->parsed()) {
    const SystemSpec spec = load_config(config);
    const auto best = brute_force_optimum(spec, agg, cap);
    out << "genes=" << format_genes(best.mapping) << " fitness=" << num(best.fitness.value)
        << " energy=" << num(best.fitness.energy) << " evaluated=" << best.evaluated << '\n';
    return kExitOk;
  }

  if (select->parsed()) {
    const SystemSpec spec = load_config(config);
    const auto mappings = load_training_file(training);
    for (const auto& m : mappings) validate_mapping(spec, m);
    SelectorOptions so;
    so.k = select_k;
    so.method = selection == "sbs" ? SelectionMethod::sbs : SelectionMethod::sfs;
    so.aggregate = agg;
    so.training_capacity = std::max<std::size_t>(mappings.size(), 1);
    SelectorCore core(spec, so);
    core.process(mappings);
    if (core.training().size() < 2) {
      err << "subset selection needs at least two distinct training mappings\n";
      return kExitConfig;
    }
    const auto snap = core.snapshot();
    out << "subset=" << format_indices(snap->indices) << " tau=" << num(snap->tau)
        << " training=" << core.training().size() << '\n';
    return kExitOk;
  }

  // bench
  bc.job_kind = parse_job_kind(job_kind);
  if (bench_workers.empty()) bench_workers.push_back(resolve_workers(std::nullopt));
  bc.workers = bench_workers;
  if (bench_queue == "both") {
    bc.queues = {QueueKind::lockless, QueueKind::locked};
  } else {
    bc.queues = {parse_queue_kind(bench_queue)};
  }
  if (bc.job_kind == JobKind::simulate && !config.empty()) {
    bc.spec = std::make_shared<const SystemSpec>(load_config(config));
  }
  if (cost) {
    bc.job_cost = *cost;
  } else if (bc.job_kind == JobKind::synthetic) {
    bc.job_cost = calibrate_synthetic_cost(
        std::chrono::nanoseconds(static_cast<std::int64_t>(job_ms * 1e6)));
  } else if (bc.job_kind == JobKind::alloc_churn) {
    bc.job_cost = 100;
  }

  const auto result = run_scaling_experiment(bc);
  if (!bench_out.empty()) write_csv(result.records, bench_out);
  const bool has_baseline =
      std::find(bc.workers.begin(), bc.workers.end(), std::size_t{1}) != bc.workers.end();
  if (has_baseline) {
    const auto rows = summarize(result.records);
    if (!summary_out.empty()) write_summary_csv(rows, summary_out);
    if (!plot_out.empty()) write_plot_data(rows, plot_out);
    out << "queue,workers,mean_wall_ns,sem_wall_ns,speedup,efficiency\n";
    for (const auto& r : rows) {
      out << to_string(r.queue_kind) << ',' << r.workers << ',' << num(r.mean_wall_ns) << ','
          << num(r.sem_wall_ns) << ',' << num(r.speedup) << ',' << num(r.efficiency) << '\n';
    }
  } else if (!summary_out.empty() || !plot_out.empty()) {
    err << "summary and plot output need a 1-worker baseline in --workers\n";
    return kExitUsage;
  }
  out << "checksum=" << result.checksum << " cost=" << bc.job_cost << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sdse::cli
