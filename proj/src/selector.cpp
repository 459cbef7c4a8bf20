#include "sdse/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace sdse {

SnapshotCell::SnapshotCell(SubsetSnapshot initial)
    : current_(std::make_shared<const SubsetSnapshot>(std::move(initial))) {}

std::shared_ptr<const SubsetSnapshot> SnapshotCell::load() const {
  std::lock_guard lock(mutex_);
  return current_;
}

std::uint64_t SnapshotCell::publish(std::vector<std::size_t> indices, double tau) {
  std::lock_guard lock(mutex_);
  auto next = std::make_shared<SubsetSnapshot>();
  next->indices = std::move(indices);
  next->tau = tau;
  next->version = current_->version + 1;
  current_ = std::move(next);
  return current_->version;
}

// ---------------------------------------------------------------------------

TrainingSet::TrainingSet(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("training capacity must be >= 1");
}

bool TrainingSet::contains(const Mapping& mapping) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const TrainingEntry& e) { return e.mapping == mapping; });
}

void TrainingSet::insert(TrainingEntry entry) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const TrainingEntry& e) { return e.mapping == entry.mapping; });
  if (it != entries_.end()) entries_.erase(it);
  entries_.push_back(std::move(entry));
  if (entries_.size() > capacity_) {
    entries_.erase(entries_.begin(),
                   entries_.begin() + static_cast<std::ptrdiff_t>(entries_.size() - capacity_));
  }
}

TrainingSet update_training_set(TrainingSet training, std::vector<TrainingEntry> fresh) {
  for (auto& e : fresh) training.insert(std::move(e));
  return training;
}

// ---------------------------------------------------------------------------

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("kendall_tau: need at least two items");

  std::int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int da = (a[i] > a[j]) - (a[i] < a[j]);
      const int db = (b[i] > b[j]) - (b[i] < b[j]);
      if (da == 0) ++ties_a;
      if (db == 0) ++ties_b;
      if (da != 0 && db != 0) (da == db ? concordant : discordant)++;
    }
  }
  const auto n = static_cast<std::int64_t>(a.size());
  const std::int64_t pairs = n * (n - 1) / 2;
  if (ties_a == pairs && ties_b == pairs) return 1.0;
  if (ties_a == pairs || ties_b == pairs) return 0.0;
  const double denom = std::sqrt(static_cast<double>(pairs - ties_a) *
                                 static_cast<double>(pairs - ties_b));
  return static_cast<double>(concordant - discordant) / denom;
}

namespace {

/// Per-(mapping, scenario) metrics of the training set plus its full-set
/// fitness values, so subsets can be scored without re-evaluating.
class SubsetScorer {
 public:
  SubsetScorer(const SystemSpec& spec, const TrainingSet& training, Aggregate aggregate)
      : aggregate_(aggregate), scenarios_(spec.scenario_count()) {
    if (training.size() < 2) {
      throw std::invalid_argument("subset selection needs at least two training mappings");
    }
    for (const auto& e : training.entries()) {
      validate_mapping(spec, e.mapping);
      for (const auto& s : spec.scenarios()) {
        metrics_.push_back(scenario_metrics(spec, e.mapping, s));
      }
      full_.push_back(e.full.value);
    }
  }

  double tau(std::span<const std::size_t> subset) const {
    const auto order = normalize_subset(subset, scenarios_);
    std::vector<double> values;
    std::vector<ScenarioMetrics> row(order.size());
    for (std::size_t m = 0; m < full_.size(); ++m) {
      for (std::size_t i = 0; i < order.size(); ++i) row[i] = metrics_[m * scenarios_ + order[i]];
      values.push_back(aggregate_metrics(row, aggregate_).value);
    }
    return kendall_tau(values, full_);
  }

 private:
  Aggregate aggregate_;
  std::size_t scenarios_;
  std::vector<ScenarioMetrics> metrics_;
  std::vector<double> full_;
};

void check_k(const SystemSpec& spec, std::size_t k) {
  if (k < 1 || k > spec.scenario_count()) {
    throw std::invalid_argument("subset size k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(spec.scenario_count()) + "]");
  }
}

}  // namespace

double subset_tau(const SystemSpec& spec, const TrainingSet& training,
                  std::span<const std::size_t> subset, Aggregate aggregate) {
  return SubsetScorer(spec, training, aggregate).tau(subset);
}

SubsetSnapshot select_subset_sfs(const SystemSpec& spec, const TrainingSet& training,
                                 std::size_t k, Aggregate aggregate) {
  check_k(spec, k);
  const SubsetScorer scorer(spec, training, aggregate);

  SubsetSnapshot out;
  std::vector<bool> taken(spec.scenario_count(), false);
  std::vector<std::size_t> trial;
  while (out.indices.size() < k) {
    double best_tau = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t s = 0; s < spec.scenario_count(); ++s) {
      if (taken[s]) continue;
      trial = out.indices;
      trial.push_back(s);
      const double t = scorer.tau(trial);
      if (t > best_tau) {
        best_tau = t;
        best = s;
      }
    }
    taken[best] = true;
    out.indices.push_back(best);
    out.tau = best_tau;
  }
  return out;
}

SubsetSnapshot select_subset_sbs(const SystemSpec& spec, const TrainingSet& training,
                                 std::size_t k, Aggregate aggregate) {
  check_k(spec, k);
  const SubsetScorer scorer(spec, training, aggregate);

  SubsetSnapshot out;
  out.indices = full_subset(spec);
  out.tau = scorer.tau(out.indices);
  std::vector<std::size_t> trial;
  while (out.indices.size() > k) {
    double best_tau = -std::numeric_limits<double>::infinity();
    std::size_t drop = 0;
    for (std::size_t i = 0; i < out.indices.size(); ++i) {
      trial = out.indices;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
      const double t = scorer.tau(trial);
      if (t > best_tau) {
        best_tau = t;
        drop = i;
      }
    }
    out.indices.erase(out.indices.begin() + static_cast<std::ptrdiff_t>(drop));
    out.tau = best_tau;
  }
  return out;
}

SubsetSnapshot select_subset(const SystemSpec& spec, const TrainingSet& training, std::size_t k,
                             SelectionMethod method, Aggregate aggregate) {
  return method == SelectionMethod::sbs ? select_subset_sbs(spec, training, k, aggregate)
                                        : select_subset_sfs(spec, training, k, aggregate);
}

// ---------------------------------------------------------------------------

FixedSubsetProvider::FixedSubsetProvider(std::vector<std::size_t> indices) {
  auto snap = std::make_shared<SubsetSnapshot>();
  snap->indices = std::move(indices);
  snapshot_ = std::move(snap);
}

SelectorCore::SelectorCore(const SystemSpec& spec, SelectorOptions options)
    : spec_(spec),
      options_(options),
      training_(options.training_capacity),
      cell_(SubsetSnapshot{full_subset(spec), 0, 1.0}) {
  check_k(spec, options.k);
}

void SelectorCore::process(const std::vector<Mapping>& candidates) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto all = full_subset(spec_);
  std::vector<TrainingEntry> fresh;
  for (const auto& m : candidates) {
    const Fitness* known = nullptr;
    for (const auto& e : training_.entries()) {
      if (e.mapping == m) known = &e.full;
    }
    for (const auto& e : fresh) {
      if (e.mapping == m) known = &e.full;
    }
    fresh.push_back({m, known ? *known : evaluate_mapping(spec_, m, all, options_.aggregate)});
  }
  training_ = update_training_set(std::move(training_), std::move(fresh));
  if (training_.size() < 2) return;

  auto chosen = select_subset(spec_, training_, options_.k, options_.method, options_.aggregate);
  const auto indices = chosen.indices;
  const auto version = cell_.publish(std::move(chosen.indices), chosen.tau);

  SelectorLogEntry entry;
  entry.version = version;
  entry.indices = indices;
  entry.tau = chosen.tau;
  entry.training_size = training_.size();
  if (!options_.no_timing) {
    entry.wall_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count());
  }
  std::lock_guard lock(log_mutex_);
  log_.push_back(std::move(entry));
}

std::vector<SelectorLogEntry> SelectorCore::log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

SyncSubsetSelector::SyncSubsetSelector(const SystemSpec& spec, SelectorOptions options)
    : core_(spec, options) {}

AsyncSubsetSelector::AsyncSubsetSelector(const SystemSpec& spec, SelectorOptions options)
    : core_(spec, options), queue_capacity_(std::max<std::size_t>(options.queue_capacity, 1)) {
  thread_ = std::thread([this] { run(); });
}

AsyncSubsetSelector::~AsyncSubsetSelector() { finish(); }

void AsyncSubsetSelector::offer(std::vector<Mapping> candidates) {
  {
    std::lock_guard lock(mutex_);
    if (queue_.size() >= queue_capacity_) queue_.pop_front();
    queue_.push_back(std::move(candidates));
  }
  cv_.notify_one();
}

void AsyncSubsetSelector::finish() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_one();
  if (thread_.joinable()) thread_.join();
}

void AsyncSubsetSelector::run() {
  for (;;) {
    std::deque<std::vector<Mapping>> pending;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      pending.swap(queue_);
    }
    for (const auto& batch : pending) core_.process(batch);
  }
}

// ---------------------------------------------------------------------------

std::string format_indices(std::span<const std::size_t> indices, char separator) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += separator;
    out += std::to_string(indices[i]);
  }
  return out;
}

void write_selector_log(std::span<const SelectorLogEntry> log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "version,subset_indices,tau,training_size,wall_ns\n";
  char tau[64];
  for (const auto& e : log) {
    std::snprintf(tau, sizeof tau, "%.17g", e.tau);
    out << e.version << ',' << format_indices(e.indices) << ',' << tau << ',' << e.training_size
        << ',' << e.wall_ns << '\n';
  }
  if (!out) throw Error("error writing " + path);
}

}  // namespace sdse
