#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sdse/evaluator.hpp"
#include "sdse/model.hpp"

namespace sdse {

/// A published scenario subset. Versions increase by one per publication.
struct SubsetSnapshot {
  std::vector<std::size_t> indices;
  std::uint64_t version = 0;
  double tau = 1.0;
};

/// Single-publisher versioned cell. Readers get an immutable snapshot, so a
/// (version, indices) pair can never be observed half-written.
class SnapshotCell {
 public:
  explicit SnapshotCell(SubsetSnapshot initial);

  std::shared_ptr<const SubsetSnapshot> load() const;
  /// Stamps the next version onto (indices, tau) and publishes it.
  std::uint64_t publish(std::vector<std::size_t> indices, double tau);

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const SubsetSnapshot> current_;
};

struct TrainingEntry {
  Mapping mapping;
  Fitness full;  // over the full scenario set
};

/// Most-recent-unique set of training mappings, oldest first.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t capacity = 16);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<TrainingEntry>& entries() const noexcept { return entries_; }
  bool contains(const Mapping& mapping) const;

  /// Re-inserting a known mapping only refreshes its recency. Beyond
  /// capacity, the oldest entries are evicted.
  void insert(TrainingEntry entry);

 private:
  std::size_t capacity_;
  std::vector<TrainingEntry> entries_;
};

TrainingSet update_training_set(TrainingSet training, std::vector<TrainingEntry> fresh);

/// Kendall tau-b between two score vectors over the same items. When both
/// vectors are constant the orderings are identical and the result is 1;
/// when exactly one is constant it is 0. Throws std::invalid_argument for
/// mismatched lengths or fewer than two items.
double kendall_tau(std::span<const double> a, std::span<const double> b);

enum class SelectionMethod { sfs, sbs };

/// Tau between the subset-fitness and full-fitness rankings of the training
/// mappings.
double subset_tau(const SystemSpec& spec, const TrainingSet& training,
                  std::span<const std::size_t> subset, Aggregate aggregate = Aggregate::average);

/// Sequential forward selection: grows the subset one scenario at a time,
/// always adding the scenario that maximizes tau (ties go to the lowest
/// index). Indices are reported in the order they were chosen.
SubsetSnapshot select_subset_sfs(const SystemSpec& spec, const TrainingSet& training,
                                 std::size_t k, Aggregate aggregate = Aggregate::average);

/// Sequential backward selection: starts from every scenario and drops the
/// one whose removal keeps tau highest until k remain.
SubsetSnapshot select_subset_sbs(const SystemSpec& spec, const TrainingSet& training,
                                 std::size_t k, Aggregate aggregate = Aggregate::average);

SubsetSnapshot select_subset(const SystemSpec& spec, const TrainingSet& training, std::size_t k,
                             SelectionMethod method, Aggregate aggregate = Aggregate::average);

/// Source of the scenario subset the explorer evaluates against, and sink
/// for the mappings it wants the selector to learn from.
class SubsetProvider {
 public:
  virtual ~SubsetProvider() = default;
  virtual std::shared_ptr<const SubsetSnapshot> snapshot() const = 0;
  virtual void offer(std::vector<Mapping> candidates) = 0;
};

/// Never changes its subset.
class FixedSubsetProvider final : public SubsetProvider {
 public:
  explicit FixedSubsetProvider(std::vector<std::size_t> indices);
  std::shared_ptr<const SubsetSnapshot> snapshot() const override { return snapshot_; }
  void offer(std::vector<Mapping>) override {}

 private:
  std::shared_ptr<const SubsetSnapshot> snapshot_;
};

struct SelectorOptions {
  std::size_t k = 1;
  SelectionMethod method = SelectionMethod::sfs;
  Aggregate aggregate = Aggregate::average;
  std::size_t training_capacity = 16;
  /// Pending candidate batches kept for the async selector; the oldest is
  /// dropped when full.
  std::size_t queue_capacity = 8;
  bool no_timing = false;
};

struct SelectorLogEntry {
  std::uint64_t version = 0;
  std::vector<std::size_t> indices;
  double tau = 0.0;
  std::size_t training_size = 0;
  std::uint64_t wall_ns = 0;
};

void write_selector_log(std::span<const SelectorLogEntry> log, const std::string& path);

/// Training-set upkeep plus subset selection; shared by both selector modes.
/// Not thread-safe on its own.
class SelectorCore {
 public:
  SelectorCore(const SystemSpec& spec, SelectorOptions options);

  /// Computes full-set fitness for unseen candidates, refreshes the training
  /// set and, once at least two mappings are known, publishes a new subset.
  void process(const std::vector<Mapping>& candidates);

  std::shared_ptr<const SubsetSnapshot> snapshot() const { return cell_.load(); }
  const TrainingSet& training() const noexcept { return training_; }
  std::vector<SelectorLogEntry> log() const;

 private:
  const SystemSpec& spec_;
  SelectorOptions options_;
  TrainingSet training_;
  SnapshotCell cell_;
  mutable std::mutex log_mutex_;
  std::vector<SelectorLogEntry> log_;
};

/// Runs selection inline on the caller's thread each time candidates are
/// offered, i.e. exactly once between explorer generations.
class SyncSubsetSelector final : public SubsetProvider {
 public:
  SyncSubsetSelector(const SystemSpec& spec, SelectorOptions options);
  std::shared_ptr<const SubsetSnapshot> snapshot() const override { return core_.snapshot(); }
  void offer(std::vector<Mapping> candidates) override { core_.process(candidates); }
  std::vector<SelectorLogEntry> log() const { return core_.log(); }
  const TrainingSet& training() const noexcept { return core_.training(); }

 private:
  SelectorCore core_;
};

/// Runs selection on its own thread, concurrently with the explorer.
/// Candidates arrive through a bounded queue.
class AsyncSubsetSelector final : public SubsetProvider {
 public:
  AsyncSubsetSelector(const SystemSpec& spec, SelectorOptions options);
  ~AsyncSubsetSelector() override;

  std::shared_ptr<const SubsetSnapshot> snapshot() const override { return core_.snapshot(); }
  void offer(std::vector<Mapping> candidates) override;

  /// Processes whatever is still queued, then stops the selector thread.
  void finish();
  std::vector<SelectorLogEntry> log() const { return core_.log(); }

 private:
  void run();

  SelectorCore core_;
  std::size_t queue_capacity_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::vector<Mapping>> queue_;
  bool stop_ = false;
  std::thread thread_;
};

std::string format_indices(std::span<const std::size_t> indices, char separator = ';');

}  // namespace sdse
