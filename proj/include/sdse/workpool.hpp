#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sdse/cyclic_barrier.hpp"
#include "sdse/error.hpp"

namespace sdse {

enum class QueueKind { lockless, locked };

inline std::string_view to_string(QueueKind kind) noexcept;
inline QueueKind parse_queue_kind(std::string_view text);

/// Result slot of one job. A job that throws leaves `value` empty and the
/// exception message in `error`; the batch itself still completes.
template <typename R>
struct JobResult {
  std::optional<R> value;
  std::string error;

  bool ok() const noexcept { return value.has_value(); }
};

struct PoolOptions {
  /// Per-job execution counters and phase checks, for property tests.
  bool instrument = false;
  /// Time each job body with a monotonic clock and sum per worker.
  bool measure_busy = false;
  /// Called with the worker index before each worker thread is spawned. If it
  /// throws, construction is abandoned as if thread creation had failed.
  std::function<void(std::size_t)> before_spawn;
};

/// Observations from the most recent batch.
struct BatchStats {
  /// Thread identity occupying each worker slot during the batch.
  std::vector<std::thread::id> worker_ids;
  std::uint64_t busy_ns_total = 0;
  /// Times each job index was executed (instrumented pools only).
  std::vector<std::uint32_t> exec_counts;
  /// Jobs observed outside the main thread's open phase (instrumented only).
  std::uint64_t phase_violations = 0;
};

/// Persistent worker threads that execute whole batches of jobs. One thread
/// submits at a time; submit_batch returns when every job has run.
template <typename Job, typename Result>
class BatchRunner {
 public:
  using Executor = std::function<Result(const Job&)>;

  virtual ~BatchRunner() = default;

  /// Result i belongs to job i. Throws PoolError("batch in flight") when
  /// another submission or shutdown is in progress and PoolError("pool
  /// closed") after shutdown.
  virtual std::vector<JobResult<Result>> submit_batch(std::vector<Job> jobs) = 0;

  /// Stops and joins every worker. Idempotent.
  virtual void shutdown() = 0;

  virtual QueueKind kind() const noexcept = 0;
  virtual std::size_t worker_count() const noexcept = 0;
  /// Worker identities recorded while the pool was being initialized.
  virtual std::vector<std::thread::id> initial_worker_ids() const = 0;
  virtual BatchStats last_batch_stats() const = 0;
};

namespace detail {

class BatchGuard {
 public:
  explicit BatchGuard(std::atomic<bool>& flag) : flag_(flag) {
    if (flag_.exchange(true, std::memory_order_acquire)) throw PoolError("batch in flight");
  }
  ~BatchGuard() { flag_.store(false, std::memory_order_release); }
  BatchGuard(const BatchGuard&) = delete;
  BatchGuard& operator=(const BatchGuard&) = delete;

 private:
  std::atomic<bool>& flag_;
};

struct alignas(64) WorkerSlot {
  std::thread::id init_id;
  std::thread::id batch_id;
  std::uint64_t busy_ns = 0;
};

enum class Phase : int { closed, open };

/// State and job execution shared by both pool flavours.
template <typename Job, typename Result>
class PoolBase : public BatchRunner<Job, Result> {
 public:
  using Executor = typename BatchRunner<Job, Result>::Executor;

  std::size_t worker_count() const noexcept override { return workers_; }

  std::vector<std::thread::id> initial_worker_ids() const override {
    std::vector<std::thread::id> ids;
    for (const auto& s : slots_) ids.push_back(s.init_id);
    return ids;
  }

  BatchStats last_batch_stats() const override { return stats_; }

 protected:
  PoolBase(std::size_t workers, Executor executor, PoolOptions options)
      : executor_(std::move(executor)),
        options_(std::move(options)),
        workers_(workers == 0 ? throw std::invalid_argument("worker count must be >= 1")
                              : workers),
        slots_(workers) {}

  // Submitting thread, while no worker touches the batch.
  void load_batch(std::vector<Job> jobs) {
    jobs_ = std::move(jobs);
    results_.clear();
    results_.resize(jobs_.size());
    if (options_.instrument) {
      counts_ = std::make_unique<std::atomic<std::uint32_t>[]>(jobs_.size());
      for (std::size_t i = 0; i < jobs_.size(); ++i) counts_[i].store(0, std::memory_order_relaxed);
      phase_violations_.store(0, std::memory_order_relaxed);
    }
    for (auto& s : slots_) s.busy_ns = 0;
  }

  // Submitting thread, after every worker has finished the batch.
  std::vector<JobResult<Result>> unload_batch() {
    BatchStats stats;
    for (const auto& s : slots_) {
      stats.worker_ids.push_back(s.batch_id);
      stats.busy_ns_total += s.busy_ns;
    }
    if (options_.instrument) {
      stats.exec_counts.resize(jobs_.size());
      for (std::size_t i = 0; i < jobs_.size(); ++i) {
        stats.exec_counts[i] = counts_[i].load(std::memory_order_relaxed);
      }
      stats.phase_violations = phase_violations_.load(std::memory_order_relaxed);
    }
    stats_ = std::move(stats);
    jobs_.clear();
    counts_.reset();
    return std::move(results_);
  }

  void run_job(std::size_t worker, std::size_t index) {
    if (options_.instrument) {
      counts_[index].fetch_add(1, std::memory_order_relaxed);
      if (phase_.load(std::memory_order_acquire) != Phase::open) {
        phase_violations_.fetch_add(1, std::memory_order_relaxed);
      }
    }
    const auto t0 = options_.measure_busy ? std::chrono::steady_clock::now()
                                          : std::chrono::steady_clock::time_point{};
    auto& slot = results_[index];
    try {
      slot.value.emplace(executor_(jobs_[index]));
    } catch (const std::exception& e) {
      slot.error = e.what();
    } catch (...) {
      slot.error = "unknown error";
    }
    if (options_.measure_busy) {
      slots_[worker].busy_ns += static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                               t0)
              .count());
    }
  }

  void spawn_workers(const std::function<void(std::size_t)>& body) {
    for (std::size_t w = 0; w < workers_; ++w) {
      if (options_.before_spawn) options_.before_spawn(w);
      threads_.emplace_back(body, w);
    }
  }

  void join_workers() {
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
  }

  Executor executor_;
  PoolOptions options_;
  const std::size_t workers_;

  std::vector<Job> jobs_;
  std::vector<JobResult<Result>> results_;
  std::vector<WorkerSlot> slots_;
  std::vector<std::thread> threads_;

  std::atomic<bool> in_flight_{false};
  bool closed_ = false;  // guarded by in_flight_

  std::atomic<Phase> phase_{Phase::closed};
  std::unique_ptr<std::atomic<std::uint32_t>[]> counts_;
  std::atomic<std::uint64_t> phase_violations_{0};
  BatchStats stats_;
};

}  // namespace detail

/// Lock-free batch work pool. Workers are created once and rendezvous at three
/// barriers:
///
///   Init  - every worker has initialized its slot; passed once.
///   Start - the submitting thread has filled the queue; workers start pulling.
///   End   - the queue is drained; the submitter may read the results.
///
/// Jobs are handed out by atomically incrementing a shared cursor and
/// comparing the previous value against the index of the last job. The cursor
/// may overshoot the end by up to the worker count.
template <typename Job, typename Result>
class WorkPool final : public detail::PoolBase<Job, Result> {
  using Base = detail::PoolBase<Job, Result>;

 public:
  using Executor = typename Base::Executor;

  WorkPool(std::size_t workers, Executor executor, PoolOptions options = {})
      : Base(workers, std::move(executor), std::move(options)),
        init_(workers + 1),
        start_(workers + 1),
        end_(workers + 1) {
    try {
      this->spawn_workers([this](std::size_t w) { worker_main(w); });
    } catch (...) {
      // Release whoever already started, then let them observe the flag.
      shutdown_.store(true, std::memory_order_relaxed);
      for (std::size_t i = this->threads_.size(); i < this->workers_; ++i) init_.arrive_and_drop();
      init_.arrive_and_wait();
      this->join_workers();
      throw;
    }
    init_.arrive_and_wait();
  }

  ~WorkPool() override {
    try {
      shutdown();
    } catch (...) {
    }
  }

  WorkPool(const WorkPool&) = delete;
  WorkPool& operator=(const WorkPool&) = delete;

  QueueKind kind() const noexcept override { return QueueKind::lockless; }

  std::vector<JobResult<Result>> submit_batch(std::vector<Job> jobs) override {
    detail::BatchGuard guard(this->in_flight_);
    if (this->closed_) throw PoolError("pool closed");

    // Workers are parked at Start, so the queue can be refilled without locks.
    const auto count = static_cast<std::int64_t>(jobs.size());
    this->load_batch(std::move(jobs));
    cur_.store(0, std::memory_order_relaxed);
    last_.store(count - 1, std::memory_order_relaxed);
    this->phase_.store(detail::Phase::open, std::memory_order_release);

    start_.arrive_and_wait();
    end_.arrive_and_wait();

    this->phase_.store(detail::Phase::closed, std::memory_order_release);
    return this->unload_batch();
  }

  void shutdown() override {
    detail::BatchGuard guard(this->in_flight_);
    if (this->closed_) return;
    shutdown_.store(true, std::memory_order_relaxed);
    start_.arrive_and_wait();
    this->join_workers();
    this->closed_ = true;
  }

  /// Claims the next job index, or nullopt once the queue is exhausted.
  ///
  /// Ordering: the job vector, result slots and `last_` are written before
  /// the submitter arrives at Start, and each worker leaves Start through the
  /// barrier mutex, so those writes happen-before the first fetch. Result
  /// writes likewise happen-before the submitter leaves End. The cursor RMW
  /// therefore only has to be atomic; it is acq_rel anyway so that claiming
  /// an index also orders against the previous claimant without relying on
  /// the barrier alone.
  std::optional<std::size_t> fetch_job() noexcept {
    const std::int64_t index = cur_.fetch_add(1, std::memory_order_acq_rel);
    if (index <= last_.load(std::memory_order_relaxed)) return static_cast<std::size_t>(index);
    return std::nullopt;
  }

 private:
  void worker_main(std::size_t w) {
    this->slots_[w].init_id = std::this_thread::get_id();
    this->slots_[w].batch_id = this->slots_[w].init_id;
    init_.arrive_and_wait();
    if (shutdown_.load(std::memory_order_relaxed)) return;

    for (;;) {
      start_.arrive_and_wait();
      if (shutdown_.load(std::memory_order_relaxed)) return;
      this->slots_[w].batch_id = std::this_thread::get_id();
      while (auto index = fetch_job()) this->run_job(w, *index);
      end_.arrive_and_wait();
    }
  }

  CyclicBarrier init_;
  CyclicBarrier start_;
  CyclicBarrier end_;
  alignas(64) std::atomic<std::int64_t> cur_{0};
  alignas(64) std::atomic<std::int64_t> last_{-1};
  std::atomic<bool> shutdown_{false};
};

/// Reference queue: one mutex around the cursor and a condition variable that
/// workers block on while no work is available. Same contract as WorkPool.
template <typename Job, typename Result>
class LockedPool final : public detail::PoolBase<Job, Result> {
  using Base = detail::PoolBase<Job, Result>;

 public:
  using Executor = typename Base::Executor;

  LockedPool(std::size_t workers, Executor executor, PoolOptions options = {})
      : Base(workers, std::move(executor), std::move(options)), init_(workers + 1) {
    try {
      this->spawn_workers([this](std::size_t w) { worker_main(w); });
    } catch (...) {
      {
        std::lock_guard lock(mutex_);
        shutdown_ = true;
      }
      for (std::size_t i = this->threads_.size(); i < this->workers_; ++i) init_.arrive_and_drop();
      init_.arrive_and_wait();
      this->join_workers();
      throw;
    }
    init_.arrive_and_wait();
  }

  ~LockedPool() override {
    try {
      shutdown();
    } catch (...) {
    }
  }

  LockedPool(const LockedPool&) = delete;
  LockedPool& operator=(const LockedPool&) = delete;

  QueueKind kind() const noexcept override { return QueueKind::locked; }

  std::vector<JobResult<Result>> submit_batch(std::vector<Job> jobs) override {
    detail::BatchGuard guard(this->in_flight_);
    if (this->closed_) throw PoolError("pool closed");

    std::unique_lock lock(mutex_);
    const std::size_t count = jobs.size();
    this->load_batch(std::move(jobs));
    next_ = 0;
    done_ = 0;
    end_ = count;
    this->phase_.store(detail::Phase::open, std::memory_order_release);
    work_cv_.notify_all();
    done_cv_.wait(lock, [&] { return done_ == end_; });
    this->phase_.store(detail::Phase::closed, std::memory_order_release);
    next_ = end_ = done_ = 0;
    return this->unload_batch();
  }

  void shutdown() override {
    detail::BatchGuard guard(this->in_flight_);
    if (this->closed_) return;
    {
      std::lock_guard lock(mutex_);
      shutdown_ = true;
    }
    work_cv_.notify_all();
    this->join_workers();
    this->closed_ = true;
  }

 private:
  void worker_main(std::size_t w) {
    this->slots_[w].init_id = std::this_thread::get_id();
    this->slots_[w].batch_id = this->slots_[w].init_id;
    init_.arrive_and_wait();

    std::unique_lock lock(mutex_);
    for (;;) {
      work_cv_.wait(lock, [&] { return shutdown_ || next_ < end_; });
      if (shutdown_) return;
      const std::size_t index = next_++;
      this->slots_[w].batch_id = std::this_thread::get_id();
      lock.unlock();
      this->run_job(w, index);
      lock.lock();
      if (++done_ == end_) done_cv_.notify_one();
    }
  }

  CyclicBarrier init_;
  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::size_t next_ = 0;
  std::size_t end_ = 0;
  std::size_t done_ = 0;
  bool shutdown_ = false;
};

template <typename Job, typename Result>
std::unique_ptr<BatchRunner<Job, Result>> make_batch_runner(
    QueueKind kind, std::size_t workers, typename BatchRunner<Job, Result>::Executor executor,
    PoolOptions options = {}) {
  if (kind == QueueKind::locked) {
    return std::make_unique<LockedPool<Job, Result>>(workers, std::move(executor),
                                                     std::move(options));
  }
  return std::make_unique<WorkPool<Job, Result>>(workers, std::move(executor), std::move(options));
}

/// One-shot run of `jobs` through a fresh LockedPool.
template <typename Job, typename Result>
std::vector<JobResult<Result>> locked_queue_reference(
    std::size_t workers, typename BatchRunner<Job, Result>::Executor executor,
    std::vector<Job> jobs) {
  LockedPool<Job, Result> pool(workers, std::move(executor));
  auto results = pool.submit_batch(std::move(jobs));
  pool.shutdown();
  return results;
}

inline std::string_view to_string(QueueKind kind) noexcept {
  return kind == QueueKind::locked ? "locked" : "lockless";
}

inline QueueKind parse_queue_kind(std::string_view text) {
  if (text == "lockless") return QueueKind::lockless;
  if (text == "locked") return QueueKind::locked;
  throw std::invalid_argument("unknown queue kind '" + std::string(text) + "'");
}

}  // namespace sdse
