#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <stdexcept>

namespace sdse {

/// Counted, reusable rendezvous point. Each completed cycle bumps a
/// generation number; waiters sleep until the generation they arrived in has
/// ended, so a fast thread re-arriving for the next cycle can never be counted
/// towards (or release) the previous one.
class CyclicBarrier {
 public:
  explicit CyclicBarrier(std::size_t parties) : parties_(parties), waiting_(0) {
    if (parties == 0) throw std::invalid_argument("barrier needs at least one party");
  }

  CyclicBarrier(const CyclicBarrier&) = delete;
  CyclicBarrier& operator=(const CyclicBarrier&) = delete;

  void arrive_and_wait() {
    std::unique_lock lock(mutex_);
    const std::uint64_t gen = generation_;
    if (++waiting_ == parties_) {
      complete_cycle();
      return;
    }
    cv_.wait(lock, [&] { return generation_ != gen; });
  }

  /// Arrives for the current cycle and permanently leaves the party.
  void arrive_and_drop() {
    std::lock_guard lock(mutex_);
    if (parties_ == 0) throw std::logic_error("barrier has no parties left");
    --parties_;
    if (parties_ > 0 && waiting_ == parties_) complete_cycle();
  }

  std::uint64_t generation() const {
    std::lock_guard lock(mutex_);
    return generation_;
  }

 private:
  // Requires mutex_ held.
  void complete_cycle() {
    waiting_ = 0;
    ++generation_;
    cv_.notify_all();
  }

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t parties_;
  std::size_t waiting_;
  std::uint64_t generation_ = 0;
};

}  // namespace sdse
