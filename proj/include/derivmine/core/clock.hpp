#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <string>

namespace derivmine {

using TimePoint = std::chrono::system_clock::time_point;

class CancelToken;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
  // Returns early when the token is cancelled.
  virtual void sleep_for(std::chrono::milliseconds d, const CancelToken* cancel = nullptr) = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override { return std::chrono::system_clock::now(); }
  void sleep_for(std::chrono::milliseconds d, const CancelToken* cancel = nullptr) override;
};

// Test clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start = TimePoint{std::chrono::seconds{1700000000}}) : now_(start) {}

  TimePoint now() const override {
    std::lock_guard lock(mu_);
    return now_;
  }
  void advance(std::chrono::milliseconds d) {
    std::lock_guard lock(mu_);
    now_ += d;
  }
  void set(TimePoint t) {
    std::lock_guard lock(mu_);
    now_ = t;
  }
  // Sleeping advances the clock instantly.
  void sleep_for(std::chrono::milliseconds d, const CancelToken* = nullptr) override { advance(d); }

 private:
  mutable std::mutex mu_;
  TimePoint now_;
};

// UTC, millisecond precision: 2024-01-02T03:04:05.678Z
std::string format_timestamp(TimePoint t);

// Cooperative cancellation flag shared between the CLI signal handler and
// long-running stages.
class CancelToken {
 public:
  void cancel() noexcept { flag_.store(true, std::memory_order_relaxed); }
  bool cancelled() const noexcept { return flag_.load(std::memory_order_relaxed); }

 private:
  std::atomic<bool> flag_{false};
};

}  // namespace derivmine
