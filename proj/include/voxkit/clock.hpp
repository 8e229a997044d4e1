#pragma once

#include <chrono>
#include <condition_variable>
#include <exception>
#include <future>
#include <mutex>
#include <stop_token>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <utility>

namespace voxkit {

// Monotonic time source, injected wherever durations are measured.
//
// Concurrency contract: a task spawned by a parent at time `start` calls
// enter(start) on its own thread before doing anything else; after joining,
// the parent calls advance_to(finish) with the instant it resumes. The real
// clock ignores both hooks; the fake clock uses them to give every thread
// its own virtual timeline so overlapping work is modelled exactly.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual double now() const = 0;  // seconds
  virtual void sleep_for(double seconds, std::stop_token stop = {}) = 0;
  virtual void enter(double start) { (void)start; }
  virtual void advance_to(double t) { (void)t; }
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }

  void sleep_for(double seconds, std::stop_token stop = {}) override {
    if (seconds <= 0) return;
    const auto span = std::chrono::duration<double>(seconds);
    if (!stop.stop_possible()) {
      std::this_thread::sleep_for(span);
      return;
    }
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, span, [] { return false; });
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

// Deterministic clock: sleeping advances the calling thread's virtual time
// instantly. Threads that never called enter() share the origin.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(double origin = 0.0) : origin_(origin) {}

  double now() const override {
    std::lock_guard lock(mu_);
    auto it = lanes_.find(std::this_thread::get_id());
    return it == lanes_.end() ? origin_ : it->second;
  }

  void sleep_for(double seconds, std::stop_token = {}) override {
    if (seconds <= 0) return;
    std::lock_guard lock(mu_);
    auto [it, inserted] = lanes_.try_emplace(std::this_thread::get_id(), origin_);
    it->second += seconds;
  }

  void enter(double start) override {
    std::lock_guard lock(mu_);
    lanes_[std::this_thread::get_id()] = start;
  }

  void advance_to(double t) override {
    std::lock_guard lock(mu_);
    auto [it, inserted] = lanes_.try_emplace(std::this_thread::get_id(), origin_);
    if (t > it->second) it->second = t;
  }

 private:
  mutable std::mutex mu_;
  double origin_;
  std::unordered_map<std::thread::id, double> lanes_;
};

// A unit of work on its own thread whose timeline starts at the spawner's
// current instant. Destruction requests stop and joins.
template <class T>
class Task {
 public:
  template <class F>
  Task(Clock& clock, F&& fn) {
    std::promise<T> promise;
    result_ = promise.get_future();
    const double start = clock.now();
    thread_ = std::jthread(
        [&clock, start, promise = std::move(promise),
         fn = std::forward<F>(fn)](std::stop_token stop) mutable {
          clock.enter(start);
          try {
            if constexpr (std::is_void_v<T>) {
              fn(stop);
              promise.set_value();
            } else {
              promise.set_value(fn(stop));
            }
          } catch (...) {
            promise.set_exception(std::current_exception());
          }
        });
  }

  Task(Task&&) noexcept = default;
  Task& operator=(Task&&) noexcept = default;

  T get() { return result_.get(); }
  void request_stop() { thread_.request_stop(); }

 private:
  std::future<T> result_;
  std::jthread thread_;  // declared last: joins before the future is destroyed
};

}  // namespace voxkit
