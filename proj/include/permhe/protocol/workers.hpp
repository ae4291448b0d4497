// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace permhe::protocol {

/// Fork-join range runner. Each call spawns up to threads-1 helpers that
/// pull indices from a shared counter; the caller works too.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads = 1) : threads_(std::max<std::size_t>(1, threads)) {}

  std::size_t size() const { return threads_; }

  template <class F>
  void parallel_for(std::size_t count, F&& fn) const {
    const std::size_t helpers = std::min(threads_, count) > 0 ? std::min(threads_, count) - 1 : 0;
    if (helpers == 0) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto body = [&] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(helpers);
    for (std::size_t t = 0; t < helpers; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

 private:
  std::size_t threads_;
};

}  // namespace permhe::protocol
