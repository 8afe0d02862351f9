#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "lrckatz/error.hpp"

namespace lrckatz {

/// Runs body(i) for i in [0, count) on up to `workers` threads (0 or 1 runs
/// inline). Items are claimed dynamically; the first exception is rethrown
/// after all threads join.
template <class Body>
void parallel_for(Index count, unsigned workers, Body&& body) {
  if (workers <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned nthreads = static_cast<unsigned>(std::min<Index>(workers, count));
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&]() {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) threads.emplace_back(run);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lrckatz
