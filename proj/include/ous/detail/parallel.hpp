#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ous {

template <class Body>
void parallel_chunks(std::int64_t n, std::int64_t chunk, unsigned threads, Body&& body) {
  if (n <= 0) return;
  const std::int64_t n_chunks = (n + chunk - 1) / chunk;
  const auto workers = static_cast<std::int64_t>(
      std::min<std::int64_t>(resolve_threads(threads), n_chunks));

  auto run_one = [&](std::int64_t c) {
    const std::int64_t begin = c * chunk;
    body(c, begin, std::min(n, begin + chunk));
  };
  if (workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_one(c);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::int64_t c = next++; c < n_chunks; c = next++) {
          try {
            run_one(c);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_chunks;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ous
