#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cwpolar {

inline unsigned& default_threads() {
  static unsigned n = std::max(1U, std::thread::hardware_concurrency());
  return n;
}

// Runs fn(chunk) for chunk in [0, num_chunks) on up to `threads` workers.
// Callers write into per-chunk slots and reduce in chunk order, so results do
// not depend on the thread count.
template <typename Fn>
void parallel_chunks(std::size_t num_chunks, unsigned threads, Fn&& fn) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(num_chunks)));
  if (threads <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < num_chunks; c = next++) {
        try {
          fn(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cwpolar
