#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nlerg {

/// Splits [0, count) into contiguous chunks and runs body(begin, end) on up to
/// `workers` threads. The first exception thrown by any chunk is rethrown.
template <typename Body>
void parallel_chunks(std::size_t count, unsigned workers, Body&& body) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    body(std::size_t{0}, count);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(workers, count);
  const std::size_t chunk = (count + nthreads - 1) / nthreads;
  std::vector<std::exception_ptr> errors(nthreads);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t w = 0; w < nthreads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, &errors, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// max_i fn(i) over [0, count). Max is order-independent, so the result does
/// not depend on the worker count.
template <typename Fn>
double parallel_max(std::size_t count, unsigned workers, double init, Fn&& fn) {
  // Same chunking as parallel_chunks, so begin / chunk indexes the worker.
  const std::size_t nthreads =
      std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1));
  std::vector<double> partial(nthreads, init);
  const std::size_t chunk = count == 0 ? 1 : (count + nthreads - 1) / nthreads;
  parallel_chunks(count, workers, [&](std::size_t begin, std::size_t end) {
    double best = init;
    for (std::size_t i = begin; i < end; ++i) best = std::max(best, fn(i));
    partial[begin / chunk] = best;
  });
  return *std::max_element(partial.begin(), partial.end());
}

}  // namespace nlerg
