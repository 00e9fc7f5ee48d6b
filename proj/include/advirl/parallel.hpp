#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace advirl {

// Runs body(chunk) for chunk in [0, n_chunks) across hardware threads. Each
// chunk must write only to its own outputs; callers that reduce do so in
// chunk order afterwards, so results never depend on the thread count.
template <typename Body>
void parallel_chunks(std::size_t n_chunks, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(n_chunks, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < n_chunks; c += workers) body(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace advirl
