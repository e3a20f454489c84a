// Copyright 2026 The goalinfer Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOALINFER_PARALLEL_HPP_
#define GOALINFER_PARALLEL_HPP_

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace goalinfer {

// Runs body(i) for i in [0, n). Each index is an independent work unit and
// writes only to its own slot, so the result is identical to a serial loop
// regardless of scheduling. Exceptions are captured and rethrown once.
template <typename Body>
void parallel_for(std::size_t n, const Body& body, unsigned max_threads = 0) {
  unsigned hw = std::thread::hardware_concurrency();
  unsigned n_threads = max_threads ? std::min(max_threads, hw ? hw : 1u)
                                   : (hw ? hw : 1u);
  if (n_threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  std::vector<std::thread> workers;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  workers.reserve(n_threads - 1);
  for (unsigned t = 1; t < n_threads; ++t) workers.emplace_back(run);
  run();
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace goalinfer

#endif  // GOALINFER_PARALLEL_HPP_
