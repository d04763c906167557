// Copyright 2026 The nattr Authors.
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

#ifndef NATTR_PARALLEL_HPP
#define NATTR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "nattr/tensor.hpp"

namespace nattr {

/// Worker count: NATTR_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("NATTR_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Each index runs
/// exactly once; callers write results into slots keyed by i so the outcome
/// does not depend on scheduling. The first exception is rethrown.
inline void parallel_for(Index count, const std::function<void(Index)>& fn, int threads = worker_count()) {
  threads = static_cast<int>(std::min<Index>(std::max(threads, 1), std::max<Index>(count, 1)));
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nattr

#endif  // NATTR_PARALLEL_HPP
