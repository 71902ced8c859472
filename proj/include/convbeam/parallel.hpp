// Copyright 2026 The convbeam Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace convbeam {

/// Number of worker threads used by the per-frequency loops. 0 means "read
/// CONVBEAM_THREADS, else 1".
class ThreadCount {
 public:
  ThreadCount() = default;
  explicit ThreadCount(unsigned n) : n_(n) {}

  unsigned resolve() const {
    if (n_ > 0) return n_;
    if (const char* env = std::getenv("CONVBEAM_THREADS")) {
      try {
        const int v = std::stoi(env);
        if (v > 0) return static_cast<unsigned>(v);
      } catch (const std::exception&) {
      }
    }
    return 1;
  }

 private:
  unsigned n_ = 0;
};

/// Runs fn(i) for i in [0, count). Each index is handled by exactly one
/// thread with a static contiguous partition, so per-index results never
/// depend on the thread count. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, ThreadCount threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads.resolve()), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace convbeam
