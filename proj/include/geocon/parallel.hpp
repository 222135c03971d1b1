// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "geocon/common.hpp"

namespace geocon {

// Worker count: GEOCON_THREADS caps it, hardware concurrency is the default.
inline std::size_t worker_count() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("GEOCON_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
      else n = 1;
    } catch (const std::exception&) {
      throw config_error(std::string("GEOCON_THREADS: bad value '") + env + "'");
    }
  }
  return std::min<std::size_t>(n, 64);
}

// Runs `compute(item)` for item = 0..n-1 with at most `width` concurrent
// workers, then `post(item)` serially in item order after each wave.
// Results therefore combine in a fixed order for any worker width, which
// keeps training bit-deterministic regardless of GEOCON_THREADS.
inline void parallel_waves(std::size_t n, std::size_t width,
                           const std::function<void(std::size_t)>& compute,
                           const std::function<void(std::size_t)>& post) {
  width = std::max<std::size_t>(1, width);
  std::exception_ptr first_error;
  std::mutex error_mutex;

  for (std::size_t start = 0; start < n; start += width) {
    const std::size_t end = std::min(n, start + width);
    if (end - start == 1 || width == 1) {
      for (std::size_t i = start; i < end; ++i) compute(i);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        threads.emplace_back([&, i] {
          try {
            compute(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        });
      }
      for (std::thread& t : threads) t.join();
      if (first_error) std::rethrow_exception(first_error);
    }
    if (post)
      for (std::size_t i = start; i < end; ++i) post(i);
  }
}

}  // namespace geocon
