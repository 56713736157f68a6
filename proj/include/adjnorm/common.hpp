/*
 *   Copyright 2026 The adjnorm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file common.hpp
 *
 * Error types, exit codes, logging and the row-parallel loop helper shared
 * by every module.
 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace adjnorm {

/// Process exit status used by the command line tool.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid argument or contract violation by the caller.
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(what, ExitCode::usage) {}
};

/// Bad or missing configuration value.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::usage) {}
};

/// Problems with input data (missing files, empty inputs).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, ExitCode::data) {}
};

/// Malformed input line; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Theorem hypotheses (connectedness, dense cap) not met.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what, ExitCode::data) {}
};

/// NaN/Inf encountered during optimization.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, ExitCode::numerical) {}
};

namespace detail {
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
inline bool& quiet_flag() {
  static bool quiet = false;
  return quiet;
}
}  // namespace detail

inline void set_quiet(bool quiet) { detail::quiet_flag() = quiet; }

inline void log_warning(const std::string& msg) {
  if (detail::quiet_flag()) return;
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  std::cerr << "[adjnorm] warning: " << msg << '\n';
}

inline void log_info(const std::string& msg) {
  if (detail::quiet_flag()) return;
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  std::cerr << "[adjnorm] " << msg << '\n';
}

/// Worker count: ADJNORM_THREADS if set and positive, else hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("ADJNORM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/**
 * Runs fn(i) for i in [begin, end) over contiguous static chunks. Each index
 * is handled by exactly one worker, so results that only depend on i are
 * identical regardless of the worker count.
 */
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t min_chunk = 64) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, n / min_chunk));
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::size_t i = begin; i < std::min(end, begin + chunk); ++i) fn(i);
  for (auto& t : pool) t.join();
}

}  // namespace adjnorm
