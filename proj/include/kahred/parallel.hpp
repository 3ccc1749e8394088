#pragma once

// Point-parallel evaluation. Results are written by index, so the output (and
// any serial reduction over it) is identical for both execution modes.

#include <cstddef>
#include <exception>
#include <vector>

namespace kahred {

enum class Execution { Serial, Parallel };

template <class T, class Fn>
std::vector<T> map_points(std::size_t count, Fn&& fn, Execution ex = Execution::Parallel) {
  std::vector<T> out(count);
  if (ex == Execution::Serial) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(count);
  const long long n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  // lowest index wins, as in a serial run
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace kahred
