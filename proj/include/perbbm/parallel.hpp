#pragma once

// Trial-level parallelism. Every trial draws from its own keyed stream, so the
// serial and OpenMP paths produce identical results.

#include <cstddef>
#include <exception>

namespace perbbm {

enum class Exec { serial, parallel };

/// Calls f(i) for i in [0, n). Exceptions thrown by any call are rethrown
/// (the first one caught) after the loop.
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(perbbm_for_each_index)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace perbbm
