/**
 * @file parallel.hpp
 * @brief Index-parallel loop capped by the DERMA_THREADS environment variable
 */
#pragma once

#include <cstddef>
#include <functional>

namespace dermacolor {

/// Worker count: DERMA_THREADS if set and positive, else hardware concurrency.
unsigned worker_count() noexcept;

/// Calls body(i) for every i in [0, n). Results must be written to
/// per-index slots; the first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dermacolor
