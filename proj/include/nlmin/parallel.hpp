#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace nlmin {

/// Worker count: NONLOCAL_MIN_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(begin, end) over a fixed partition of [0, n). The partition
/// depends only on n, so any per-index results are identical for every
/// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (tree) summation; the reduction order depends only on the length.
double pairwise_sum(std::span<const double> values);

}  // namespace nlmin
