#pragma once

#include <cstddef>
#include <functional>

namespace qcb {

/// Worker cap: QCB_LAB_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
/// Bodies must only write to disjoint, index-owned state.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Sum of term(i) over [0, count). Terms are accumulated in fixed-size chunks
/// whose partial sums are combined in chunk order, so the result does not
/// depend on the number of threads.
double deterministic_sum(std::size_t count, const std::function<double(std::size_t)>& term);

}  // namespace qcb
