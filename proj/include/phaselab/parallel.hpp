#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace phaselab {

/// Worker count used by data-parallel loops. 1 runs everything inline.
void set_thread_count(int threads);
int thread_count();

/// Fixed chunk width for reductions. Partial sums are formed per chunk and
/// combined in chunk order, so results do not depend on the thread count.
inline constexpr std::size_t kChunk = 4096;

/// Calls body(begin, end) over [0, n) split into kChunk-sized pieces.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of body(begin, end) over chunks, accumulated in chunk order.
double chunked_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& body);

/// Runs task(i) for i in [0, count), one task per worker at a time.
void parallel_tasks(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace phaselab
