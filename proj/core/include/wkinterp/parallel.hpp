#ifndef WKINTERP_PARALLEL_HPP
#define WKINTERP_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace wkinterp {

/// Worker count: WKINTERP_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs fn(begin, end) over disjoint chunks of [0, n). Chunks write to disjoint
/// output slots, so results are deterministic regardless of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace wkinterp

#endif
