#pragma once

#include <cstddef>
#include <functional>

namespace stackreg {

/// Runs fn(0..count-1) on up to `threads` workers (<= 0 means hardware
/// concurrency). Work items must write to disjoint outputs. If any item
/// throws, the exception from the lowest index is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

int resolve_thread_count(int requested);

}  // namespace stackreg
