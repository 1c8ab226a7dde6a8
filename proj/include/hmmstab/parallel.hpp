#ifndef HMMSTAB_PARALLEL_HPP_
#define HMMSTAB_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace hmmstab {

// Runs body(i) for i in [0, count) on up to `threads` workers. Bodies must
// write only to their own slot. If several bodies throw, the exception of the
// lowest index is rethrown, so failures do not depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// 0 means hardware concurrency.
int resolve_threads(int requested);

}  // namespace hmmstab

#endif  // HMMSTAB_PARALLEL_HPP_
