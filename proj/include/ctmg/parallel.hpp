#pragma once

#include <cstddef>
#include <functional>

namespace ctmg {

// Process-wide worker budget for parallel_for. Degree 1 means fully sequential.
void set_parallel_degree(int degree);
int parallel_degree();

// Runs fn(i) for i in [0, n). Tasks are claimed dynamically by worker threads, so the
// schedule is nondeterministic; callers must write only to task-owned slots and perform
// any cross-task reduction afterwards in a fixed order. Nested calls run sequentially
// on the calling thread. Exceptions thrown by fn are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ctmg
