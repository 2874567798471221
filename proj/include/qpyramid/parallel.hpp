#pragma once

namespace qpyramid::parallel {

// Worker count for OpenMP regions: min(requested or hardware, QPYRAMID_WORKERS).
int worker_count();
// 0 restores the default.
void set_worker_cap(int workers);

}  // namespace qpyramid::parallel
