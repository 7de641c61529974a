#pragma once

namespace difd {

// Caps the worker count for the row-parallel loops. 0 restores the OpenMP
// default. All parallel loops write disjoint outputs and combine reductions
// serially, so results are bit-identical for every thread count.
void set_max_threads(int n);
int max_threads();

} // namespace difd
