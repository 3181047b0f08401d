#pragma once
#include <cstdint>
#include <functional>

namespace pmt {

// worker cap shared by all sweeps; 0 means hardware_concurrency
void set_thread_cap(int n);
int thread_cap();

// fn(i) for i in [0, n); work is pulled from an atomic counter, so callers must
// write results into per-index slots and reduce in index order afterwards if
// they need a deterministic sum
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

} // namespace pmt
