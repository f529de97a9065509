#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace kinefp {

/// Worker count used by field-level loops. Resolution order: value set by
/// set_thread_count (CLI --threads), else KINEFP_THREADS, else 2.
int thread_count();
void set_thread_count(int n);

/// Static-partition parallel loop over [0, n). Chunks are disjoint, so
/// writes to distinct indices need no synchronization and results are
/// deterministic. Reductions must stay serial.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// FNV-1a 64-bit hash; stable across runs and platforms.
std::uint64_t fnv1a(const std::string& bytes);

/// Least-squares fit of y = a + b x; returns {a, b}.
std::pair<double, double> linear_fit(const std::vector<double>& x,
                                     const std::vector<double>& y);

}  // namespace kinefp
