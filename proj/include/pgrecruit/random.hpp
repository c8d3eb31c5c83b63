#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pgrecruit
{

using Engine = std::mt19937_64;

/// SplitMix64 finalizer: a bijective mix of a 64-bit counter.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of substream (stream, index) under a root seed. Distinct inputs give
/// statistically independent engines; the mapping does not depend on how
/// runs are partitioned across workers.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

/// FNV-1a hash of an identifier, used to key per-centre substreams.
std::uint64_t hash_id(std::string_view id);

/// Applies f(i) for i in [0, n) over `workers` OpenMP threads (serially
/// without OpenMP). f must only write to per-index storage.
template <typename F>
void parallel_for(long n, int workers, F&& f)
{
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers > 0 ? workers : 1)
    for (long i = 0; i < n; ++i) f(i);
#else
    (void)workers;
    for (long i = 0; i < n; ++i) f(i);
#endif
}

}  // namespace pgrecruit
