#pragma once

#include <cstdint>
#include <span>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace heston::reduce {

// Paths are processed in fixed chunks of this size; the decomposition depends
// only on the total count, never on the thread count, which is what makes the
// parallel results bit-identical to the serial reference.
inline constexpr std::int64_t kChunk = 4096;

// Tree summation with a reduction shape fixed by xs.size().
double pairwise_sum(std::span<const double> xs);

inline std::int64_t chunk_count(std::int64_t n) { return (n + kChunk - 1) / kChunk; }

int resolve_threads(int requested);  // <= 0 selects all hardware threads

// Runs fn(chunk_index, begin, end) over contiguous chunks of [0, n).
// threads == 1 is the plain serial loop kept as the reference
// implementation; any other value dispatches the same chunks to OpenMP.
template <class Fn>
void for_each_chunk(std::int64_t n, int threads, Fn&& fn) {
  const std::int64_t chunks = chunk_count(n);
  if (threads == 1) {
    for (std::int64_t c = 0; c < chunks; ++c) {
      const std::int64_t begin = c * kChunk;
      fn(c, begin, begin + kChunk < n ? begin + kChunk : n);
    }
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t begin = c * kChunk;
    fn(c, begin, begin + kChunk < n ? begin + kChunk : n);
  }
}

}  // namespace heston::reduce
