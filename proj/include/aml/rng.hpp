#pragma once

#include <array>
#include <cstdint>

namespace aml {

/// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw,
/// "Parallel random numbers: as easy as 1, 2, 3", SC'11). Every draw is a
/// pure function of (seed, stream, counter), so results cannot depend on the
/// order replications or subsamples are scheduled in.
///
/// The 128-bit Philox counter is laid out as {lo(counter), hi(counter),
/// lo(stream), hi(stream)} and the 64-bit key as {lo(seed), hi(seed)}.
/// Streams must stay below 2^48: the top 16 bits of the stream word are
/// reserved for bounded-draw rejection rounds.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t seed,
                                        std::uint64_t stream,
                                        std::uint64_t counter);

/// First 64 bits of the Philox block for (seed, stream, counter).
std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Uniform draw on the open interval (0,1); never returns 0 or 1.
double rng_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Exactly uniform draw on {0, ..., bound-1} (Lemire multiply-and-reject;
/// rejection rounds stay inside the same (stream, counter) key).
/// Requires 1 <= bound <= 2^48.
std::uint64_t rng_index(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t counter, std::uint64_t bound);

/// Standard normal draw by inversion of rng_unit.
double rng_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Unit-rate exponential draw, -log(rng_unit).
double rng_exponential(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Splits a seed into an independent sub-seed for a given purpose tag
/// (per-replication seeds, subsample plans, outlier streams, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

} // namespace aml
