#include "aml/rng.hpp"

#include <cmath>

#include "aml/errors.hpp"
#include "aml/special_functions.hpp"

namespace aml {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], const std::uint32_t k[2]) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
    std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
    c[0] = n0;
    c[1] = lo1;
    c[2] = n2;
    c[3] = lo0;
}

inline std::array<std::uint32_t, 4> philox_block(std::uint64_t seed,
                                                 std::uint64_t stream,
                                                 std::uint64_t counter) {
    std::uint32_t c[4] = {static_cast<std::uint32_t>(counter),
                          static_cast<std::uint32_t>(counter >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t k[2] = {static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32)};
    for (int r = 0; r < 10; ++r) {
        philox_round(c, k);
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return {c[0], c[1], c[2], c[3]};
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t counter) {
    return philox_block(seed, stream, counter);
}

std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    auto b = philox_block(seed, stream, counter);
    return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double rng_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    // 53 random bits plus a half-bit offset keeps the draw strictly inside (0,1).
    std::uint64_t x = rng_u64(seed, stream, counter);
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t rng_index(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t counter, std::uint64_t bound) {
    if (bound == 0 || bound > (1ull << 48))
        throw ConfigError("rng_index: bound must be in [1, 2^48]");
    // Rejection rounds occupy the reserved top 16 bits of the stream word.
    std::uint64_t threshold = (-bound) % bound;
    for (std::uint64_t round = 0;; ++round) {
        std::uint64_t x = rng_u64(seed, stream | (round << 48), counter);
        unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
}

double rng_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return inverse_normal_cdf(rng_unit(seed, stream, counter));
}

double rng_exponential(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return -std::log(rng_unit(seed, stream, counter));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    auto b = philox_block(seed, 0xA3C59AC2u, tag);
    return (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
}

} // namespace aml
