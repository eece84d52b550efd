#pragma once

// Counter-based random numbers (Philox4x32-10): every Brownian increment is a
// pure function of (seed, path_id, step), so paths are bit-reproducible under
// any parallel schedule.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stabilyze {

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
               std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

// One 128-bit block keyed by seed, counter = (step, path_id).
inline std::array<std::uint64_t, 2> philox_block(std::uint64_t seed, std::uint64_t path_id,
                                                 std::uint64_t step) {
    const auto out = philox4x32({std::uint32_t(step), std::uint32_t(step >> 32),
                                 std::uint32_t(path_id), std::uint32_t(path_id >> 32)},
                                {std::uint32_t(seed), std::uint32_t(seed >> 32)});
    return {std::uint64_t(out[0]) << 32 | out[1], std::uint64_t(out[2]) << 32 | out[3]};
}

inline double u64_to_open01(std::uint64_t x) {
    // (0,1): 53 significant bits, offset by half an ulp so 0 never occurs
    return (x >> 11) * 0x1p-53 + 0x1p-54;
}

// Two independent standard normals for (seed, path_id, step) via Box-Muller.
inline std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint64_t path_id,
                                           std::uint64_t step) {
    const auto b = philox_block(seed, path_id, step);
    const double u1 = u64_to_open01(b[0]), u2 = u64_to_open01(b[1]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

// One uniform in (0,1) for (seed, path_id, step); independent of gaussian_pair
// streams by keying the path id's top bit.
inline double uniform01(std::uint64_t seed, std::uint64_t path_id, std::uint64_t step) {
    return u64_to_open01(philox_block(seed, path_id | (1ull << 63), step)[0]);
}

}  // namespace stabilyze
