#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace waitflow {

using Rng = std::mt19937_64;

//! Seed for a named substream ("flow-sim", "wait-sim", "chain", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Rng{derive_seed(seed, stream, index)};
}

//! Normal draw; sd == 0 returns the mean exactly.
double draw_normal(Rng& rng, double mean, double sd);
//! Gamma draw with shape/rate parameterization (mean shape / rate).
double draw_gamma(Rng& rng, double shape, double rate);
double draw_uniform(Rng& rng);

} // namespace waitflow
