#include <waitflow/rng.hpp>

namespace waitflow {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
    // FNV-1a over the stream name, then mixed with the seed and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed ^ h) + index);
}

double draw_normal(Rng& rng, double mean, double sd) {
    if (sd == 0.0) {
        return mean;
    }
    return std::normal_distribution<double>{mean, sd}(rng);
}

double draw_gamma(Rng& rng, double shape, double rate) {
    return std::gamma_distribution<double>{shape, 1.0 / rate}(rng);
}

double draw_uniform(Rng& rng) { return std::uniform_real_distribution<double>{0.0, 1.0}(rng); }

} // namespace waitflow
