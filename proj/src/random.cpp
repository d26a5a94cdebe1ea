#include "climrisk/random.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>

namespace climrisk {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::string_view name) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t path, std::uint64_t key) noexcept {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s) ^ path;
    std::uint64_t b = splitmix64(a) ^ key;
    return splitmix64(b);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
    for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept {
    // 53 random bits, offset by half a unit so 0 and 1 are excluded.
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

struct EngineRef {
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    Rng& rng;
    result_type operator()() noexcept { return rng.next(); }
};

}  // namespace

double Rng::normal() noexcept {
    EngineRef e{*this};
    return boost::random::normal_distribution<double>{}(e);
}

void Rng::fill_normal(double* out, std::size_t n) noexcept {
    EngineRef e{*this};
    boost::random::normal_distribution<double> nd;
    for (std::size_t i = 0; i < n; ++i) out[i] = nd(e);
}

double Rng::exponential() noexcept { return -std::log(uniform()); }

std::uint32_t Rng::poisson(double mean) noexcept {
    if (!(mean > 0.0)) return 0;
    std::uint32_t total = 0;
    while (mean > 0.0) {
        const double piece = std::min(mean, 20.0);
        mean -= piece;
        double p = std::exp(-piece), cdf = p;
        const double u = uniform();
        std::uint32_t k = 0;
        while (u > cdf && k < 400) {
            ++k;
            p *= piece / k;
            cdf += p;
        }
        total += k;
    }
    return total;
}

}  // namespace climrisk
