#pragma once

#include <cstdint>
#include <string_view>

namespace climrisk {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// 64-bit FNV-1a, used to turn firm ids into stable stream keys.
std::uint64_t stream_key(std::string_view name) noexcept;

// Counter-style seed for the substream (path, key) under a master seed.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t path, std::uint64_t key) noexcept;

// xoshiro256++. Normals come from the Boost ziggurat fed by this engine,
// so draws do not depend on the standard library vendor.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next() noexcept;
    double uniform() noexcept;  // in (0, 1)
    double normal() noexcept;
    // Same sequence as repeated normal() calls.
    void fill_normal(double* out, std::size_t n) noexcept;
    double exponential() noexcept;
    // Poisson by sequential inversion; large means are split into pieces.
    std::uint32_t poisson(double mean) noexcept;

private:
    std::uint64_t s_[4];
};

}  // namespace climrisk
