#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "evdiff/tensor.hpp"

namespace evdiff {

// Deterministic generator: xoshiro256++ state seeded through splitmix64,
// normals via Box-Muller. The integer stream is bit-identical on every
// platform for a given seed; the normal transform inherits libm's rounding.
// Single-owner: not shareable across threads. Algorithm id: kRngAlgorithm
// in version.hpp.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Derive an independent child seed; used to fan work out across pairs or
    // chains while keeping the parent stream untouched by consumption order.
    std::uint64_t fork_seed(std::uint64_t index) const {
        std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        return splitmix64(x);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// i.i.d. standard normal tensor; advances rng by exactly ceil(n/2) Box-Muller
// pair draws plus buffering.
Tensor gaussian_sample(Rng& rng, const std::vector<int>& dims);

}  // namespace evdiff
