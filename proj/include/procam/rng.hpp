// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "procam/math.hpp"

namespace procam {

// splitmix64-seeded xoshiro256** — results are identical on every platform,
// unlike the std:: distributions.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t x = seed;
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            si = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        uint64_t r = rotl(s_[1] * 5, 7) * 9;
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    // Uniform in [0, 1).
    real uniform() { return (next_u64() >> 11) * 0x1.0p-53; }
    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

    Vec3 unit_vector() {
        real z = uniform(-1, 1);
        real phi = uniform(0, 2 * M_PI);
        real r = std::sqrt(std::max(real(0), 1 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    // Child stream for parallel work, decorrelated by index.
    Rng fork(uint64_t idx) const {
        Rng c;
        c.s_ = s_;
        c.reseed(s_[0] ^ (0x9e3779b97f4a7c15ULL * (idx + 1)));
        return c;
    }

    const uint64_t* state() const { return s_.data(); }
    void set_state(const uint64_t* st) { for (int i = 0; i < 4; ++i) s_[i] = st[i]; }

  private:
    std::array<uint64_t, 4> s_{};
};

}  // namespace procam
