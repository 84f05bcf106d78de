#pragma once

#include <cmath>
#include <cstdint>

namespace mstnet {

// Deterministic PRNG with a single 64-bit state (splitmix64 core).
// Identical seeds give identical draw sequences on every platform; the
// state is a single word so it serializes into checkpoints trivially.
class Rng {
 public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; }

    // Derived stream for per-index parallel generation.
    static Rng derive(uint64_t seed, uint64_t stream, uint64_t index) {
        Rng mix(seed ^ (stream * 0x9e3779b97f4a7c15ULL));
        mix.next_u64();
        return Rng(mix.next_u64() + index * 0xd1342543de82ef95ULL);
    }

 private:
    uint64_t state_;
};

}  // namespace mstnet
