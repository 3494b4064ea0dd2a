#ifndef CRASHSIM_RNG_HPP
#define CRASHSIM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace crashsim {

// splitmix64 step: advances the state and returns the next output.
// Used everywhere randomness is needed so that runs are reproducible
// bit-for-bit from a 64-bit seed, independent of the standard library.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// One-shot mix, for deriving child seeds (bank entries, phases, sub-draws).
inline std::uint64_t splitmix64_hash(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix64(s);
}

// Deterministic generator over a splitmix64 stream. All distributions are
// hand-rolled (53-bit mantissa uniforms, Box-Muller gaussians) so sequences
// do not depend on implementation-defined std:: distribution algorithms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive, multiply-shift reduction.
    int uniform_int(int lo, int hi) {
        const std::uint64_t n = static_cast<std::uint64_t>(hi - lo + 1);
        const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
        return lo + static_cast<int>(wide >> 64);
    }

    // Standard normal via Box-Muller (cosine branch only).
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  private:
    std::uint64_t state_;
};

}  // namespace crashsim

#endif
