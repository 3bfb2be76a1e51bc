// Deterministic random number generation for reproducible simulations.
//
// std::mt19937_64 has a standard-specified output sequence, but the standard
// library's distributions and std::shuffle do not, so every distribution here
// is implemented by hand on top of the raw 64-bit stream. Runs that share a
// (seed, stream tag) pair therefore produce identical draws on every platform
// and compiler.

#ifndef CASCOR_RNG_HPP
#define CASCOR_RNG_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cascor {

// One step of the splitmix64 sequence; advances `state` and returns the output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Mixes two 64-bit values into one well-scrambled seed. Used to derive
// independent named streams (environment, corruption, policy, ...) from a
// single run seed without the streams overlapping.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = a;
    std::uint64_t h = splitmix64_next(state);
    state = h ^ b;
    return splitmix64_next(state);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, bound) without modulo bias (Lemire's method).
    std::uint64_t uniform_int(std::uint64_t bound) {
        if (bound == 0) {
            throw std::invalid_argument("Rng::uniform_int: bound must be positive");
        }
        unsigned __int128 m =
            static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

// Builds the generator for one named stream of a run.
inline Rng make_stream(std::uint64_t seed, std::uint64_t tag) {
    return Rng(mix64(seed, tag));
}

// Stream tags used by the experiment driver. Policies derive their own
// sub-streams from the policy tag so environment draws never depend on how
// often a policy consults its estimator.
inline constexpr std::uint64_t kStreamEnvironment = 0x01;
inline constexpr std::uint64_t kStreamCorruption = 0x02;
inline constexpr std::uint64_t kStreamPolicy = 0x03;

}  // namespace cascor

#endif  // CASCOR_RNG_HPP
