#ifndef MUTEXNET_RNG_HPP
#define MUTEXNET_RNG_HPP

#include <cstdint>
#include <vector>

namespace mutexnet {

/** Deterministic pseudo-random generator: xoshiro256++ seeded via splitmix64.
 *
 * The generator is fully specified by its 64-bit seed: the same seed yields
 * the same output stream on every platform and in every build. Streams for
 * independent consumers are derived with split(), which seeds a child
 * generator from the parent stream, so one experiment seed fans out into
 * reproducible per-purpose streams (splitting, initialization, batching).
 *
 * References: Blackman & Vigna, "Scrambled linear pseudorandom number
 * generators" (xoshiro256++); Steele et al. (splitmix64 seeding).
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Next 64 uniform random bits.
    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double();

    /// Uniform double in [lo, hi). Requires lo < hi.
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). Unbiased via rejection. Requires n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal deviate (Box-Muller, one spare cached).
    double gaussian();

    /// Normal deviate with the given mean and standard deviation.
    double gaussian(double mean, double stddev);

    /// Child generator seeded from this stream; advances this stream once.
    Rng split();

    /// Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_[4];
    double spare_gaussian_ = 0.0;
    bool has_spare_ = false;
};

/// Mixes two 64-bit values into one (splitmix64 finalizer over the xor).
/// Used to derive decorrelated seeds for sub-streams, e.g. per sweep point.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace mutexnet

#endif // MUTEXNET_RNG_HPP
