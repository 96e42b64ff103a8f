#ifndef HMDESIGN_RNG_HPP
#define HMDESIGN_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>

namespace hmdesign {

// Counter-based deterministic generator: output i is a SplitMix64-style hash
// of seed + i*gamma. Identical sequences on every platform, unlike
// std::normal_distribution whose algorithm is implementation-defined.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the paired draw is cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        // u1 == 0 would send the radius to infinity
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::complex<double> next_cnormal() {
        const double re = next_normal();
        const double im = next_normal();
        return {re, im};
    }

    // Derives an independent stream, e.g. one per solver start.
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
        CounterRng r(base ^ (0x5851f42d4c957f2dULL * (stream + 1)));
        return r.next_u64();
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hmdesign

#endif
