#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace fincon {

// All randomness in the library flows through this wrapper.  The engine is
// std::mt19937_64 (bit-exact across platforms by the standard); the
// distribution transforms are written out here instead of using
// std::*_distribution so that streams are reproducible independent of the
// standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform on [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // uniform on [lo, hi)
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // index in [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // standard normal via Box-Muller, pair cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // zero-mean, unit-variance Laplace by inverse CDF (scale 1/sqrt(2))
    double laplace() {
        double u = uniform() - 0.5;
        double b = 0.70710678118654752440;
        double mag = std::abs(u);
        if (mag >= 0.5) mag = 0.49999999999999994;  // guard log(0)
        double x = -b * std::log(1.0 - 2.0 * mag);
        return u < 0.0 ? -x : x;
    }

    // sign(z) * z^2 with z standard normal: heavy-tailed test source
    double signed_square() {
        double z = normal();
        return z < 0.0 ? -z * z : z * z;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// SplitMix64 finalizer, used to decorrelate derived seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d649bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic per-stage seed: root seed combined with a stage tag and an
// index (era number, run number, restart number, ...).  FNV-1a over the tag
// keeps the mapping stable across builds.
inline std::uint64_t derive_seed(std::uint64_t root, const std::string& tag,
                                 std::uint64_t idx = 0) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return mix_seed(root ^ mix_seed(h + idx));
}

}  // namespace fincon
