// Deterministic, splittable randomness.
//
// All randomness in an experiment flows from one master seed. Independent
// substreams are derived as substream_seed(master, stream, index), so trials
// can be generated in any order or in parallel with bit-identical results.
// mt19937_64 output is specified exactly by the C++ standard and the Gaussian
// transform is hand-rolled (std::normal_distribution is implementation
// defined), so sequences are reproducible across standard libraries.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fpnoise {

// SplitMix64 finalizer (Stafford mix13).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
    Input = 1,        // per-trial input vector x
    Weights = 2,      // per-trial (or fixed) weight matrix W
    BatchFiller = 3,  // rows 1..B-1 of the emulated batch
    NullNoise = 4,    // synthetic i.i.d. noise draws
};

constexpr std::uint64_t substream_seed(std::uint64_t master, Stream stream,
                                       std::uint64_t index) {
    std::uint64_t z = mix64(master ^ (static_cast<std::uint64_t>(stream) *
                                      0x9e3779b97f4a7c15ULL));
    return mix64(z ^ (index * 0xbf58476d1ce4e5b9ULL));
}

// Standard normal sampler: mt19937_64 driving Box-Muller, second deviate cached.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1], u2 in [0, 1), both with 53 random bits.
        const double u1 =
            (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fpnoise
