// Value-level emulation of reduced-precision floating-point rounding.
//
// Quantized values are carried in ordinary doubles: every float16/bfloat16
// value is exactly representable in binary64, so rounding is the only
// operation that has to be emulated. Rounding mode is round-to-nearest,
// ties-to-even throughout. Assumes the host FP environment is in its default
// round-to-nearest mode (never changed by this library).

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace fpnoise {

enum class PrecisionKind { Float16, BFloat16, Float32Ref };

struct PrecisionFormat {
    PrecisionKind kind = PrecisionKind::Float16;
    int mantissa_bits = 10;  // explicit (stored) mantissa bits
    int exponent_bits = 5;

    static constexpr PrecisionFormat float16() { return {PrecisionKind::Float16, 10, 5}; }
    static constexpr PrecisionFormat bfloat16() { return {PrecisionKind::BFloat16, 7, 8}; }
    static constexpr PrecisionFormat float32_ref() { return {PrecisionKind::Float32Ref, 23, 8}; }

    // Round-trip through the (mantissa_bits, exponent_bits) pair; throws
    // std::invalid_argument for a pair that names no supported format.
    static PrecisionFormat from_bits(int mantissa_bits, int exponent_bits);
    static PrecisionFormat parse(const std::string& name);  // "f16" | "bf16" | "f32"

    std::string name() const;

    constexpr int exponent_bias() const { return (1 << (exponent_bits - 1)) - 1; }
    constexpr int min_normal_exponent() const { return 1 - exponent_bias(); }
    constexpr int max_exponent() const { return exponent_bias(); }

    friend bool operator==(const PrecisionFormat&, const PrecisionFormat&) = default;
};

// Precomputed rounding constants for one format. The hot path is branch-light:
// classify on the raw exponent field, then round with the classic
// add-large-subtract-large trick, which delegates the actual round-to-nearest,
// ties-to-even decision (including sticky bits) to the hardware adder in a
// single rounding step.
class Quantizer {
public:
    explicit Quantizer(const PrecisionFormat& fmt, bool flush_subnormals = false)
        : mantissa_bits_(fmt.mantissa_bits),
          min_lsb_exp_(fmt.min_normal_exponent() - fmt.mantissa_bits),
          flush_subnormals_(flush_subnormals) {
        const int emax = fmt.max_exponent();
        // Overflow threshold: 2^emax * (2 - 2^(-m-1)); at or above it,
        // round-to-nearest delivers infinity.
        overflow_bits_ = std::bit_cast<std::uint64_t>(
            std::ldexp(2.0 - std::ldexp(1.0, -fmt.mantissa_bits - 1), emax));
        min_normal_ = std::ldexp(1.0, fmt.min_normal_exponent());
    }

    double operator()(double x) const {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        const std::uint64_t mag = bits & 0x7fffffffffffffffULL;
        if (mag >= overflow_bits_) {
            // Covers overflow, +-inf and NaN in one magnitude compare.
            if (std::isnan(x)) return x;
            return std::copysign(std::numeric_limits<double>::infinity(), x);
        }
        if (mag < (std::uint64_t{1} << 52))
            // Binary64 subnormals (and zeros) lie below half of every target
            // format's smallest subnormal.
            return std::copysign(0.0, x);

        int lsb_exp = static_cast<int>(mag >> 52) - 1023 - mantissa_bits_;
        if (lsb_exp < min_lsb_exp_) lsb_exp = min_lsb_exp_;  // subnormal range
        // big = 1.5 * 2^(52 + lsb_exp); adding and subtracting it rounds x to
        // the nearest multiple of 2^lsb_exp with hardware ties-to-even (big
        // is itself an even multiple of the quantum, so tie parity carries).
        const double big = std::bit_cast<double>(
            (static_cast<std::uint64_t>(lsb_exp + 52 + 1023) << 52) |
            (std::uint64_t{1} << 51));
        const double r = (x + big) - big;
        if (flush_subnormals_ && r != 0.0 && std::fabs(r) < min_normal_)
            return std::copysign(0.0, x);
        return r;
    }

private:
    int mantissa_bits_;
    int min_lsb_exp_;
    bool flush_subnormals_;
    std::uint64_t overflow_bits_ = 0;
    double min_normal_ = 0;
};

// Nearest representable value in fmt (round-to-nearest, ties-to-even).
// Total on floats: NaN -> NaN, +-inf -> +-inf, overflow saturates to +-inf.
double quantize(double x, const PrecisionFormat& fmt, bool flush_subnormals = false);

std::vector<double> quantize_vector(const std::vector<double>& v,
                                    const PrecisionFormat& fmt,
                                    bool flush_subnormals = false);

}  // namespace fpnoise
