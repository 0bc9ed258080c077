#include "fpnoise/precision.hpp"

#include <stdexcept>

namespace fpnoise {

PrecisionFormat PrecisionFormat::from_bits(int mantissa_bits, int exponent_bits) {
    if (mantissa_bits == 10 && exponent_bits == 5) return float16();
    if (mantissa_bits == 7 && exponent_bits == 8) return bfloat16();
    if (mantissa_bits == 23 && exponent_bits == 8) return float32_ref();
    throw std::invalid_argument("no precision format with " +
                                std::to_string(mantissa_bits) + " mantissa / " +
                                std::to_string(exponent_bits) + " exponent bits");
}

PrecisionFormat PrecisionFormat::parse(const std::string& name) {
    if (name == "f16" || name == "float16") return float16();
    if (name == "bf16" || name == "bfloat16") return bfloat16();
    if (name == "f32" || name == "float32") return float32_ref();
    throw std::invalid_argument("unknown precision '" + name +
                                "' (expected f16, bf16 or f32)");
}

std::string PrecisionFormat::name() const {
    switch (kind) {
        case PrecisionKind::Float16: return "f16";
        case PrecisionKind::BFloat16: return "bf16";
        case PrecisionKind::Float32Ref: return "f32";
    }
    return "?";
}

double quantize(double x, const PrecisionFormat& fmt, bool flush_subnormals) {
    return Quantizer(fmt, flush_subnormals)(x);
}

std::vector<double> quantize_vector(const std::vector<double>& v,
                                    const PrecisionFormat& fmt,
                                    bool flush_subnormals) {
    const Quantizer qz(fmt, flush_subnormals);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = qz(v[i]);
    return out;
}

}  // namespace fpnoise
