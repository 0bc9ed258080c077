// Matrix multiplication with an explicit, configurable accumulation order.
//
// Every output element is an independent dot product; the schedule fully
// dictates the order in which its partial products are combined. In native
// (non-widened) mode each partial product and each intermediate sum is
// rounded to the target format, emulating a format-native accumulator. In
// widened mode products and sums are carried in binary64 and only the final
// result is rounded.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpnoise/precision.hpp"
#include "fpnoise/schedule.hpp"

namespace fpnoise {

struct MatmulSpec {
    std::size_t d_in = 512;   // reduction length
    std::size_t d_out = 1024; // logit count K
    std::size_t batch = 16;   // batch size B
    PrecisionFormat precision = PrecisionFormat::float16();
    bool accumulator_widened = false;

    void validate() const;
};

// Minimal row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Scheduled dot product of two equal-length vectors whose elements are
// already quantized to fmt. Throws std::invalid_argument on a length
// mismatch or empty input.
double dot_scheduled(std::span<const double> a, std::span<const double> b,
                     const ReductionSchedule& schedule, const PrecisionFormat& fmt,
                     bool widened);

// Internal building block: reduce pre-quantized products under a resolved
// plan. `products` is clobbered by PairwiseTree reductions.
double reduce_products(std::span<double> products, const ReductionPlan& plan,
                       const Quantizer& qz, bool widened);

// output[j] = dot_scheduled(x, column j of W, ...). W is d_in x d_out.
std::vector<double> matmul_single(const std::vector<double>& x, const Matrix& W,
                                  const MatmulSpec& spec,
                                  const ReductionSchedule& schedule);

// Builds a batch whose row 0 is x and whose rows 1..B-1 are seeded
// standard-normal filler quantized to spec.precision, computes the full
// batched product under `schedule`, and returns row 0 of the result.
std::vector<double> matmul_batched_row0(const std::vector<double>& x, const Matrix& W,
                                        const MatmulSpec& spec,
                                        const ReductionSchedule& schedule,
                                        std::uint64_t filler_seed);

}  // namespace fpnoise
