#include "fpnoise/matmul.hpp"

#include <stdexcept>
#include <string>

#include "fpnoise/rng.hpp"

namespace fpnoise {

void MatmulSpec::validate() const {
    if (d_in < 1 || d_out < 1 || batch < 1)
        throw std::invalid_argument("matmul spec requires d_in, d_out, batch >= 1");
}

namespace {

// Left fold in plan order; combine() is either a quantized or a plain add.
template <typename Combine>
double fold_ordered(std::span<const double> p, const ReductionPlan& plan,
                    Combine&& combine) {
    double acc = p[plan.summand_at(0)];
    for (std::size_t i = 1; i < p.size(); ++i) acc = combine(acc, p[plan.summand_at(i)]);
    return acc;
}

template <typename Combine>
double fold_blocked(std::span<const double> p, std::size_t block, Combine&& combine) {
    const std::size_t n = p.size();
    double acc = 0.0;
    bool first_block = true;
    for (std::size_t begin = 0; begin < n; begin += block) {
        const std::size_t end = std::min(begin + block, n);
        double partial = p[begin];
        for (std::size_t i = begin + 1; i < end; ++i) partial = combine(partial, p[i]);
        acc = first_block ? partial : combine(acc, partial);
        first_block = false;
    }
    return acc;
}

// Bottom-up adjacent pairing; an odd trailing element is carried up unchanged.
template <typename Combine>
double fold_pairwise(std::span<double> p, Combine&& combine) {
    std::size_t n = p.size();
    while (n > 1) {
        const std::size_t half = n / 2;
        for (std::size_t i = 0; i < half; ++i) p[i] = combine(p[2 * i], p[2 * i + 1]);
        if (n % 2 != 0) p[half] = p[n - 1];
        n = half + (n % 2);
    }
    return p[0];
}

}  // namespace

double reduce_products(std::span<double> products, const ReductionPlan& plan,
                       const Quantizer& qz, bool widened) {
    if (widened) {
        const auto add = [](double a, double b) { return a + b; };
        double result;
        switch (plan.schedule().kind) {
            case ScheduleKind::PairwiseTree: result = fold_pairwise(products, add); break;
            case ScheduleKind::Blocked:
                result = fold_blocked(products, plan.block_size(), add);
                break;
            default: result = fold_ordered(products, plan, add); break;
        }
        return qz(result);  // widened: only the final value is in-format
    }
    const auto add = [&qz](double a, double b) { return qz(a + b); };
    switch (plan.schedule().kind) {
        case ScheduleKind::PairwiseTree: return fold_pairwise(products, add);
        case ScheduleKind::Blocked: return fold_blocked(products, plan.block_size(), add);
        default: return fold_ordered(products, plan, add);
    }
}

double dot_scheduled(std::span<const double> a, std::span<const double> b,
                     const ReductionSchedule& schedule, const PrecisionFormat& fmt,
                     bool widened) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot_scheduled: length mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    if (a.empty()) throw std::invalid_argument("dot_scheduled: empty input");

    const ReductionPlan plan(schedule, a.size());
    const Quantizer qz(fmt);
    std::vector<double> products(a.size());
    if (widened) {
        for (std::size_t i = 0; i < a.size(); ++i) products[i] = a[i] * b[i];
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) products[i] = qz(a[i] * b[i]);
    }
    return reduce_products(products, plan, qz, widened);
}

namespace {

// The hot path interleaves a small group of logits so their independent
// quantize-add dependency chains pipeline. Each logit's reduction still
// follows the schedule order exactly; the interleaving never reorders one
// logit's combines.
constexpr std::size_t kLogitGroup = 8;

struct IdentityMap {
    std::uint32_t operator()(std::size_t i) const { return static_cast<std::uint32_t>(i); }
};
struct ReversedPrefixMap {
    std::size_t prefix;
    std::uint32_t operator()(std::size_t i) const {
        return i < prefix ? static_cast<std::uint32_t>(prefix - 1 - i)
                          : static_cast<std::uint32_t>(i);
    }
};
struct PermutedMap {
    const std::uint32_t* order;
    std::uint32_t operator()(std::size_t i) const { return order[i]; }
};

// cols: G pointers to contiguous length-n columns. out: G results. G is a
// compile-time constant so the accumulators live in registers.
template <bool Widened, std::size_t G, typename Map>
void fold_group(const double* x, const double* const* cols, std::size_t n, Map map,
                const Quantizer& qz, double* out) {
    double acc[G];
    const std::uint32_t first = map(0);
    for (std::size_t k = 0; k < G; ++k) {
        const double p = x[first] * cols[k][first];
        acc[k] = Widened ? p : qz(p);
    }
    for (std::size_t i = 1; i < n; ++i) {
        const std::uint32_t idx = map(i);
        const double xi = x[idx];
        for (std::size_t k = 0; k < G; ++k) {
            const double p = xi * cols[k][idx];
            if constexpr (Widened)
                acc[k] += p;
            else
                acc[k] = qz(acc[k] + qz(p));
        }
    }
    for (std::size_t k = 0; k < G; ++k) out[k] = Widened ? qz(acc[k]) : acc[k];
}

template <bool Widened, std::size_t G>
void blocked_group(const double* x, const double* const* cols, std::size_t n,
                   std::size_t block, const Quantizer& qz, double* out) {
    double acc[G] = {};
    double partial[G] = {};
    bool first_block = true;
    for (std::size_t begin = 0; begin < n; begin += block) {
        const std::size_t end = std::min(begin + block, n);
        for (std::size_t k = 0; k < G; ++k) {
            const double p = x[begin] * cols[k][begin];
            partial[k] = Widened ? p : qz(p);
        }
        for (std::size_t i = begin + 1; i < end; ++i) {
            const double xi = x[i];
            for (std::size_t k = 0; k < G; ++k) {
                const double p = xi * cols[k][i];
                if constexpr (Widened)
                    partial[k] += p;
                else
                    partial[k] = qz(partial[k] + qz(p));
            }
        }
        for (std::size_t k = 0; k < G; ++k) {
            if (first_block)
                acc[k] = partial[k];
            else
                acc[k] = Widened ? acc[k] + partial[k] : qz(acc[k] + partial[k]);
        }
        first_block = false;
    }
    for (std::size_t k = 0; k < G; ++k) out[k] = Widened ? qz(acc[k]) : acc[k];
}

template <bool Widened, std::size_t G>
void reduce_group_fixed(const double* x, const double* const* cols,
                        const ReductionPlan& plan, const Quantizer& qz,
                        std::vector<double>& scratch, double* out) {
    const std::size_t n = plan.length();
    switch (plan.schedule().kind) {
        case ScheduleKind::Sequential:
            fold_group<Widened, G>(x, cols, n, IdentityMap{}, qz, out);
            return;
        case ScheduleKind::ReversedPrefix:
            fold_group<Widened, G>(
                x, cols, n, ReversedPrefixMap{std::min(plan.schedule().prefix_len, n)}, qz,
                out);
            return;
        case ScheduleKind::Permuted:
            fold_group<Widened, G>(x, cols, n, PermutedMap{plan.summand_order_data()}, qz,
                                   out);
            return;
        case ScheduleKind::Blocked:
            blocked_group<Widened, G>(x, cols, n, plan.block_size(), qz, out);
            return;
        case ScheduleKind::PairwiseTree:
            for (std::size_t k = 0; k < G; ++k) {
                if (Widened) {
                    for (std::size_t i = 0; i < n; ++i) scratch[i] = x[i] * cols[k][i];
                } else {
                    for (std::size_t i = 0; i < n; ++i) scratch[i] = qz(x[i] * cols[k][i]);
                }
                out[k] = reduce_products(scratch, plan, qz, Widened);
            }
            return;
    }
}

template <bool Widened>
void reduce_group(const double* x, const double* const* cols, std::size_t g,
                  const ReductionPlan& plan, const Quantizer& qz,
                  std::vector<double>& scratch, double* out) {
    switch (g) {
        case 8: reduce_group_fixed<Widened, 8>(x, cols, plan, qz, scratch, out); return;
        case 7: reduce_group_fixed<Widened, 7>(x, cols, plan, qz, scratch, out); return;
        case 6: reduce_group_fixed<Widened, 6>(x, cols, plan, qz, scratch, out); return;
        case 5: reduce_group_fixed<Widened, 5>(x, cols, plan, qz, scratch, out); return;
        case 4: reduce_group_fixed<Widened, 4>(x, cols, plan, qz, scratch, out); return;
        case 3: reduce_group_fixed<Widened, 3>(x, cols, plan, qz, scratch, out); return;
        case 2: reduce_group_fixed<Widened, 2>(x, cols, plan, qz, scratch, out); return;
        case 1: reduce_group_fixed<Widened, 1>(x, cols, plan, qz, scratch, out); return;
        default: return;
    }
}

// Full X (n_rows x d_in) times W (d_in x d_out) with per-element scheduled
// reductions. W is transposed once so each reduction reads contiguous
// columns.
Matrix matmul_rows(const Matrix& X, const Matrix& W, const MatmulSpec& spec,
                   const ReductionSchedule& schedule) {
    const std::size_t d_in = spec.d_in;
    const std::size_t d_out = spec.d_out;

    Matrix Wt(d_out, d_in);
    for (std::size_t i = 0; i < d_in; ++i)
        for (std::size_t j = 0; j < d_out; ++j) Wt.at(j, i) = W.at(i, j);

    const ReductionPlan plan(schedule, d_in);
    const Quantizer qz(spec.precision);
    const bool widened = spec.accumulator_widened;

    Matrix out(X.rows, d_out);
    std::vector<double> scratch(d_in);
    const double* cols[kLogitGroup];
    for (std::size_t r = 0; r < X.rows; ++r) {
        const double* xrow = &X.data[r * d_in];
        for (std::size_t j0 = 0; j0 < d_out; j0 += kLogitGroup) {
            const std::size_t g = std::min(kLogitGroup, d_out - j0);
            for (std::size_t k = 0; k < g; ++k) cols[k] = &Wt.data[(j0 + k) * d_in];
            if (widened)
                reduce_group<true>(xrow, cols, g, plan, qz, scratch, &out.data[r * d_out + j0]);
            else
                reduce_group<false>(xrow, cols, g, plan, qz, scratch, &out.data[r * d_out + j0]);
        }
    }
    return out;
}

void check_dims(const std::vector<double>& x, const Matrix& W, const MatmulSpec& spec) {
    spec.validate();
    if (x.size() != spec.d_in)
        throw std::invalid_argument("matmul: x has length " + std::to_string(x.size()) +
                                    ", spec.d_in is " + std::to_string(spec.d_in));
    if (W.rows != spec.d_in || W.cols != spec.d_out)
        throw std::invalid_argument("matmul: W is " + std::to_string(W.rows) + "x" +
                                    std::to_string(W.cols) + ", spec wants " +
                                    std::to_string(spec.d_in) + "x" +
                                    std::to_string(spec.d_out));
}

}  // namespace

std::vector<double> matmul_single(const std::vector<double>& x, const Matrix& W,
                                  const MatmulSpec& spec,
                                  const ReductionSchedule& schedule) {
    check_dims(x, W, spec);
    Matrix X(1, spec.d_in);
    X.data = x;
    const Matrix out = matmul_rows(X, W, spec, schedule);
    return out.data;
}

std::vector<double> matmul_batched_row0(const std::vector<double>& x, const Matrix& W,
                                        const MatmulSpec& spec,
                                        const ReductionSchedule& schedule,
                                        std::uint64_t filler_seed) {
    check_dims(x, W, spec);
    const std::size_t B = spec.batch;

    Matrix X(B, spec.d_in);
    for (std::size_t i = 0; i < spec.d_in; ++i) X.at(0, i) = x[i];
    if (B > 1) {
        const Quantizer qz(spec.precision);
        NormalSampler normals(filler_seed);
        for (std::size_t r = 1; r < B; ++r)
            for (std::size_t i = 0; i < spec.d_in; ++i) X.at(r, i) = qz(normals.next());
    }

    const Matrix out = matmul_rows(X, W, spec, schedule);
    return std::vector<double>(out.data.begin(), out.data.begin() + spec.d_out);
}

}  // namespace fpnoise
