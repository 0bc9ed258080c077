// Reduction schedules: explicit accumulation orders for dot products.
//
// A schedule stands in for a GPU kernel's reduction tree. Two schedules with
// identical kind and parameters produce bit-identical accumulation orders for
// every input length.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fpnoise {

enum class ScheduleKind {
    Sequential,      // ((p0 + p1) + p2) + ...
    PairwiseTree,    // bottom-up adjacent pairing, odd tail carried up
    Blocked,         // consecutive blocks summed sequentially, then chained
    Permuted,        // seeded permutation of summand indices, then sequential
    ReversedPrefix,  // first prefix_len summands in reverse order, rest sequential
};

struct ReductionSchedule {
    ScheduleKind kind = ScheduleKind::Sequential;
    std::size_t block_size = 0;   // Blocked only, >= 1
    std::uint64_t seed = 0;       // Permuted only
    std::size_t prefix_len = 0;   // ReversedPrefix only, >= 1

    static ReductionSchedule sequential() { return {ScheduleKind::Sequential, 0, 0, 0}; }
    static ReductionSchedule pairwise_tree() { return {ScheduleKind::PairwiseTree, 0, 0, 0}; }
    static ReductionSchedule blocked(std::size_t block_size);
    static ReductionSchedule permuted(std::uint64_t seed) {
        return {ScheduleKind::Permuted, 0, seed, 0};
    }
    static ReductionSchedule reversed_prefix(std::size_t prefix_len);

    // Text form used by the CLI and the JSON report:
    //   "sequential" | "pairwise" | "blocked:<size>" | "permuted:<seed>" |
    //   "revprefix:<len>"
    static ReductionSchedule parse(const std::string& text);
    std::string to_string() const;

    friend bool operator==(const ReductionSchedule&, const ReductionSchedule&) = default;
};

// A schedule resolved against a concrete reduction length. Matmuls build one
// plan per reduction length and reuse it for every dot product, so the
// Permuted index array is generated once instead of per dot.
class ReductionPlan {
public:
    ReductionPlan(const ReductionSchedule& schedule, std::size_t length);

    std::size_t length() const { return length_; }
    const ReductionSchedule& schedule() const { return schedule_; }

    // The order in which summands are first consumed; a bijection on
    // 0..length-1 for every kind.
    std::vector<std::uint32_t> summand_order() const;

    // Index of the i-th summand consumed. Identity except for Permuted and
    // the reversed prefix.
    std::uint32_t summand_at(std::size_t i) const {
        switch (schedule_.kind) {
            case ScheduleKind::Permuted:
                return permutation_[i];
            case ScheduleKind::ReversedPrefix:
                return i < clamped_prefix_ ? static_cast<std::uint32_t>(clamped_prefix_ - 1 - i)
                                           : static_cast<std::uint32_t>(i);
            default:
                return static_cast<std::uint32_t>(i);
        }
    }

    std::size_t block_size() const { return schedule_.block_size; }

    // Raw permutation array; only meaningful for Permuted plans.
    const std::uint32_t* summand_order_data() const { return permutation_.data(); }

private:
    ReductionSchedule schedule_;
    std::size_t length_ = 0;
    std::size_t clamped_prefix_ = 0;
    std::vector<std::uint32_t> permutation_;  // Permuted only
};

}  // namespace fpnoise
