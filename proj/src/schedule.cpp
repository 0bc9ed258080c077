#include "fpnoise/schedule.hpp"

#include <random>
#include <stdexcept>

namespace fpnoise {

ReductionSchedule ReductionSchedule::blocked(std::size_t block_size) {
    if (block_size < 1)
        throw std::invalid_argument("blocked schedule requires block_size >= 1");
    return {ScheduleKind::Blocked, block_size, 0, 0};
}

ReductionSchedule ReductionSchedule::reversed_prefix(std::size_t prefix_len) {
    if (prefix_len < 1)
        throw std::invalid_argument("reversed_prefix schedule requires prefix_len >= 1");
    return {ScheduleKind::ReversedPrefix, 0, 0, prefix_len};
}

namespace {

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid " + what + " '" + text + "'");
    }
}

}  // namespace

ReductionSchedule ReductionSchedule::parse(const std::string& text) {
    if (text == "sequential") return sequential();
    if (text == "pairwise") return pairwise_tree();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string head = text.substr(0, colon);
        const std::string arg = text.substr(colon + 1);
        if (head == "blocked")
            return blocked(static_cast<std::size_t>(parse_u64(arg, "block size")));
        if (head == "permuted") return permuted(parse_u64(arg, "permutation seed"));
        if (head == "revprefix")
            return reversed_prefix(static_cast<std::size_t>(parse_u64(arg, "prefix length")));
    }
    throw std::invalid_argument(
        "unknown schedule '" + text +
        "' (expected sequential, pairwise, blocked:<n>, permuted:<seed> or revprefix:<n>)");
}

std::string ReductionSchedule::to_string() const {
    switch (kind) {
        case ScheduleKind::Sequential: return "sequential";
        case ScheduleKind::PairwiseTree: return "pairwise";
        case ScheduleKind::Blocked: return "blocked:" + std::to_string(block_size);
        case ScheduleKind::Permuted: return "permuted:" + std::to_string(seed);
        case ScheduleKind::ReversedPrefix: return "revprefix:" + std::to_string(prefix_len);
    }
    return "?";
}

ReductionPlan::ReductionPlan(const ReductionSchedule& schedule, std::size_t length)
    : schedule_(schedule), length_(length) {
    if (length == 0) throw std::invalid_argument("reduction length must be >= 1");
    switch (schedule.kind) {
        case ScheduleKind::Blocked:
            if (schedule.block_size < 1)
                throw std::invalid_argument("blocked schedule requires block_size >= 1");
            break;
        case ScheduleKind::ReversedPrefix:
            if (schedule.prefix_len < 1)
                throw std::invalid_argument("reversed_prefix schedule requires prefix_len >= 1");
            clamped_prefix_ = std::min(schedule.prefix_len, length);
            break;
        case ScheduleKind::Permuted: {
            permutation_.resize(length);
            for (std::size_t i = 0; i < length; ++i)
                permutation_[i] = static_cast<std::uint32_t>(i);
            // Fisher-Yates with a raw mt19937_64 draw; modulo mapping keeps the
            // permutation identical across standard library implementations.
            std::mt19937_64 gen(schedule.seed);
            for (std::size_t i = length - 1; i > 0; --i) {
                const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
                std::swap(permutation_[i], permutation_[j]);
            }
            break;
        }
        default:
            break;
    }
}

std::vector<std::uint32_t> ReductionPlan::summand_order() const {
    std::vector<std::uint32_t> order(length_);
    for (std::size_t i = 0; i < length_; ++i) order[i] = summand_at(i);
    return order;
}

}  // namespace fpnoise
