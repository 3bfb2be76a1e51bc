// Adversary strategies that perturb observed cascade feedback, with exact
// budget accounting.
//
// A corrupted round flips every observed click bit. Flipping changes which
// position reads as the first click, so the stopping position is recomputed
// and the observation prefix is truncated or extended until the trace is
// again a self-consistent cascade. One unit of budget is charged per
// corrupted round regardless of how many bits differ (the per-round cost is
// the maximum per-item perturbation, and every flip has magnitude 1).

#ifndef CASCOR_CORRUPTION_HPP
#define CASCOR_CORRUPTION_HPP

#include <cstdint>
#include <stdexcept>

#include "cascor/core.hpp"
#include "cascor/rng.hpp"

namespace cascor {

struct CorruptionBudget {
    std::uint64_t total{0};
    std::uint64_t spent{0};

    bool exhausted() const { return spent >= total; }
};

enum class AdversaryKind { none, flip_early, flip_window };

struct AdversaryStrategy {
    AdversaryKind kind{AdversaryKind::none};
    std::uint64_t window_start{0};  // first corrupted round (flip_window)
    std::uint64_t window_len{0};    // rounds [window_start, window_start + window_len)
};

// The strategy used throughout the experiments: corrupt rounds 1..C, placing
// all corruption at the start of the horizon where it disrupts exploration
// the most. C = 0 degenerates to no adversary.
inline AdversaryStrategy default_adversary(std::uint64_t C) {
    AdversaryStrategy strategy;
    strategy.kind = C == 0 ? AdversaryKind::none : AdversaryKind::flip_early;
    return strategy;
}

// Whether the strategy elects to corrupt this round, budget permitting.
inline bool elects_to_corrupt(const AdversaryStrategy& strategy, std::uint64_t round,
                              const CorruptionBudget& budget) {
    if (budget.exhausted()) return false;
    switch (strategy.kind) {
        case AdversaryKind::none:
            return false;
        case AdversaryKind::flip_early:
            return round <= budget.total;
        case AdversaryKind::flip_window:
            return round >= strategy.window_start &&
                   round < strategy.window_start + strategy.window_len;
    }
    return false;
}

// Applies one round of corruption. When the round is corrupted, every
// observed bit is flipped and the stopping position is recomputed from the
// flipped bits:
//   - a flipped 1 before the old stop truncates the prefix there;
//   - if every flipped bit is 0 and positions remain, examination continues
//     with fresh Bernoulli(mu) draws (themselves flipped) from
//     `extension_rng`, so the environment stream is consumed identically in
//     corrupted and uncorrupted replays.
// Charges exactly one budget unit per corrupted round. Rounds the strategy
// skips, and rounds after the budget is exhausted, pass through unchanged.
inline CascadeFeedback corrupt(const CascadeFeedback& feedback, std::uint64_t round,
                               CorruptionBudget& budget,
                               const AdversaryStrategy& strategy,
                               const EnvironmentSpec& env, Rng& extension_rng) {
    if (budget.spent > budget.total) {
        throw std::logic_error("corrupt: budget spent exceeds total");
    }
    if (!elects_to_corrupt(strategy, round, budget)) return feedback;

    CascadeFeedback out;
    out.list = feedback.list;
    out.observed.reserve(env.d);
    out.stop_position = env.d + 1;

    for (std::size_t i = 0; i < feedback.observed.size(); ++i) {
        const std::uint8_t bit = feedback.observed[i] ? 0 : 1;
        out.observed.push_back(bit);
        if (bit) {
            out.stop_position = static_cast<std::uint32_t>(i + 1);
            break;
        }
    }
    if (out.stop_position == env.d + 1) {
        // All flipped bits are 0: the (corrupted) user examined past the old
        // prefix. Draw the remaining true bits and flip them too.
        for (std::size_t pos = out.observed.size(); pos < env.d; ++pos) {
            const bool true_click =
                extension_rng.bernoulli(env.mu[feedback.list.items[pos]]);
            const std::uint8_t bit = true_click ? 0 : 1;
            out.observed.push_back(bit);
            if (bit) {
                out.stop_position = static_cast<std::uint32_t>(pos + 1);
                break;
            }
        }
    }

    budget.spent += 1;
    return out;
}

}  // namespace cascor

#endif  // CASCOR_CORRUPTION_HPP
