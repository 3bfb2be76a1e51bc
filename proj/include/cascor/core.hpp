// Cascade-click environment: item parameters, ranked-list semantics, feedback
// sampling, and reward/regret computation.
//
// The user model: shown an ordered list of d items, the user examines
// positions top-down and clicks the first attractive item. Position kappa is
// the first click (kappa = d+1 when nothing is clicked); only the examined
// prefix is observed by the learner.

#ifndef CASCOR_CORE_HPP
#define CASCOR_CORE_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascor/rng.hpp"

namespace cascor {

// True per-item click probabilities plus the recommendation geometry.
struct EnvironmentSpec {
    std::vector<double> mu;   // true click probability per item
    std::uint32_t d{1};       // recommendation list size
    std::uint64_t horizon{1};  // number of rounds T

    std::size_t num_items() const { return mu.size(); }
};

inline void validate(const EnvironmentSpec& env) {
    if (env.mu.empty()) {
        throw std::invalid_argument("EnvironmentSpec: mu must be non-empty");
    }
    for (std::size_t k = 0; k < env.mu.size(); ++k) {
        const double p = env.mu[k];
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("EnvironmentSpec: mu[" + std::to_string(k) +
                                        "] outside [0,1]");
        }
    }
    if (env.d < 1 || env.d > env.mu.size()) {
        throw std::invalid_argument("EnvironmentSpec: d must satisfy 1 <= d <= K");
    }
    if (env.horizon < 1) {
        throw std::invalid_argument("EnvironmentSpec: horizon must be positive");
    }
}

// An ordered recommendation of d distinct item indices.
struct RankedList {
    std::vector<std::uint32_t> items;

    bool operator==(const RankedList& other) const { return items == other.items; }
};

inline void validate_list(const RankedList& list, std::size_t num_items,
                          std::uint32_t d) {
    if (list.items.size() != d) {
        throw std::invalid_argument("RankedList: expected " + std::to_string(d) +
                                    " items, got " + std::to_string(list.items.size()));
    }
    std::vector<std::uint32_t> seen = list.items;
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] >= num_items) {
            throw std::invalid_argument("RankedList: item index " +
                                        std::to_string(seen[i]) + " out of range");
        }
        if (i > 0 && seen[i] == seen[i - 1]) {
            throw std::invalid_argument("RankedList: duplicate item index " +
                                        std::to_string(seen[i]));
        }
    }
}

// One round of cascade feedback. `observed[i]` is the click bit of the item at
// position i+1; exactly the examined prefix (positions 1..min(kappa, d)) is
// present.
struct CascadeFeedback {
    RankedList list;
    std::uint32_t stop_position{1};       // kappa in [1, d+1]
    std::vector<std::uint8_t> observed;   // size min(kappa, d)
};

// Checks the cascade prefix invariant: zeros before the click, a one at the
// click (when kappa <= d), d zeros when nothing was clicked.
inline void validate_feedback(const CascadeFeedback& fb, std::uint32_t d) {
    const std::uint32_t kappa = fb.stop_position;
    if (kappa < 1 || kappa > d + 1) {
        throw std::invalid_argument("CascadeFeedback: stop_position outside [1, d+1]");
    }
    const std::size_t expect = std::min<std::size_t>(kappa, d);
    if (fb.observed.size() != expect) {
        throw std::invalid_argument("CascadeFeedback: expected " +
                                    std::to_string(expect) + " observed bits, got " +
                                    std::to_string(fb.observed.size()));
    }
    for (std::size_t i = 0; i + 1 < fb.observed.size(); ++i) {
        if (fb.observed[i] != 0) {
            throw std::invalid_argument("CascadeFeedback: nonzero bit before the click");
        }
    }
    if (kappa <= d && fb.observed.back() != 1) {
        throw std::invalid_argument("CascadeFeedback: bit at the stop position is not 1");
    }
    if (kappa == d + 1) {
        for (const auto bit : fb.observed) {
            if (bit != 0) {
                throw std::invalid_argument(
                    "CascadeFeedback: nonzero bit in a click-free round");
            }
        }
    }
}

// Probability that at least one listed item is clicked: 1 - prod(1 - mu_k).
// Order-free by the product form.
inline double expected_reward(const RankedList& list, const std::vector<double>& mu) {
    double miss = 1.0;
    for (const auto item : list.items) {
        if (item >= mu.size()) {
            throw std::invalid_argument("expected_reward: item index " +
                                        std::to_string(item) + " out of range");
        }
        miss *= 1.0 - mu[item];
    }
    return 1.0 - miss;
}

// The d items with the largest mu, ordered by descending mu; ties broken by
// the smaller item index.
inline RankedList optimal_list(const std::vector<double>& mu, std::uint32_t d) {
    if (d < 1 || d > mu.size()) {
        throw std::invalid_argument("optimal_list: d must satisfy 1 <= d <= K");
    }
    std::vector<std::uint32_t> order(mu.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&mu](std::uint32_t a, std::uint32_t b) {
        if (mu[a] != mu[b]) return mu[a] > mu[b];
        return a < b;
    });
    order.resize(d);
    return RankedList{std::move(order)};
}

// Draws one round of cascade feedback: independent Bernoulli(mu_k) bits in
// position order, stopping at the first click. Consumes exactly min(kappa, d)
// draws from `rng` so trajectories replay exactly.
inline CascadeFeedback sample_feedback(const EnvironmentSpec& env,
                                       const RankedList& list, Rng& rng) {
    validate_list(list, env.num_items(), env.d);
    CascadeFeedback fb;
    fb.list = list;
    fb.stop_position = env.d + 1;
    for (std::uint32_t pos = 0; pos < env.d; ++pos) {
        const bool click = rng.bernoulli(env.mu[list.items[pos]]);
        fb.observed.push_back(click ? 1 : 0);
        if (click) {
            fb.stop_position = pos + 1;
            break;
        }
    }
    return fb;
}

inline double optimal_expected_reward(const EnvironmentSpec& env) {
    return expected_reward(optimal_list(env.mu, env.d), env.mu);
}

// Expected-reward gap of `chosen` against the best list under the true means.
inline double per_round_regret(const EnvironmentSpec& env, const RankedList& chosen) {
    return optimal_expected_reward(env) - expected_reward(chosen, env.mu);
}

// One row of an experiment trace. `corruption_spent` is the budget consumed in
// this round alone.
struct TraceRow {
    std::uint64_t round{0};
    RankedList chosen;
    double per_round_regret{0.0};
    double cumulative_regret{0.0};
    std::uint32_t corruption_spent{0};
};

struct RunTrace {
    std::string policy;
    std::uint64_t seed{0};
    std::vector<TraceRow> rows;

    double total_regret() const {
        return rows.empty() ? 0.0 : rows.back().cumulative_regret;
    }
    std::uint64_t total_corruption() const {
        std::uint64_t total = 0;
        for (const auto& row : rows) total += row.corruption_spent;
        return total;
    }
};

}  // namespace cascor

#endif  // CASCOR_CORE_HPP
