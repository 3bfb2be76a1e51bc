// Corruption-agnostic model selection (M2UCB-V).
//
// The wrapper runs a geometric grid of MUCB-V instances, each assuming a
// different corruption budget {0, 1, 2, 4, ..., 2^E}. Every round one alive
// instance, drawn uniformly at random, acts; its recommendation is played
// and it receives the feedback as a full policy update, while every other
// alive instance absorbs the same observed bits passively. Periodically the
// wrapper compares realized per-round rewards across instances and
// eliminates any whose Hoeffding upper bound falls below the best lower
// bound, so instances whose assumed budget wastes too many rounds (or
// hardens too little) drop out.

#ifndef CASCOR_MODELSELECT_HPP
#define CASCOR_MODELSELECT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascor/core.hpp"
#include "cascor/policies.hpp"
#include "cascor/rng.hpp"

namespace cascor {

// Wrapper knobs; zero means "derive from K and the horizon".
struct ModelSelectConfig {
    std::uint64_t window{0};        // elimination cadence, auto: ceil(K ln T)
    std::uint64_t n_min{0};         // acting rounds before testable, auto: ceil(4 ln T)
    std::uint64_t grid_max_exp{0};  // largest exponent E, auto: ceil(log2 T)
};

// Bookkeeping for one grid instance.
struct InstanceStats {
    std::uint32_t id{0};
    std::uint64_t assumed_budget{0};
    std::uint64_t rounds_acted{0};
    std::uint64_t reward_sum{0};  // binary round rewards while acting
    bool alive{true};
};

class M2ucbvPolicy : public Policy {
  public:
    M2ucbvPolicy(std::uint32_t num_items, std::uint32_t list_size,
                 std::uint64_t horizon, const PolicyConfig& config,
                 const ModelSelectConfig& select, std::uint64_t seed)
        : num_items_(num_items),
          list_size_(list_size),
          horizon_(horizon),
          select_rng_(make_stream(seed, kStreamPolicy)) {
        if (horizon_ < 2) {
            throw std::invalid_argument("M2ucbvPolicy: horizon must be >= 2");
        }
        const double log_T = std::log(static_cast<double>(horizon_));
        window_ = select.window != 0
                      ? select.window
                      : static_cast<std::uint64_t>(std::ceil(num_items_ * log_T));
        n_min_ = select.n_min != 0
                     ? select.n_min
                     : static_cast<std::uint64_t>(std::ceil(4.0 * log_T));
        std::uint64_t max_exp = select.grid_max_exp;
        if (max_exp == 0) {
            while ((std::uint64_t{1} << max_exp) < horizon_) ++max_exp;
        }
        if (max_exp >= 63 ||
            2.0 * std::pow(2.0, static_cast<double>(max_exp)) <
                static_cast<double>(horizon_)) {
            throw std::invalid_argument(
                "M2ucbvPolicy: grid must reach at least half the horizon");
        }

        grid_.push_back(0);
        for (std::uint64_t e = 0; e <= max_exp; ++e) {
            grid_.push_back(std::uint64_t{1} << e);
        }
        instances_.reserve(grid_.size());
        stats_.reserve(grid_.size());
        for (std::uint32_t i = 0; i < grid_.size(); ++i) {
            PolicyConfig instance_config = config;
            instance_config.C_assumed = grid_[i];
            instances_.push_back(std::make_unique<MucbvPolicy>(
                num_items_, list_size_, horizon_, instance_config,
                MeanEstimatorKind::calibrated_mom, mix64(seed, i + 1)));
            stats_.push_back(InstanceStats{i, grid_[i], 0, 0, true});
        }
    }

    std::string name() const override { return "m2ucbv"; }

    RankedList recommend() override {
        if (awaiting_feedback_) {
            throw std::logic_error("M2ucbvPolicy: recommend called with feedback pending");
        }
        std::vector<std::uint32_t> alive;
        alive.reserve(stats_.size());
        for (const auto& stat : stats_) {
            if (stat.alive) alive.push_back(stat.id);
        }
        actor_ = alive[select_rng_.uniform_int(alive.size())];
        last_list_ = instances_[actor_]->recommend();
        awaiting_feedback_ = true;
        return last_list_;
    }

    void update(const CascadeFeedback& feedback) override {
        if (!awaiting_feedback_) {
            throw std::logic_error("M2ucbvPolicy: update without a pending recommendation");
        }
        if (!(feedback.list == last_list_)) {
            throw std::invalid_argument("M2ucbvPolicy: feedback list mismatch");
        }
        instances_[actor_]->update(feedback);
        for (const auto& stat : stats_) {
            if (stat.alive && stat.id != actor_) {
                instances_[stat.id]->observe(feedback);
            }
        }
        auto& acting = stats_[actor_];
        acting.rounds_acted += 1;
        if (feedback.stop_position <= list_size_) acting.reward_sum += 1;
        ++rounds_played_;
        awaiting_feedback_ = false;
        if (rounds_played_ % window_ == 0) eliminate();
    }

    void observe(const CascadeFeedback& feedback) override {
        for (const auto& stat : stats_) {
            if (stat.alive) instances_[stat.id]->observe(feedback);
        }
    }

    static double elimination_width(double horizon, std::uint64_t rounds_acted) {
        return std::sqrt(2.0 * std::log(horizon) / static_cast<double>(rounds_acted));
    }

    const std::vector<std::uint64_t>& grid() const { return grid_; }
    const std::vector<InstanceStats>& stats() const { return stats_; }
    std::uint64_t window() const { return window_; }
    std::uint64_t min_samples() const { return n_min_; }
    std::uint64_t rounds_played() const { return rounds_played_; }
    std::uint32_t last_acted() const { return actor_; }
    const MucbvPolicy& instance(std::uint32_t i) const { return *instances_.at(i); }

    std::uint32_t alive_count() const {
        std::uint32_t count = 0;
        for (const auto& stat : stats_) {
            if (stat.alive) ++count;
        }
        return count;
    }

  private:
    // Hoeffding-gap test over realized acting rewards: an instance whose
    // upper bound sits below the best lower bound can no longer be the best
    // policy and is dropped. Instances with fewer than n_min acting rounds
    // are exempt, and the leader always survives.
    void eliminate() {
        const auto T = static_cast<double>(horizon_);
        double best_lower = -1.0;
        std::uint32_t leader = stats_.size();
        for (const auto& stat : stats_) {
            if (!stat.alive || stat.rounds_acted < n_min_) continue;
            const double mean = static_cast<double>(stat.reward_sum) /
                                static_cast<double>(stat.rounds_acted);
            const double lower = mean - elimination_width(T, stat.rounds_acted);
            if (lower > best_lower) {
                best_lower = lower;
                leader = stat.id;
            }
        }
        if (leader == stats_.size()) return;  // nobody testable yet
        std::vector<std::uint32_t> doomed;
        for (const auto& stat : stats_) {
            if (!stat.alive || stat.rounds_acted < n_min_) continue;
            const double mean = static_cast<double>(stat.reward_sum) /
                                static_cast<double>(stat.rounds_acted);
            const double upper = mean + elimination_width(T, stat.rounds_acted);
            if (upper < best_lower) doomed.push_back(stat.id);
        }
        if (doomed.size() + 1 >= alive_count()) {
            // The leader's own bounds keep it out of `doomed`; this guard is
            // for the degenerate case where everyone else goes at once.
            doomed.erase(std::remove(doomed.begin(), doomed.end(), leader),
                         doomed.end());
        }
        if (doomed.size() >= alive_count()) return;  // never empty the grid
        for (std::uint32_t id : doomed) stats_[id].alive = false;
    }

    std::uint32_t num_items_;
    std::uint32_t list_size_;
    std::uint64_t horizon_;
    Rng select_rng_;
    std::uint64_t window_{1};
    std::uint64_t n_min_{1};
    std::vector<std::uint64_t> grid_;
    std::vector<std::unique_ptr<MucbvPolicy>> instances_;
    std::vector<InstanceStats> stats_;
    std::uint64_t rounds_played_{0};
    std::uint32_t actor_{0};
    bool awaiting_feedback_{false};
    RankedList last_list_;
};

// Builds a policy by its configuration name.
inline std::unique_ptr<Policy> make_policy(const std::string& kind,
                                           std::uint32_t num_items,
                                           std::uint32_t list_size,
                                           std::uint64_t horizon,
                                           const PolicyConfig& config,
                                           const ModelSelectConfig& select,
                                           std::uint64_t seed) {
    if (kind == "mucbv") {
        return std::make_unique<MucbvPolicy>(num_items, list_size, horizon, config,
                                             MeanEstimatorKind::calibrated_mom, seed);
    }
    if (kind == "cascade_ucbv") {
        // The baseline assumes no corruption regardless of the configured budget.
        PolicyConfig baseline = config;
        baseline.C_assumed = 0;
        return std::make_unique<MucbvPolicy>(num_items, list_size, horizon, baseline,
                                             MeanEstimatorKind::empirical, seed);
    }
    if (kind == "cbarbar") {
        return std::make_unique<CbarbarPolicy>(num_items, list_size, horizon, config,
                                               seed);
    }
    if (kind == "m2ucbv") {
        return std::make_unique<M2ucbvPolicy>(num_items, list_size, horizon, config,
                                              select, seed);
    }
    throw std::invalid_argument("make_policy: unknown policy kind '" + kind + "'");
}

}  // namespace cascor

#endif  // CASCOR_MODELSELECT_HPP
