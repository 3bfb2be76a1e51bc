// Learner policies for the cascading bandit.
//
// MucbvPolicy plays a variance-aware UCB over per-item mean estimates, with
// an optional corruption-hardened estimator and an up-front warm-up schedule
// sized by the corruption budget it assumes. The same class with the plain
// empirical mean and no warm-up is the CascadeUCB-V baseline. CbarbarPolicy
// is an epoch-based elimination scheme that samples candidate lists with
// probabilities proportional to per-item pull targets derived from gap
// estimates.
//
// All policies follow a strict step protocol: recommend() produces a ranked
// list, update() consumes the feedback for exactly that list, and the two
// must alternate. observe() feeds a policy feedback from a round it did not
// play; it never advances the policy's own round clock.

#ifndef CASCOR_POLICIES_HPP
#define CASCOR_POLICIES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascor/core.hpp"
#include "cascor/estimators.hpp"
#include "cascor/rng.hpp"

namespace cascor {

struct PolicyConfig {
    double A{2.0};                   // variance-term radius constant
    double B{3.0};                   // range-term radius constant
    std::uint64_t C_assumed{0};      // corruption budget assumed by the warm-up
    double delta{0.1};               // confidence level for epoch-based policies
    CalibrationParams estimator{};   // mean-of-medians parameters
};

inline void validate(const PolicyConfig& config) {
    if (!(config.A > 0.0)) {
        throw std::invalid_argument("PolicyConfig: A must be positive");
    }
    if (!(config.B > 0.0)) {
        throw std::invalid_argument("PolicyConfig: B must be positive");
    }
    if (!(config.delta > 0.0 && config.delta < 1.0)) {
        throw std::invalid_argument("PolicyConfig: delta must lie in (0,1)");
    }
    validate(config.estimator);
}

enum class MeanEstimatorKind {
    calibrated_mom,  // calibrated mean-of-medians
    empirical,       // plain sample mean
};

// Uniform step interface shared by all learners.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual RankedList recommend() = 0;
    virtual void update(const CascadeFeedback& feedback) = 0;
    virtual void observe(const CascadeFeedback& feedback) = 0;
};

// Variance-aware UCB with corruption-budget warm-up.
//
// The first 10 * K * C_assumed rounds are a deterministic warm-up: item k is
// the target for rounds [k*10C, (k+1)*10C), placed at position 1 so it is
// examined every time, with the d-1 least-observed other items behind it.
// Afterwards each round scores every item with
//   index_k = min(mu_k + A*sqrt(v_k ln t / s_k) + B ln t / s_k, 1)
// where s_k = max(1, |log_k|), v_k = mu_k(1 - mu_k), and t counts this
// policy's own rounds; the recommendation is the top d by index, descending,
// ties to the smaller item id.
class MucbvPolicy : public Policy {
  public:
    MucbvPolicy(std::uint32_t num_items, std::uint32_t list_size,
                std::uint64_t horizon, const PolicyConfig& config,
                MeanEstimatorKind estimator_kind, std::uint64_t seed)
        : num_items_(num_items),
          list_size_(list_size),
          horizon_(horizon),
          config_(config),
          estimator_kind_(estimator_kind),
          estimator_rng_(
              make_stream(mix64(seed, config.estimator.partition_seed), kStreamPolicy)),
          items_(num_items) {
        if (num_items_ < 1) {
            throw std::invalid_argument("MucbvPolicy: need at least one item");
        }
        if (list_size_ < 1 || list_size_ > num_items_) {
            throw std::invalid_argument("MucbvPolicy: list size must lie in [1, K]");
        }
        if (horizon_ < 1) {
            throw std::invalid_argument("MucbvPolicy: horizon must be >= 1");
        }
        validate(config_);
        warmup_rounds_ = 10 * static_cast<std::uint64_t>(num_items_) * config_.C_assumed;
    }

    std::string name() const override {
        return estimator_kind_ == MeanEstimatorKind::calibrated_mom ? "mucbv"
                                                                    : "cascade_ucbv";
    }

    RankedList recommend() override {
        if (awaiting_feedback_) {
            throw std::logic_error("MucbvPolicy: recommend called with feedback pending");
        }
        last_list_ = rounds_played_ < warmup_rounds_ ? warmup_list() : ucb_list();
        awaiting_feedback_ = true;
        return last_list_;
    }

    void update(const CascadeFeedback& feedback) override {
        if (!awaiting_feedback_) {
            throw std::logic_error("MucbvPolicy: update without a pending recommendation");
        }
        if (!(feedback.list == last_list_)) {
            throw std::invalid_argument("MucbvPolicy: feedback list mismatch");
        }
        append_observations(feedback);
        ++rounds_played_;
        awaiting_feedback_ = false;
    }

    void observe(const CascadeFeedback& feedback) override {
        append_observations(feedback);
    }

    std::uint64_t rounds_played() const { return rounds_played_; }
    std::uint64_t warmup_rounds() const { return warmup_rounds_; }
    bool in_warmup() const { return rounds_played_ < warmup_rounds_; }
    const SampleLog& log(std::uint32_t item) const { return items_.at(item).log; }

    // Index values from the most recent UCB recommendation; empty while the
    // policy is still in warm-up.
    const std::vector<double>& current_indices() const { return last_indices_; }

    static double confidence_radius(double A, double B, double variance,
                                    double log_t, double samples) {
        return A * std::sqrt(variance * log_t / samples) + B * log_t / samples;
    }

  private:
    struct ItemState {
        SampleLog log;
        Estimate estimate{};
        std::size_t estimate_at_size{std::numeric_limits<std::size_t>::max()};
    };

    RankedList warmup_list() {
        const std::uint64_t per_item = 10 * config_.C_assumed;
        const auto target = static_cast<std::uint32_t>(rounds_played_ / per_item);
        std::vector<std::uint32_t> others;
        others.reserve(num_items_ - 1);
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            if (k != target) others.push_back(k);
        }
        std::stable_sort(others.begin(), others.end(),
                         [this](std::uint32_t a, std::uint32_t b) {
                             return items_[a].log.size() < items_[b].log.size();
                         });
        RankedList list;
        list.items.push_back(target);
        list.items.insert(list.items.end(), others.begin(),
                          others.begin() + (list_size_ - 1));
        return list;
    }

    RankedList ucb_list() {
        const double log_t = std::log(static_cast<double>(rounds_played_ + 1));
        last_indices_.assign(num_items_, 0.0);
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            auto& item = items_[k];
            if (item.estimate_at_size != item.log.size()) {
                item.estimate =
                    estimator_kind_ == MeanEstimatorKind::calibrated_mom
                        ? calibrated_mean_of_medians(item.log, config_.estimator,
                                                     estimator_rng_)
                        : empirical_mean(item.log);
                item.estimate_at_size = item.log.size();
            }
            const double mu = item.estimate.value;
            const double samples =
                static_cast<double>(std::max<std::size_t>(1, item.log.size()));
            const double rho = confidence_radius(config_.A, config_.B,
                                                 variance_proxy(mu), log_t, samples);
            last_indices_[k] = std::min(mu + rho, 1.0);
        }
        std::vector<std::uint32_t> order(num_items_);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [this](std::uint32_t a, std::uint32_t b) {
                             return last_indices_[a] > last_indices_[b];
                         });
        RankedList list;
        list.items.assign(order.begin(), order.begin() + list_size_);
        return list;
    }

    void append_observations(const CascadeFeedback& feedback) {
        validate_feedback(feedback, static_cast<std::uint32_t>(feedback.list.items.size()));
        for (std::size_t i = 0; i < feedback.observed.size(); ++i) {
            items_.at(feedback.list.items[i]).log.append(feedback.observed[i]);
        }
    }

    std::uint32_t num_items_;
    std::uint32_t list_size_;
    std::uint64_t horizon_;
    PolicyConfig config_;
    MeanEstimatorKind estimator_kind_;
    Rng estimator_rng_;
    std::vector<ItemState> items_;
    std::uint64_t warmup_rounds_{0};
    std::uint64_t rounds_played_{0};
    bool awaiting_feedback_{false};
    RankedList last_list_;
    std::vector<double> last_indices_;
};

// Epoch-based elimination policy.
//
// Epoch m assigns each item k a pull target n_k = ceil(lambda d^2 / gap_k^2)
// for its designated list (item k up front, best d-1 others behind it) and
// the incumbent best list a target n_star = ceil(lambda d^2 K 2^{(m-1)/2});
// every round draws one of the K+1 lists with probability proportional to
// its target. When the epoch's N = sum of targets rounds are spent, per-item
// means over the designated-list rounds refresh the gap estimates via
//   gap_k' = max(2^{-m/4}, r_star - r_k, gap_k / 2)
// and the next epoch begins. lambda = 1024 ln^2((8K/delta) ln^2 T).
class CbarbarPolicy : public Policy {
  public:
    // One closed epoch's bookkeeping, kept for diagnostics.
    struct EpochRecord {
        std::uint64_t epoch{0};
        std::vector<double> gaps_at_start;
        std::vector<std::uint64_t> item_targets;
        std::uint64_t star_target{0};
        std::uint64_t target_rounds{0};
        std::uint64_t realized_rounds{0};
        std::vector<double> mu_hat_at_close;
        std::vector<double> gaps_after;
    };

    CbarbarPolicy(std::uint32_t num_items, std::uint32_t list_size,
                  std::uint64_t horizon, const PolicyConfig& config,
                  std::uint64_t seed)
        : num_items_(num_items),
          list_size_(list_size),
          horizon_(horizon),
          config_(config),
          draw_rng_(make_stream(seed, kStreamPolicy)),
          gaps_(num_items, 1.0),
          mu_hat_(num_items, 0.0) {
        if (num_items_ < 1) {
            throw std::invalid_argument("CbarbarPolicy: need at least one item");
        }
        if (list_size_ < 1 || list_size_ > num_items_) {
            throw std::invalid_argument("CbarbarPolicy: list size must lie in [1, K]");
        }
        if (horizon_ < 2) {
            throw std::invalid_argument("CbarbarPolicy: horizon must be >= 2");
        }
        validate(config_);
        const double log_T = std::log(static_cast<double>(horizon_));
        const double inner = (8.0 * num_items_ / config_.delta) * log_T * log_T;
        const double log_inner = std::log(inner);
        lambda_ = 1024.0 * log_inner * log_inner;
        init_epoch();
    }

    std::string name() const override { return "cbarbar"; }

    RankedList recommend() override {
        if (awaiting_feedback_) {
            throw std::logic_error("CbarbarPolicy: recommend called with feedback pending");
        }
        std::uint64_t u = draw_rng_.uniform_int(epoch_target_);
        last_draw_ = num_items_;
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            if (u < item_targets_[k]) {
                last_draw_ = k;
                break;
            }
            u -= item_targets_[k];
        }
        last_list_ = last_draw_ < num_items_ ? item_lists_[last_draw_] : star_list_;
        awaiting_feedback_ = true;
        return last_list_;
    }

    void update(const CascadeFeedback& feedback) override {
        if (!awaiting_feedback_) {
            throw std::logic_error("CbarbarPolicy: update without a pending recommendation");
        }
        if (!(feedback.list == last_list_)) {
            throw std::invalid_argument("CbarbarPolicy: feedback list mismatch");
        }
        validate_feedback(feedback, list_size_);
        if (last_draw_ < num_items_) {
            // The drawn item sits at position 1 of its designated list, so
            // its click bit is always the first observed entry.
            item_sums_[last_draw_] += feedback.observed[0];
        }
        realized_draws_[last_draw_] += 1;
        ++epoch_rounds_;
        ++rounds_played_;
        awaiting_feedback_ = false;
        if (epoch_rounds_ == epoch_target_) close_epoch();
    }

    // Feedback from rounds this policy did not play carries no designated
    // list, so it contributes nothing to the per-list means and is ignored.
    void observe(const CascadeFeedback&) override {}

    double lambda_value() const { return lambda_; }
    std::uint64_t epoch_index() const { return epoch_; }
    std::uint64_t rounds_played() const { return rounds_played_; }
    std::uint64_t epoch_rounds() const { return epoch_rounds_; }
    std::uint64_t epoch_target() const { return epoch_target_; }
    std::uint64_t star_target() const { return star_target_; }
    const std::vector<std::uint64_t>& item_targets() const { return item_targets_; }
    const std::vector<double>& gaps() const { return gaps_; }
    const std::vector<double>& mu_hats() const { return mu_hat_; }
    const RankedList& star_list() const { return star_list_; }
    const RankedList& item_list(std::uint32_t k) const { return item_lists_.at(k); }
    // Index of the most recently drawn list; num_items() means the best list.
    std::uint32_t last_draw() const { return last_draw_; }
    const std::vector<EpochRecord>& history() const { return history_; }

  private:
    void init_epoch() {
        const double d2 = static_cast<double>(list_size_) * list_size_;
        item_targets_.assign(num_items_, 0);
        epoch_target_ = 0;
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            const double raw = lambda_ * d2 / (gaps_[k] * gaps_[k]);
            item_targets_[k] = static_cast<std::uint64_t>(std::ceil(raw));
            epoch_target_ += item_targets_[k];
        }
        const double star_raw = lambda_ * d2 * num_items_ *
                                std::pow(2.0, (static_cast<double>(epoch_) - 1.0) / 2.0);
        star_target_ = static_cast<std::uint64_t>(std::ceil(star_raw));
        epoch_target_ += star_target_;

        star_list_ = optimal_list(mu_hat_, list_size_);
        item_lists_.clear();
        item_lists_.reserve(num_items_);
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            item_lists_.push_back(designated_list(k));
        }

        item_sums_.assign(num_items_, 0);
        realized_draws_.assign(num_items_ + 1, 0);
        epoch_rounds_ = 0;

        EpochRecord record;
        record.epoch = epoch_;
        record.gaps_at_start = gaps_;
        record.item_targets = item_targets_;
        record.star_target = star_target_;
        record.target_rounds = epoch_target_;
        history_.push_back(std::move(record));
    }

    // Item k at position 1 followed by the d-1 highest current means among
    // the other items, descending, ties to the smaller id.
    RankedList designated_list(std::uint32_t k) const {
        std::vector<std::uint32_t> others;
        others.reserve(num_items_ - 1);
        for (std::uint32_t j = 0; j < num_items_; ++j) {
            if (j != k) others.push_back(j);
        }
        std::stable_sort(others.begin(), others.end(),
                         [this](std::uint32_t a, std::uint32_t b) {
                             return mu_hat_[a] > mu_hat_[b];
                         });
        RankedList list;
        list.items.push_back(k);
        list.items.insert(list.items.end(), others.begin(),
                          others.begin() + (list_size_ - 1));
        return list;
    }

    void close_epoch() {
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            if (realized_draws_[k] == 0) continue;  // keep the previous mean
            const double mean = static_cast<double>(item_sums_[k]) /
                                static_cast<double>(item_targets_[k]);
            mu_hat_[k] = std::clamp(mean, 0.0, 1.0);
        }
        const double r_star = expected_reward(optimal_list(mu_hat_, list_size_), mu_hat_);
        const double floor = std::pow(2.0, -static_cast<double>(epoch_) / 4.0);
        std::vector<double> next_gaps(num_items_);
        for (std::uint32_t k = 0; k < num_items_; ++k) {
            const double r_k = expected_reward(designated_list(k), mu_hat_);
            next_gaps[k] = std::max({floor, r_star - r_k, gaps_[k] / 2.0});
        }

        EpochRecord& record = history_.back();
        record.realized_rounds = epoch_rounds_;
        record.mu_hat_at_close = mu_hat_;
        record.gaps_after = next_gaps;

        gaps_ = std::move(next_gaps);
        ++epoch_;
        init_epoch();
    }

    std::uint32_t num_items_;
    std::uint32_t list_size_;
    std::uint64_t horizon_;
    PolicyConfig config_;
    Rng draw_rng_;
    double lambda_{0.0};
    std::uint64_t epoch_{1};
    std::vector<double> gaps_;
    std::vector<double> mu_hat_;
    std::vector<std::uint64_t> item_targets_;
    std::uint64_t star_target_{0};
    std::uint64_t epoch_target_{0};
    std::vector<RankedList> item_lists_;
    RankedList star_list_;
    std::vector<std::uint64_t> item_sums_;
    std::vector<std::uint64_t> realized_draws_;
    std::uint64_t epoch_rounds_{0};
    std::uint64_t rounds_played_{0};
    std::uint32_t last_draw_{0};
    bool awaiting_feedback_{false};
    RankedList last_list_;
    std::vector<EpochRecord> history_;
};

}  // namespace cascor

#endif  // CASCOR_POLICIES_HPP
