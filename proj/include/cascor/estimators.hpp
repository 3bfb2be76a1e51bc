// Robust per-item mean estimation for binary click feedback.
//
// The calibrated mean-of-medians estimator shuffles an item's click log into
// odd-sized blocks, takes each block's majority vote, averages the votes, and
// then inverts the majority map q_b to undo the bias that majority voting
// introduces on asymmetric Bernoulli data. A bounded number of corrupted
// samples can sway only the blocks they land in, so the block majority
// filters them out once the log is large relative to the contamination.

#ifndef CASCOR_ESTIMATORS_HPP
#define CASCOR_ESTIMATORS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cascor/rng.hpp"

namespace cascor {

// Append-only record of one item's observed click bits.
class SampleLog {
  public:
    void append(std::uint8_t bit) {
        if (bit > 1) {
            throw std::invalid_argument("SampleLog: bits must be 0 or 1");
        }
        bits_.push_back(bit);
    }

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

  private:
    std::vector<std::uint8_t> bits_;
};

struct CalibrationParams {
    double alpha{16.0};               // block-size constant
    double eta{1e-6};                 // bisection tolerance
    int max_iters{60};                // bisection iteration cap
    std::uint64_t partition_seed{0};  // per-run component of the shuffle stream
};

inline void validate(const CalibrationParams& params) {
    if (!(params.alpha > 0.0)) {
        throw std::invalid_argument("CalibrationParams: alpha must be positive");
    }
    if (!(params.eta > 0.0 && params.eta < 0.5)) {
        throw std::invalid_argument("CalibrationParams: eta must lie in (0, 0.5)");
    }
    if (params.max_iters < 1) {
        throw std::invalid_argument("CalibrationParams: max_iters must be >= 1");
    }
}

struct Estimate {
    double value{0.0};
    bool low_confidence{false};  // set only when the log was empty
};

namespace detail {

// Upper-tail binomial sum for p in (0, 0.5]: starts from the log of the first
// term at r = (b+1)/2 and accumulates the strictly decreasing remainder with
// a term-ratio recurrence, so the result is accurate across the full range of
// magnitudes double can represent.
inline double majority_tail(int b, double p) {
    const int h = (b + 1) / 2;
    const double log_first = std::lgamma(b + 1.0) - std::lgamma(h + 1.0) -
                             std::lgamma(b - h + 1.0) + h * std::log(p) +
                             (b - h) * std::log1p(-p);
    const double odds = p / (1.0 - p);
    double rel = 1.0;
    double acc = 1.0;
    for (int r = h; r < b; ++r) {
        rel *= odds * (b - r) / (r + 1.0);
        acc += rel;
    }
    return std::exp(log_first + std::log(acc));
}

}  // namespace detail

// Majority map: probability that a block of b Bernoulli(p) samples contains a
// majority of ones, q_b(p) = P(Bin(b, p) >= (b+1)/2). Strictly increasing in
// p, with q_b(0) = 0 and q_b(1) = 1. Requires odd b.
inline double q_b(int b, double p) {
    if (b < 1 || b % 2 == 0) {
        throw std::invalid_argument("q_b: b must be a positive odd integer");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("q_b: p must lie in [0,1]");
    }
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    if (b == 1) return p;
    // Majority of ones at p is the complement of majority of zeros at 1 - p.
    if (p > 0.5) return 1.0 - detail::majority_tail(b, 1.0 - p);
    return detail::majority_tail(b, p);
}

// Inverts the majority map by bisection on [0, 1]: returns the first midpoint
// m with |q_b(m) - y| <= eta, or the final bracket midpoint after max_iters
// halvings. Monotone non-decreasing in y.
inline double calibrate(int b, double y, const CalibrationParams& params = {}) {
    if (b < 1 || b % 2 == 0) {
        throw std::invalid_argument("calibrate: b must be a positive odd integer");
    }
    if (!(y >= 0.0 && y <= 1.0)) {
        throw std::invalid_argument("calibrate: y must lie in [0,1]");
    }
    validate(params);
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < params.max_iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double v = q_b(b, mid);
        if (std::fabs(v - y) <= params.eta) return mid;
        if (v < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Raw block-count target ceil(alpha * ln(max(s, 2))); the estimator falls
// back to the plain mean while the log is smaller than this.
inline std::size_t group_count_target(std::size_t s, double alpha) {
    const double raw = std::ceil(alpha * std::log(static_cast<double>(std::max<std::size_t>(s, 2))));
    return static_cast<std::size_t>(raw);
}

// Block size used by the estimator: the group-count target rounded up to the
// next odd integer, so every block has a well-defined binary median.
inline int block_size(std::size_t s, double alpha) {
    std::size_t beta = group_count_target(s, alpha);
    if (beta < 1) beta = 1;
    if (beta % 2 == 0) beta += 1;
    if (beta > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
        throw std::invalid_argument("block_size: block size overflows int");
    }
    return static_cast<int>(beta);
}

// A fresh uniform permutation of {0, ..., s-1}; the first m*beta entries of
// the returned vector define the m blocks of the partition.
inline std::vector<std::uint32_t> partition_indices(std::size_t s, Rng& rng) {
    if (s > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("partition_indices: log too large");
    }
    std::vector<std::uint32_t> indices(s);
    std::iota(indices.begin(), indices.end(), 0);
    rng.shuffle(indices);
    return indices;
}

// Mean of per-block binary medians under an explicit partition: block j holds
// the samples at indices perm[j*beta .. (j+1)*beta - 1], and its median is the
// majority vote. Samples beyond the last full block are ignored.
inline double mean_of_medians(const SampleLog& log, int beta,
                              const std::vector<std::uint32_t>& perm) {
    if (beta < 1 || beta % 2 == 0) {
        throw std::invalid_argument("mean_of_medians: beta must be a positive odd integer");
    }
    if (perm.size() != log.size()) {
        throw std::invalid_argument("mean_of_medians: permutation size mismatch");
    }
    const std::size_t m = log.size() / static_cast<std::size_t>(beta);
    if (m == 0) {
        throw std::invalid_argument("mean_of_medians: log smaller than one block");
    }
    const int majority = (beta + 1) / 2;
    std::size_t votes = 0;
    std::size_t next = 0;
    for (std::size_t j = 0; j < m; ++j) {
        int ones = 0;
        for (int i = 0; i < beta; ++i) {
            ones += log[perm[next++]];
        }
        if (ones >= majority) ++votes;
    }
    return static_cast<double>(votes) / static_cast<double>(m);
}

// Plain arithmetic mean of the log; {0, low_confidence} when empty.
inline Estimate empirical_mean(const SampleLog& log) {
    if (log.empty()) return {0.0, true};
    std::size_t ones = 0;
    for (std::size_t i = 0; i < log.size(); ++i) ones += log[i];
    return {static_cast<double>(ones) / static_cast<double>(log.size()), false};
}

// The calibrated mean-of-medians estimator. With s = |log|:
//   - s below the group-count target: plain mean (not enough samples to block);
//   - otherwise: shuffle, form m = floor(s / beta) blocks of odd size beta,
//     take the majority vote of each, average the votes, and invert q_beta.
// Each call draws a fresh partition from `partition_rng`; identical log,
// generator state, and parameters reproduce the estimate exactly.
inline Estimate calibrated_mean_of_medians(const SampleLog& log,
                                           const CalibrationParams& params,
                                           Rng& partition_rng) {
    validate(params);
    const std::size_t s = log.size();
    if (s == 0) return {0.0, true};
    if (s < group_count_target(s, params.alpha)) return empirical_mean(log);
    const int beta = block_size(s, params.alpha);
    if (s / static_cast<std::size_t>(beta) == 0) {
        // Odd-rounding pushed the block size past the log; blocking is
        // impossible, so use every sample directly.
        return empirical_mean(log);
    }
    const auto perm = partition_indices(s, partition_rng);
    const double mean_med = mean_of_medians(log, beta, perm);
    return {calibrate(beta, mean_med, params), false};
}

// Empirical variance of a Bernoulli mean estimate.
inline double variance_proxy(double mu_hat) {
    if (!(mu_hat >= 0.0 && mu_hat <= 1.0)) {
        throw std::invalid_argument("variance_proxy: mu_hat must lie in [0,1]");
    }
    return mu_hat * (1.0 - mu_hat);
}

}  // namespace cascor

#endif  // CASCOR_ESTIMATORS_HPP
