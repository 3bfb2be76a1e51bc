// Ratings-to-probabilities ingest pipeline.
//
// Real-world rating dumps arrive as per-item summaries (average rating and
// rating count). Items with few ratings carry unreliable averages, so each
// average is first shrunk toward a prior via a Bayesian average weighted by
// the rating count, then squashed through a sigmoid to produce a click
// probability for the simulator.

#ifndef CASCOR_INGEST_HPP
#define CASCOR_INGEST_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascor/core.hpp"

namespace cascor {

struct ItemRatingSummary {
    std::string item_id;
    double avg_rating{0.0};
    std::uint64_t num_ratings{0};
};

// Pipeline knobs; unset optionals derive from the dataset itself.
struct IngestConfig {
    std::optional<double> prior_weight;    // default: mean rating count
    double sigmoid_slope{1.5};
    std::optional<double> sigmoid_center;  // default: dataset mean rating
    double rating_min{1.0};
    double rating_max{5.0};
};

inline void validate(const IngestConfig& config) {
    if (config.prior_weight && !(*config.prior_weight >= 0.0)) {
        throw std::invalid_argument("IngestConfig: prior_weight must be >= 0");
    }
    if (!(config.sigmoid_slope > 0.0)) {
        throw std::invalid_argument("IngestConfig: sigmoid_slope must be positive");
    }
    if (!(config.rating_min < config.rating_max)) {
        throw std::invalid_argument("IngestConfig: rating_min must be below rating_max");
    }
}

// Shrinks an item's average toward the prior mean, weighting the prior as
// `prior_weight` pseudo-ratings: (w m0 + n r) / (w + n).
inline double bayesian_average(const ItemRatingSummary& summary, double prior_mean,
                               double prior_weight) {
    if (!(prior_weight >= 0.0)) {
        throw std::invalid_argument("bayesian_average: prior_weight must be >= 0");
    }
    const auto n = static_cast<double>(summary.num_ratings);
    return (prior_weight * prior_mean + n * summary.avg_rating) / (prior_weight + n);
}

// Maps a rating to a click probability in (0,1), centered at `center` and
// strictly increasing in the rating.
inline double rating_to_click_prob(double rating, double slope, double center) {
    if (!(slope > 0.0)) {
        throw std::invalid_argument("rating_to_click_prob: slope must be positive");
    }
    return 1.0 / (1.0 + std::exp(-slope * (rating - center)));
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& source, std::size_t line,
                                    const std::string& message) {
    throw std::runtime_error(source + ":" + std::to_string(line) + ": " + message);
}

inline bool parse_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

inline bool parse_count(const std::string& text, std::uint64_t& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace detail

// Parses `item_id,avg_rating,num_ratings` CSV rows. Malformed input raises
// std::runtime_error prefixed with "<source_name>:<line>". The header counts
// as line 1; fully empty lines are skipped.
inline std::vector<ItemRatingSummary> parse_summaries(std::istream& in,
                                                      const std::string& source_name,
                                                      double rating_min,
                                                      double rating_max) {
    if (!(rating_min < rating_max)) {
        throw std::invalid_argument("parse_summaries: rating_min must be below rating_max");
    }
    std::string line;
    std::size_t line_number = 0;
    bool saw_header = false;
    std::vector<ItemRatingSummary> summaries;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "item_id,avg_rating,num_ratings") {
                detail::parse_fail(source_name, line_number,
                                   "expected header 'item_id,avg_rating,num_ratings'");
            }
            saw_header = true;
            continue;
        }

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 3) {
            detail::parse_fail(source_name, line_number,
                               "expected 3 comma-separated fields, got " +
                                   std::to_string(fields.size()));
        }

        ItemRatingSummary summary;
        summary.item_id = fields[0];
        if (summary.item_id.empty()) {
            detail::parse_fail(source_name, line_number, "empty item_id");
        }
        if (!detail::parse_double(fields[1], summary.avg_rating)) {
            detail::parse_fail(source_name, line_number,
                               "avg_rating is not a number: '" + fields[1] + "'");
        }
        if (summary.avg_rating < rating_min || summary.avg_rating > rating_max) {
            std::ostringstream message;
            message << "avg_rating out of range [" << rating_min << ", " << rating_max
                    << "]: " << summary.avg_rating;
            detail::parse_fail(source_name, line_number, message.str());
        }
        if (!detail::parse_count(fields[2], summary.num_ratings)) {
            detail::parse_fail(source_name, line_number,
                               "num_ratings is not a non-negative integer: '" +
                                   fields[2] + "'");
        }
        if (summary.num_ratings < 1) {
            detail::parse_fail(source_name, line_number, "num_ratings must be >= 1");
        }
        summaries.push_back(std::move(summary));
    }
    if (!saw_header) {
        detail::parse_fail(source_name, 1, "missing header");
    }
    return summaries;
}

inline std::vector<ItemRatingSummary> load_summaries(const std::string& path,
                                                     double rating_min,
                                                     double rating_max) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_summaries: cannot open '" + path + "'");
    }
    return parse_summaries(in, path, rating_min, rating_max);
}

// Runs the full pipeline over a dataset, producing one click probability per
// summary in input order. The prior mean is always the dataset mean rating;
// unset config fields derive from the dataset (see IngestConfig).
inline std::vector<double> click_probabilities(
    const std::vector<ItemRatingSummary>& summaries, const IngestConfig& config) {
    validate(config);
    if (summaries.empty()) {
        throw std::invalid_argument("click_probabilities: no summaries");
    }
    double rating_total = 0.0;
    double count_total = 0.0;
    for (const auto& summary : summaries) {
        rating_total += summary.avg_rating;
        count_total += static_cast<double>(summary.num_ratings);
    }
    const double prior_mean = rating_total / static_cast<double>(summaries.size());
    const double weight =
        config.prior_weight ? *config.prior_weight
                            : count_total / static_cast<double>(summaries.size());
    const double center = config.sigmoid_center ? *config.sigmoid_center : prior_mean;

    std::vector<double> mu;
    mu.reserve(summaries.size());
    for (const auto& summary : summaries) {
        const double shrunk = bayesian_average(summary, prior_mean, weight);
        mu.push_back(rating_to_click_prob(shrunk, config.sigmoid_slope, center));
    }
    return mu;
}

// Convenience wrapper: dataset straight to a simulator environment.
inline EnvironmentSpec make_environment(const std::vector<ItemRatingSummary>& summaries,
                                        const IngestConfig& config, std::uint32_t d,
                                        std::uint64_t horizon) {
    EnvironmentSpec env{click_probabilities(summaries, config), d, horizon};
    validate(env);
    return env;
}

}  // namespace cascor

#endif  // CASCOR_INGEST_HPP
