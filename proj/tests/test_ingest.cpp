#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cascor/ingest.hpp"

using namespace cascor;

namespace {

std::vector<ItemRatingSummary> parse_text(const std::string& text,
                                          double rating_min = 1.0,
                                          double rating_max = 5.0) {
    std::istringstream in(text);
    return parse_summaries(in, "test.csv", rating_min, rating_max);
}

}  // namespace

TEST_CASE("bayesian average matches hand-computed values", "[ingest]") {
    const ItemRatingSummary summary{"x", 4.5, 10};
    // (50 * 3.7 + 10 * 4.5) / 60 = 230 / 60.
    CHECK(bayesian_average(summary, 3.7, 50.0) ==
          Catch::Approx(230.0 / 60.0).epsilon(1e-12));
    // No prior weight leaves the average untouched.
    CHECK(bayesian_average(summary, 3.7, 0.0) == 4.5);
    // Overwhelming evidence drowns out the prior.
    const ItemRatingSummary popular{"y", 4.5, 1000000000};
    CHECK(bayesian_average(popular, 1.0, 50.0) == Catch::Approx(4.5).margin(1e-6));
    CHECK_THROWS_AS(bayesian_average(summary, 3.7, -1.0), std::invalid_argument);
}

TEST_CASE("bayesian average shrinks toward the prior", "[ingest]") {
    for (double r : {1.0, 2.5, 4.9}) {
        for (double n : {1.0, 20.0, 400.0}) {
            const ItemRatingSummary summary{"x", r, static_cast<std::uint64_t>(n)};
            const double shrunk = bayesian_average(summary, 3.0, 25.0);
            if (r < 3.0) {
                CHECK(shrunk > r);
                CHECK(shrunk < 3.0);
            } else {
                CHECK(shrunk < r);
                CHECK(shrunk > 3.0);
            }
        }
    }
}

TEST_CASE("sigmoid conversion matches hand-computed values", "[ingest]") {
    CHECK(rating_to_click_prob(3.7, 1.5, 3.7) == 0.5);
    // a = 1.5, r - c = 1: 1 / (1 + e^{-1.5}).
    CHECK(rating_to_click_prob(4.7, 1.5, 3.7) ==
          Catch::Approx(0.8175744761936437).epsilon(1e-12));
    CHECK(rating_to_click_prob(-1000.0, 1.5, 3.7) == Catch::Approx(0.0).margin(1e-12));
    CHECK(rating_to_click_prob(-1000.0, 1.5, 3.7) >= 0.0);
    CHECK_THROWS_AS(rating_to_click_prob(4.0, 0.0, 3.7), std::invalid_argument);
    CHECK_THROWS_AS(rating_to_click_prob(4.0, -1.5, 3.7), std::invalid_argument);
}

TEST_CASE("sigmoid conversion is strictly increasing", "[ingest]") {
    double prev = rating_to_click_prob(1.0, 1.5, 3.7);
    for (int i = 1; i <= 40; ++i) {
        const double cur = rating_to_click_prob(1.0 + i * 0.1, 1.5, 3.7);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("csv parsing accepts well-formed input", "[ingest]") {
    const auto rows = parse_text(
        "item_id,avg_rating,num_ratings\n"
        "a,4.5,10\n"
        "b,1.0,1\n"
        "c,5.0,2917\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].item_id == "a");
    CHECK(rows[0].avg_rating == 4.5);
    CHECK(rows[0].num_ratings == 10);
    CHECK(rows[2].item_id == "c");
    CHECK(rows[2].num_ratings == 2917);
}

TEST_CASE("csv parsing tolerates blank lines and CRLF", "[ingest]") {
    const auto rows = parse_text(
        "item_id,avg_rating,num_ratings\r\n"
        "\n"
        "a,4.5,10\r\n"
        "\n");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].item_id == "a");
}

TEST_CASE("csv parsing rejects malformed rows with line numbers", "[ingest]") {
    const std::string header = "item_id,avg_rating,num_ratings\n";

    CHECK_THROWS_WITH(parse_text(header + "a,4.5,10\nb,4.2,0\n"),
                      Catch::Matchers::ContainsSubstring("test.csv:3") &&
                          Catch::Matchers::ContainsSubstring("num_ratings"));
    CHECK_THROWS_WITH(parse_text(header + "a,4.5\n"),
                      Catch::Matchers::ContainsSubstring("test.csv:2") &&
                          Catch::Matchers::ContainsSubstring("3 comma-separated"));
    CHECK_THROWS_WITH(parse_text(header + "a,high,10\n"),
                      Catch::Matchers::ContainsSubstring("test.csv:2") &&
                          Catch::Matchers::ContainsSubstring("avg_rating"));
    CHECK_THROWS_WITH(parse_text(header + "a,7.2,10\n"),
                      Catch::Matchers::ContainsSubstring("test.csv:2") &&
                          Catch::Matchers::ContainsSubstring("out of range"));
    CHECK_THROWS_WITH(parse_text(header + "a,4.5,-3\n"),
                      Catch::Matchers::ContainsSubstring("test.csv:2"));
    CHECK_THROWS_WITH(parse_text(header + ",4.5,10\n"),
                      Catch::Matchers::ContainsSubstring("empty item_id"));
    CHECK_THROWS_WITH(parse_text("wrong,header,line\n"),
                      Catch::Matchers::ContainsSubstring("test.csv:1"));
    CHECK_THROWS_WITH(parse_text(""), Catch::Matchers::ContainsSubstring("missing header"));
}

TEST_CASE("pipeline derives its defaults from the dataset", "[ingest]") {
    // Two items: dataset mean rating 3.5, mean count 20.
    const std::vector<ItemRatingSummary> summaries{{"a", 4.0, 10}, {"b", 3.0, 30}};
    const auto mu = click_probabilities(summaries, IngestConfig{});
    REQUIRE(mu.size() == 2);
    // Shrunk ratings: (20*3.5 + 10*4)/30 = 11/3, (20*3.5 + 30*3)/50 = 3.2;
    // sigmoid around center 3.5 with slope 1.5.
    const double expected_a = 1.0 / (1.0 + std::exp(-1.5 * (11.0 / 3.0 - 3.5)));
    const double expected_b = 1.0 / (1.0 + std::exp(-1.5 * (3.2 - 3.5)));
    CHECK(mu[0] == Catch::Approx(expected_a).epsilon(1e-12));
    CHECK(mu[1] == Catch::Approx(expected_b).epsilon(1e-12));
    CHECK(mu[0] > 0.5);
    CHECK(mu[1] < 0.5);
}

TEST_CASE("pipeline honors explicit overrides", "[ingest]") {
    const std::vector<ItemRatingSummary> summaries{{"a", 4.0, 10}, {"b", 3.0, 30}};
    IngestConfig config;
    config.prior_weight = 0.0;  // no shrinkage
    config.sigmoid_center = 4.0;
    config.sigmoid_slope = 2.0;
    const auto mu = click_probabilities(summaries, config);
    CHECK(mu[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(mu[1] == Catch::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-12));
}

TEST_CASE("pipeline monotonicity in the raw average", "[ingest]") {
    IngestConfig config;
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double rating = 1.0 + i * 0.1;
        const std::vector<ItemRatingSummary> summaries{
            {"x", rating, 25}, {"anchor_low", 1.0, 10}, {"anchor_high", 5.0, 10}};
        const double p = click_probabilities(summaries, config)[0];
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        if (i > 0) CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("pipeline validates its configuration", "[ingest]") {
    const std::vector<ItemRatingSummary> summaries{{"a", 4.0, 10}};
    IngestConfig bad;
    bad.sigmoid_slope = 0.0;
    CHECK_THROWS_AS(click_probabilities(summaries, bad), std::invalid_argument);
    bad = IngestConfig{};
    bad.prior_weight = -2.0;
    CHECK_THROWS_AS(click_probabilities(summaries, bad), std::invalid_argument);
    bad = IngestConfig{};
    bad.rating_min = 5.0;
    bad.rating_max = 1.0;
    CHECK_THROWS_AS(click_probabilities(summaries, bad), std::invalid_argument);
    CHECK_THROWS_AS(click_probabilities({}, IngestConfig{}), std::invalid_argument);
}

TEST_CASE("bundled fixtures load into valid environments", "[ingest]") {
    const std::string data_dir = CASCOR_DATA_DIR;
    for (const std::string name :
         {"restaurants_500.csv", "movies_500.csv", "artists_500.csv"}) {
        const auto summaries = load_summaries(data_dir + "/" + name, 1.0, 5.0);
        REQUIRE(summaries.size() == 500);
        const EnvironmentSpec env = make_environment(summaries, IngestConfig{}, 4, 1000);
        REQUIRE(env.mu.size() == 500);
        for (double p : env.mu) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
    CHECK_THROWS_AS(load_summaries(data_dir + "/absent.csv", 1.0, 5.0),
                    std::runtime_error);
}
