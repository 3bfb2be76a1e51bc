// ---------------------------------------------------------------------------
// ingest_pipeline: from a rating-summary CSV to a playable environment.
//
// Loads the bundled restaurant dataset, shrinks each item's average rating
// toward the dataset mean in proportion to its review count, maps the result
// through a sigmoid to click probabilities, and plays a short run of the
// empirical-mean baseline on the derived environment.
// ---------------------------------------------------------------------------

#include <cstdio>
#include <string>

#include "cascor/core.hpp"
#include "cascor/ingest.hpp"
#include "cascor/modelselect.hpp"

int main() {
    using namespace cascor;

    const std::string path = std::string(CASCOR_DATA_DIR) + "/restaurants_500.csv";
    const auto summaries = load_summaries(path, 1.0, 5.0);
    const IngestConfig config;
    const std::vector<double> mu = click_probabilities(summaries, config);

    std::printf("loaded %zu items from %s\n\n", summaries.size(), path.c_str());
    std::printf("%-12s %10s %8s %12s\n", "item", "avg", "count", "click_prob");
    for (std::size_t i = 0; i < 5; ++i) {
        std::printf("%-12s %10.2f %8llu %12.4f\n", summaries[i].item_id.c_str(),
                    summaries[i].avg_rating,
                    static_cast<unsigned long long>(summaries[i].num_ratings), mu[i]);
    }

    EnvironmentSpec env = make_environment(summaries, config, 4, 2000);
    const RankedList best = optimal_list(env.mu, env.d);
    std::printf("\noptimal list:");
    for (const auto item : best.items) {
        std::printf(" %s (%.4f)", summaries[item].item_id.c_str(), env.mu[item]);
    }
    std::printf("\n");

    Rng env_rng = make_stream(42, kStreamEnvironment);
    const auto policy = make_policy("cascade_ucbv", static_cast<std::uint32_t>(env.num_items()),
                                    env.d, env.horizon, PolicyConfig{},
                                    ModelSelectConfig{}, 42);
    double regret = 0.0;
    for (std::uint64_t round = 1; round <= env.horizon; ++round) {
        const RankedList chosen = policy->recommend();
        policy->update(sample_feedback(env, chosen, env_rng));
        regret += per_round_regret(env, chosen);
    }
    std::printf("\ncascade_ucbv cumulative regret after %llu rounds: %.2f\n",
                static_cast<unsigned long long>(env.horizon), regret);
    return 0;
}
