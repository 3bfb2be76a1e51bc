// ---------------------------------------------------------------------------
// quickstart: the interaction loop in miniature.
//
// Builds a small cascading-bandit environment, corrupts the first 500 rounds
// of feedback, and plays the model-selection wrapper against the
// corruption-agnostic baseline, printing cumulative regret at checkpoints.
// ---------------------------------------------------------------------------

#include <cstdio>
#include <string>
#include <vector>

#include "cascor/core.hpp"
#include "cascor/corruption.hpp"
#include "cascor/modelselect.hpp"

namespace {

using namespace cascor;

double play(const std::string& kind, const EnvironmentSpec& env,
            std::uint64_t budget, std::uint64_t seed) {
    Rng env_rng = make_stream(seed, kStreamEnvironment);
    Rng corruption_rng = make_stream(seed, kStreamCorruption);
    PolicyConfig config;
    config.estimator.alpha = 0.5;
    const auto policy = make_policy(kind, static_cast<std::uint32_t>(env.num_items()),
                                    env.d, env.horizon, config, ModelSelectConfig{},
                                    seed);
    const AdversaryStrategy adversary = default_adversary(budget);
    CorruptionBudget remaining{budget, 0};

    double regret = 0.0;
    for (std::uint64_t round = 1; round <= env.horizon; ++round) {
        const RankedList chosen = policy->recommend();
        const CascadeFeedback honest = sample_feedback(env, chosen, env_rng);
        const CascadeFeedback shown =
            corrupt(honest, round, remaining, adversary, env, corruption_rng);
        policy->update(shown);
        regret += per_round_regret(env, chosen);
        if (round % 4000 == 0) {
            std::printf("  %-12s round %6llu  cumulative regret %8.2f\n",
                        kind.c_str(), static_cast<unsigned long long>(round), regret);
        }
    }
    return regret;
}

}  // namespace

int main() {
    EnvironmentSpec env;
    env.mu = {0.82, 0.74, 0.66, 0.58, 0.42, 0.34, 0.26, 0.18};
    env.d = 3;
    env.horizon = 20000;
    validate(env);

    const std::uint64_t budget = 500;
    std::printf("%zu items, showing %u per round, %llu rounds, %llu corrupted\n\n",
                env.num_items(), env.d, static_cast<unsigned long long>(env.horizon),
                static_cast<unsigned long long>(budget));

    const double wrapper = play("m2ucbv", env, budget, 7);
    const double baseline = play("cascade_ucbv", env, budget, 7);

    std::printf("\nfinal cumulative regret:\n");
    std::printf("  m2ucbv        %8.2f\n", wrapper);
    std::printf("  cascade_ucbv  %8.2f\n", baseline);
    return 0;
}
