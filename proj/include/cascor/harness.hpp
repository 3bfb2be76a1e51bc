// Experiment harness: configuration -> runs -> trace files -> summaries.
//
// An experiment is a cross product of policy kinds and seeds over one
// environment and one adversary. Every run is driven by three decoupled
// random streams derived from the seed (environment draws, corruption
// extensions, policy internals), so a rerun of the same configuration
// reproduces every trace byte for byte, independent of the job count.

#ifndef CASCOR_HARNESS_HPP
#define CASCOR_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cascor/config.hpp"
#include "cascor/core.hpp"
#include "cascor/corruption.hpp"
#include "cascor/ingest.hpp"
#include "cascor/modelselect.hpp"
#include "cascor/policies.hpp"
#include "cascor/rng.hpp"

namespace cascor {

struct ExperimentConfig {
    EnvironmentSpec env;
    AdversaryStrategy adversary;
    std::uint64_t corruption_budget{0};
    std::vector<std::string> policy_kinds;
    PolicyConfig policy;
    ModelSelectConfig select;
    std::vector<std::uint64_t> seeds;
    std::string out_dir{"out"};
    std::uint32_t jobs{1};
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        parts.push_back(trim(
            text.substr(start, comma == std::string::npos ? comma : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return parts;
}

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "env.mu",
        "env.ingest_file",
        "env.d",
        "env.horizon",
        "ingest.prior_weight",
        "ingest.sigmoid_slope",
        "ingest.sigmoid_center",
        "ingest.rating_min",
        "ingest.rating_max",
        "corruption.kind",
        "corruption.budget",
        "corruption.window_start",
        "corruption.window_len",
        "estimator.alpha",
        "estimator.eta",
        "estimator.max_iters",
        "estimator.partition_seed",
        "policy.kind",
        "policy.A",
        "policy.B",
        "policy.C_assumed",
        "policy.delta",
        "modelselect.window",
        "modelselect.n_min",
        "modelselect.grid_max_exp",
        "run.seeds",
        "run.out",
        "run.jobs",
    };
    return keys;
}

inline std::string format_fixed(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.9f", value);
    return buffer;
}

}  // namespace detail

// Resolves the output directory: the config value wins, then the CASCOR_OUT
// environment variable, then "out".
inline std::string resolve_out_dir(const Config& config) {
    if (config.has("run.out")) return config.get_string("run.out");
    if (const char* env_dir = std::getenv("CASCOR_OUT")) {
        if (env_dir[0] != '\0') return env_dir;
    }
    return "out";
}

// Builds a validated experiment from a parsed configuration. Unknown keys
// are rejected so typos fail loudly, and every requested policy kind is
// constructed once up front so configuration errors surface before any
// rounds are played.
inline ExperimentConfig make_experiment(const Config& config) {
    for (const auto& [key, value] : config.entries()) {
        if (detail::known_config_keys().count(key) == 0) {
            throw std::invalid_argument("make_experiment: unknown key '" + key + "'");
        }
    }

    ExperimentConfig experiment;

    const bool has_mu = config.has("env.mu");
    const bool has_file = config.has("env.ingest_file");
    if (has_mu == has_file) {
        throw std::invalid_argument(
            "make_experiment: exactly one of env.mu and env.ingest_file is required");
    }
    experiment.env.d = static_cast<std::uint32_t>(config.get_uint("env.d"));
    experiment.env.horizon = config.get_uint("env.horizon");
    if (has_mu) {
        for (const auto& token : detail::split_list(config.get_string("env.mu"))) {
            double p = 0.0;
            if (!detail::parse_double(token, p)) {
                throw std::invalid_argument("make_experiment: env.mu entry '" + token +
                                            "' is not a number");
            }
            experiment.env.mu.push_back(p);
        }
    } else {
        IngestConfig ingest;
        if (config.has("ingest.prior_weight")) {
            ingest.prior_weight = config.get_double("ingest.prior_weight");
        }
        ingest.sigmoid_slope = config.get_double_or("ingest.sigmoid_slope", 1.5);
        if (config.has("ingest.sigmoid_center")) {
            ingest.sigmoid_center = config.get_double("ingest.sigmoid_center");
        }
        ingest.rating_min = config.get_double_or("ingest.rating_min", 1.0);
        ingest.rating_max = config.get_double_or("ingest.rating_max", 5.0);
        const auto summaries = load_summaries(config.get_string("env.ingest_file"),
                                              ingest.rating_min, ingest.rating_max);
        experiment.env.mu = click_probabilities(summaries, ingest);
    }
    validate(experiment.env);

    experiment.corruption_budget = config.get_uint_or("corruption.budget", 0);
    if (config.has("corruption.kind")) {
        const std::string kind = config.get_string("corruption.kind");
        if (kind == "none") {
            experiment.adversary.kind = AdversaryKind::none;
        } else if (kind == "flip_early") {
            experiment.adversary.kind = AdversaryKind::flip_early;
        } else if (kind == "flip_window") {
            experiment.adversary.kind = AdversaryKind::flip_window;
            experiment.adversary.window_start = config.get_uint("corruption.window_start");
            experiment.adversary.window_len = config.get_uint("corruption.window_len");
        } else {
            throw std::invalid_argument("make_experiment: unknown corruption.kind '" +
                                        kind + "'");
        }
    } else {
        experiment.adversary = default_adversary(experiment.corruption_budget);
    }

    experiment.policy.A = config.get_double_or("policy.A", 2.0);
    experiment.policy.B = config.get_double_or("policy.B", 3.0);
    experiment.policy.C_assumed = config.get_uint_or("policy.C_assumed", 0);
    experiment.policy.delta = config.get_double_or("policy.delta", 0.1);
    experiment.policy.estimator.alpha = config.get_double_or("estimator.alpha", 16.0);
    experiment.policy.estimator.eta = config.get_double_or("estimator.eta", 1e-6);
    experiment.policy.estimator.max_iters =
        static_cast<std::uint32_t>(config.get_uint_or("estimator.max_iters", 60));
    experiment.policy.estimator.partition_seed =
        config.get_uint_or("estimator.partition_seed", 0);
    validate(experiment.policy);

    experiment.select.window = config.get_uint_or("modelselect.window", 0);
    experiment.select.n_min = config.get_uint_or("modelselect.n_min", 0);
    experiment.select.grid_max_exp = config.get_uint_or("modelselect.grid_max_exp", 0);

    experiment.policy_kinds = detail::split_list(config.get_string("policy.kind"));
    for (std::size_t i = 0; i < experiment.policy_kinds.size(); ++i) {
        if (experiment.policy_kinds[i].empty()) {
            throw std::invalid_argument("make_experiment: empty policy kind");
        }
        for (std::size_t j = i + 1; j < experiment.policy_kinds.size(); ++j) {
            if (experiment.policy_kinds[i] == experiment.policy_kinds[j]) {
                throw std::invalid_argument("make_experiment: duplicate policy kind '" +
                                            experiment.policy_kinds[i] + "'");
            }
        }
    }

    const std::uint64_t K = experiment.env.num_items();
    const std::uint64_t warmup = 10 * K * experiment.policy.C_assumed;
    for (const auto& kind : experiment.policy_kinds) {
        if (kind == "mucbv" && warmup > experiment.env.horizon) {
            throw std::invalid_argument(
                "make_experiment: mucbv warm-up of " + std::to_string(warmup) +
                " rounds exceeds the horizon " + std::to_string(experiment.env.horizon));
        }
        make_policy(kind, static_cast<std::uint32_t>(K), experiment.env.d,
                    experiment.env.horizon, experiment.policy, experiment.select, 0);
    }

    experiment.seeds = parse_seed_spec(config.get_string_or("run.seeds", "1"));
    experiment.out_dir = resolve_out_dir(config);
    experiment.jobs = static_cast<std::uint32_t>(config.get_uint_or("run.jobs", 1));
    if (experiment.jobs < 1) {
        throw std::invalid_argument("make_experiment: run.jobs must be at least 1");
    }
    return experiment;
}

struct RunResult {
    std::string policy;
    std::uint64_t seed{0};
    std::vector<TraceRow> rows;
};

// Plays one policy against the configured environment and adversary for the
// full horizon. The round loop follows the interaction protocol exactly:
// recommend, draw honest feedback, let the adversary rewrite it (spending
// budget), show the policy only the corrupted version, and score regret
// against the true means.
inline RunResult run_single(const ExperimentConfig& experiment, const std::string& kind,
                            std::uint64_t seed) {
    const EnvironmentSpec& env = experiment.env;
    Rng env_rng = make_stream(seed, kStreamEnvironment);
    Rng corruption_rng = make_stream(seed, kStreamCorruption);
    const auto policy =
        make_policy(kind, static_cast<std::uint32_t>(env.num_items()), env.d,
                    env.horizon, experiment.policy, experiment.select, seed);
    CorruptionBudget budget{experiment.corruption_budget, 0};

    RunResult result;
    result.policy = kind;
    result.seed = seed;
    result.rows.reserve(env.horizon);
    double cumulative = 0.0;
    for (std::uint64_t round = 1; round <= env.horizon; ++round) {
        const RankedList chosen = policy->recommend();
        const CascadeFeedback honest = sample_feedback(env, chosen, env_rng);
        const std::uint64_t spent_before = budget.spent;
        const CascadeFeedback shown = corrupt(honest, round, budget,
                                              experiment.adversary, env, corruption_rng);
        policy->update(shown);

        TraceRow row;
        row.round = round;
        row.chosen = chosen;
        row.per_round_regret = per_round_regret(env, chosen);
        cumulative += row.per_round_regret;
        row.cumulative_regret = cumulative;
        row.corruption_spent = static_cast<std::uint32_t>(budget.spent - spent_before);
        result.rows.push_back(std::move(row));
    }
    return result;
}

// Runs the full policy-by-seed cross product. Results are ordered policy
// major, seed minor, matching the configuration order. With jobs > 1 the
// runs are spread over a small thread pool; each run is independent and
// deterministic, so the schedule cannot change any result.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& experiment) {
    struct Task {
        std::string kind;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& kind : experiment.policy_kinds) {
        for (const auto seed : experiment.seeds) {
            tasks.push_back(Task{kind, seed});
        }
    }
    std::vector<RunResult> results(tasks.size());
    const std::size_t workers =
        std::min<std::size_t>(experiment.jobs, tasks.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            results[i] = run_single(experiment, tasks[i].kind, tasks[i].seed);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&experiment, &tasks, &results, &next] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                results[i] = run_single(experiment, tasks[i].kind, tasks[i].seed);
            }
        });
    }
    for (auto& worker : pool) worker.join();
    return results;
}

inline std::string trace_filename(const std::string& out_dir, const std::string& policy,
                                  std::uint64_t seed) {
    return out_dir + "/trace_" + policy + "_seed" + std::to_string(seed) + ".csv";
}

// Writes one run as CSV. The chosen list is pipe-separated inside its field
// so the file stays a plain 7-column CSV.
inline void write_trace_csv(std::ostream& out, const RunResult& result) {
    out << "round,policy,seed,chosen_list,per_round_regret,cumulative_regret,"
           "corruption_spent\n";
    for (const auto& row : result.rows) {
        out << row.round << ',' << result.policy << ',' << result.seed << ',';
        for (std::size_t i = 0; i < row.chosen.items.size(); ++i) {
            if (i > 0) out << '|';
            out << row.chosen.items[i];
        }
        out << ',' << detail::format_fixed(row.per_round_regret) << ','
            << detail::format_fixed(row.cumulative_regret) << ','
            << row.corruption_spent << '\n';
    }
}

// Writes every run to `<out_dir>/trace_<policy>_seed<seed>.csv` and returns
// the file names in run order.
inline std::vector<std::string> write_traces(const ExperimentConfig& experiment,
                                             const std::vector<RunResult>& results) {
    std::filesystem::create_directories(experiment.out_dir);
    std::vector<std::string> paths;
    paths.reserve(results.size());
    for (const auto& result : results) {
        const std::string path =
            trace_filename(experiment.out_dir, result.policy, result.seed);
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("write_traces: cannot open '" + path + "'");
        }
        write_trace_csv(out, result);
        paths.push_back(path);
    }
    return paths;
}

// Final state of one run, the unit the summary statistics are computed from.
struct RunFinal {
    std::string policy;
    std::uint64_t seed{0};
    std::uint64_t rounds{0};
    double final_regret{0.0};
};

struct SummaryRow {
    std::string policy;
    std::size_t runs{0};
    double mean_final{0.0};
    double median_final{0.0};
    double min_final{0.0};
    double max_final{0.0};
    // Percent improvement of this policy's mean final regret over each other
    // policy's: 100 * (other - ours) / other. Positive means this policy
    // accumulated less regret.
    std::map<std::string, double> improvement_vs;
};

inline RunFinal final_of(const RunResult& result) {
    if (result.rows.empty()) {
        throw std::invalid_argument("final_of: run '" + result.policy + "' seed " +
                                    std::to_string(result.seed) + " has no rows");
    }
    return RunFinal{result.policy, result.seed, result.rows.size(),
                    result.rows.back().cumulative_regret};
}

// Aggregates final regrets per policy and computes pairwise improvements.
// All runs must cover the same number of rounds; comparing final regrets
// across different horizons would be meaningless.
inline std::vector<SummaryRow> summarize_finals(const std::vector<RunFinal>& finals) {
    if (finals.empty()) {
        throw std::invalid_argument("summarize_finals: no runs");
    }
    for (const auto& final : finals) {
        if (final.rounds != finals.front().rounds) {
            throw std::invalid_argument(
                "summarize_finals: runs cover different horizons (" +
                std::to_string(finals.front().rounds) + " vs " +
                std::to_string(final.rounds) + " rounds)");
        }
    }
    std::map<std::string, std::vector<double>> by_policy;
    for (const auto& final : finals) {
        by_policy[final.policy].push_back(final.final_regret);
    }
    std::vector<SummaryRow> rows;
    for (auto& [policy, values] : by_policy) {
        std::sort(values.begin(), values.end());
        SummaryRow row;
        row.policy = policy;
        row.runs = values.size();
        double sum = 0.0;
        for (const auto v : values) sum += v;
        row.mean_final = sum / static_cast<double>(values.size());
        const std::size_t mid = values.size() / 2;
        row.median_final = values.size() % 2 == 1
                               ? values[mid]
                               : 0.5 * (values[mid - 1] + values[mid]);
        row.min_final = values.front();
        row.max_final = values.back();
        rows.push_back(std::move(row));
    }
    for (auto& row : rows) {
        for (const auto& other : rows) {
            if (other.policy == row.policy) continue;
            const double improvement =
                other.mean_final > 0.0
                    ? 100.0 * (other.mean_final - row.mean_final) / other.mean_final
                    : 0.0;
            row.improvement_vs[other.policy] = improvement;
        }
    }
    return rows;
}

inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& results) {
    std::vector<RunFinal> finals;
    finals.reserve(results.size());
    for (const auto& result : results) finals.push_back(final_of(result));
    return summarize_finals(finals);
}

// Reads the final state of one trace CSV previously written by
// write_trace_csv: the policy and seed columns plus the last cumulative
// regret, with the row count recovered from the number of data lines.
inline RunFinal read_trace_final(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(source + ":1: missing header");
    }
    RunFinal final;
    std::uint64_t rows = 0;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(
                line.substr(start, comma == std::string::npos ? comma : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 7) {
            throw std::runtime_error(source + ":" + std::to_string(line_number) +
                                     ": expected 7 fields, got " +
                                     std::to_string(fields.size()));
        }
        std::uint64_t seed = 0;
        double cumulative = 0.0;
        if (!detail::parse_count(fields[2], seed) ||
            !detail::parse_double(fields[5], cumulative)) {
            throw std::runtime_error(source + ":" + std::to_string(line_number) +
                                     ": malformed seed or cumulative_regret field");
        }
        final.policy = fields[1];
        final.seed = seed;
        final.final_regret = cumulative;
        ++rows;
    }
    if (rows == 0) {
        throw std::runtime_error(source + ": no data rows");
    }
    final.rounds = rows;
    return final;
}

// Summarizes every trace_*.csv in a directory, in sorted filename order.
inline std::vector<SummaryRow> summarize_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv") {
            paths.push_back(entry.path().string());
        }
    }
    if (paths.empty()) {
        throw std::runtime_error("summarize_dir: no trace_*.csv files in '" + dir + "'");
    }
    std::sort(paths.begin(), paths.end());
    std::vector<RunFinal> finals;
    finals.reserve(paths.size());
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw std::runtime_error("summarize_dir: cannot open '" + path + "'");
        }
        finals.push_back(read_trace_final(in, path));
    }
    return summarize_finals(finals);
}

// Writes the summary table as CSV. Improvement columns cover every policy
// in the table; a policy's own improvement cell is left empty.
inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "policy,runs,mean_final_regret,median_final_regret,min_final_regret,"
           "max_final_regret";
    for (const auto& row : rows) {
        out << ",improvement_vs_" << row.policy;
    }
    out << '\n';
    for (const auto& row : rows) {
        out << row.policy << ',' << row.runs << ','
            << detail::format_fixed(row.mean_final) << ','
            << detail::format_fixed(row.median_final) << ','
            << detail::format_fixed(row.min_final) << ','
            << detail::format_fixed(row.max_final);
        for (const auto& other : rows) {
            out << ',';
            if (other.policy == row.policy) continue;
            out << detail::format_fixed(row.improvement_vs.at(other.policy));
        }
        out << '\n';
    }
}

}  // namespace cascor

#endif  // CASCOR_HARNESS_HPP
