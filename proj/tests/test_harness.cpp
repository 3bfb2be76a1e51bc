#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cascor/config.hpp"
#include "cascor/harness.hpp"

using namespace cascor;

namespace {

Config parse(const std::string& text) { return Config::parse_string(text, "test.cfg"); }

// A small uncorrupted experiment used by several trace tests.
std::string base_config_text() {
    return "env.mu = 0.8, 0.6, 0.4, 0.2\n"
           "env.d = 2\n"
           "env.horizon = 200\n"
           "policy.kind = mucbv\n"
           "run.seeds = 3\n";
}

RunResult fake_run(const std::string& policy, std::uint64_t seed, std::uint64_t rounds,
                   double final_regret) {
    RunResult result;
    result.policy = policy;
    result.seed = seed;
    const double step = final_regret / static_cast<double>(rounds);
    double cumulative = 0.0;
    for (std::uint64_t round = 1; round <= rounds; ++round) {
        TraceRow row;
        row.round = round;
        row.chosen = RankedList{{0}};
        row.per_round_regret = step;
        cumulative += step;
        row.cumulative_regret = round == rounds ? final_regret : cumulative;
        result.rows.push_back(row);
    }
    return result;
}

std::string render_trace(const RunResult& result) {
    std::ostringstream out;
    write_trace_csv(out, result);
    return out.str();
}

}  // namespace

TEST_CASE("config parser handles comments, blanks, and overrides", "[config]") {
    const Config config = parse(
        "# a comment line\n"
        "\n"
        "  alpha = 1.5  \n"
        "name= hello world \n"
        "alpha =2.5\r\n"
        "count = 7\n");
    CHECK(config.get_double("alpha") == 2.5);
    CHECK(config.get_string("name") == "hello world");
    CHECK(config.get_uint("count") == 7);
    CHECK(config.entries().size() == 3);
    CHECK(config.has("alpha"));
    CHECK_FALSE(config.has("beta"));
}

TEST_CASE("config parser reports malformed lines with their numbers", "[config]") {
    CHECK_THROWS_WITH(parse("a = 1\nno equals sign\n"),
                      Catch::Matchers::ContainsSubstring("test.cfg:2"));
    CHECK_THROWS_WITH(parse(" = 3\n"),
                      Catch::Matchers::ContainsSubstring("test.cfg:1"));
}

TEST_CASE("config typed getters name the offending key", "[config]") {
    const Config config = parse("alpha = fast\ncount = -2\n");
    CHECK_THROWS_WITH(config.get_double("alpha"),
                      Catch::Matchers::ContainsSubstring("'alpha'"));
    CHECK_THROWS_WITH(config.get_uint("count"),
                      Catch::Matchers::ContainsSubstring("'count'"));
    CHECK_THROWS_WITH(config.get_string("missing"),
                      Catch::Matchers::ContainsSubstring("'missing'"));
    CHECK(config.get_double_or("other", 4.5) == 4.5);
    CHECK(config.get_uint_or("other", 9) == 9);
    CHECK(config.get_string_or("other", "x") == "x");
}

TEST_CASE("config parse_file rejects a missing path", "[config]") {
    CHECK_THROWS_AS(Config::parse_file("/nonexistent/path.cfg"), std::runtime_error);
}

TEST_CASE("seed specifications expand ranges", "[config]") {
    CHECK(parse_seed_spec("1,2,5..8") ==
          std::vector<std::uint64_t>{1, 2, 5, 6, 7, 8});
    CHECK(parse_seed_spec("7") == std::vector<std::uint64_t>{7});
    CHECK(parse_seed_spec("0..2") == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(parse_seed_spec(" 4 , 9 ") == std::vector<std::uint64_t>{4, 9});
}

TEST_CASE("seed specifications reject malformed input", "[config]") {
    CHECK_THROWS_AS(parse_seed_spec(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_spec("1,,2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_spec("banana"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_spec("5..3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_spec("1,1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_spec("2..4,3"), std::invalid_argument);
}

TEST_CASE("make_experiment fills defaults from a minimal config", "[harness]") {
    const ExperimentConfig experiment = make_experiment(parse(
        "env.mu = 0.9, 0.5\n"
        "env.d = 1\n"
        "env.horizon = 100\n"
        "policy.kind = mucbv, cascade_ucbv\n"));
    CHECK(experiment.env.mu == std::vector<double>{0.9, 0.5});
    CHECK(experiment.env.d == 1);
    CHECK(experiment.env.horizon == 100);
    CHECK(experiment.adversary.kind == AdversaryKind::none);
    CHECK(experiment.corruption_budget == 0);
    CHECK(experiment.policy_kinds == std::vector<std::string>{"mucbv", "cascade_ucbv"});
    CHECK(experiment.policy.A == 2.0);
    CHECK(experiment.policy.B == 3.0);
    CHECK(experiment.policy.C_assumed == 0);
    CHECK(experiment.seeds == std::vector<std::uint64_t>{1});
    CHECK(experiment.jobs == 1);
}

TEST_CASE("make_experiment rejects unknown keys", "[harness]") {
    CHECK_THROWS_WITH(make_experiment(parse(base_config_text() + "env.horizen = 5\n")),
                      Catch::Matchers::ContainsSubstring("env.horizen"));
}

TEST_CASE("make_experiment requires exactly one environment source", "[harness]") {
    CHECK_THROWS_AS(make_experiment(parse(
                        "env.d = 1\n"
                        "env.horizon = 10\n"
                        "policy.kind = mucbv\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_experiment(parse(
                        "env.mu = 0.5\n"
                        "env.ingest_file = whatever.csv\n"
                        "env.d = 1\n"
                        "env.horizon = 10\n"
                        "policy.kind = mucbv\n")),
                    std::invalid_argument);
}

TEST_CASE("make_experiment builds the environment from a ratings file", "[harness]") {
    const std::string path = std::string(CASCOR_DATA_DIR) + "/movies_500.csv";
    const ExperimentConfig experiment = make_experiment(parse(
        "env.ingest_file = " + path + "\n" +
        "env.d = 4\n"
        "env.horizon = 1000\n"
        "policy.kind = cascade_ucbv\n"));
    REQUIRE(experiment.env.mu.size() == 500);
    for (const auto p : experiment.env.mu) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("make_experiment rejects bad policy lists", "[harness]") {
    CHECK_THROWS_WITH(make_experiment(parse(
                          "env.mu = 0.5, 0.4\n"
                          "env.d = 1\n"
                          "env.horizon = 10\n"
                          "policy.kind = mucbv, mucbv\n")),
                      Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_WITH(make_experiment(parse(
                          "env.mu = 0.5, 0.4\n"
                          "env.d = 1\n"
                          "env.horizon = 10\n"
                          "policy.kind = ucb1\n")),
                      Catch::Matchers::ContainsSubstring("ucb1"));
}

TEST_CASE("make_experiment rejects a warm-up longer than the horizon", "[harness]") {
    // K = 3 and C_assumed = 2 need 60 warm-up rounds.
    CHECK_THROWS_WITH(make_experiment(parse(
                          "env.mu = 0.5, 0.4, 0.3\n"
                          "env.d = 1\n"
                          "env.horizon = 50\n"
                          "policy.kind = mucbv\n"
                          "policy.C_assumed = 2\n")),
                      Catch::Matchers::ContainsSubstring("warm-up"));
    CHECK_NOTHROW(make_experiment(parse(
        "env.mu = 0.5, 0.4, 0.3\n"
        "env.d = 1\n"
        "env.horizon = 60\n"
        "policy.kind = mucbv\n"
        "policy.C_assumed = 2\n")));
}

TEST_CASE("make_experiment parses corruption settings", "[harness]") {
    const ExperimentConfig defaulted = make_experiment(parse(
        base_config_text() + "corruption.budget = 20\n"));
    CHECK(defaulted.adversary.kind == AdversaryKind::flip_early);
    CHECK(defaulted.corruption_budget == 20);

    const ExperimentConfig window = make_experiment(parse(
        base_config_text() +
        "corruption.kind = flip_window\n"
        "corruption.budget = 10\n"
        "corruption.window_start = 50\n"
        "corruption.window_len = 30\n"));
    CHECK(window.adversary.kind == AdversaryKind::flip_window);
    CHECK(window.adversary.window_start == 50);
    CHECK(window.adversary.window_len == 30);

    CHECK_THROWS_AS(make_experiment(parse(
                        base_config_text() + "corruption.kind = flip_window\n")),
                    std::invalid_argument);
    CHECK_THROWS_WITH(make_experiment(parse(
                          base_config_text() + "corruption.kind = sneaky\n")),
                      Catch::Matchers::ContainsSubstring("sneaky"));
    CHECK_THROWS_WITH(make_experiment(parse(
                          base_config_text() + "env.mu = 0.5, oops\n")),
                      Catch::Matchers::ContainsSubstring("oops"));
}

TEST_CASE("run_single produces a consistent uncorrupted trace", "[harness]") {
    const ExperimentConfig experiment = make_experiment(parse(base_config_text()));
    const RunResult result = run_single(experiment, "mucbv", 3);
    REQUIRE(result.rows.size() == 200);
    CHECK(result.policy == "mucbv");
    CHECK(result.seed == 3);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const TraceRow& row = result.rows[i];
        CHECK(row.round == i + 1);
        CHECK(row.chosen.items.size() == 2);
        CHECK(row.per_round_regret >= 0.0);
        CHECK(row.per_round_regret <= 1.0);
        cumulative += row.per_round_regret;
        CHECK(row.cumulative_regret == Catch::Approx(cumulative).margin(1e-9));
        CHECK(row.corruption_spent == 0);
    }
}

TEST_CASE("run_single charges the corruption budget where scheduled", "[harness]") {
    const ExperimentConfig experiment = make_experiment(parse(
        base_config_text() + "corruption.budget = 20\n"));
    const RunResult result = run_single(experiment, "mucbv", 3);
    std::uint64_t spent = 0;
    for (const auto& row : result.rows) {
        CHECK(row.corruption_spent <= 1);
        if (row.corruption_spent > 0) {
            CHECK(row.round <= 20);
        }
        spent += row.corruption_spent;
    }
    CHECK(spent == 20);
}

TEST_CASE("assuming no corruption reduces mucbv to the baseline", "[harness]") {
    // With C_assumed = 0 there is no warm-up, and at this horizon every
    // sample log is small enough that the calibrated estimator falls back
    // to the plain mean, so the two policies pick identical lists.
    const ExperimentConfig experiment = make_experiment(parse(
        "env.mu = 0.8, 0.6, 0.4, 0.2\n"
        "env.d = 2\n"
        "env.horizon = 50\n"
        "policy.kind = mucbv, cascade_ucbv\n"
        "run.seeds = 1..3\n"));
    const std::vector<RunResult> results = run_experiment(experiment);
    REQUIRE(results.size() == 6);
    for (std::size_t i = 0; i < 3; ++i) {
        const RunResult& mucbv = results[i];
        const RunResult& baseline = results[i + 3];
        REQUIRE(mucbv.policy == "mucbv");
        REQUIRE(baseline.policy == "cascade_ucbv");
        REQUIRE(mucbv.seed == baseline.seed);
        REQUIRE(mucbv.rows.size() == baseline.rows.size());
        for (std::size_t r = 0; r < mucbv.rows.size(); ++r) {
            CHECK(mucbv.rows[r].chosen == baseline.rows[r].chosen);
            CHECK(mucbv.rows[r].cumulative_regret == baseline.rows[r].cumulative_regret);
        }
    }
}

TEST_CASE("runs are deterministic and isolated per seed", "[harness]") {
    ExperimentConfig experiment = make_experiment(parse(
        base_config_text() + "run.seeds = 1, 2\n"));
    const std::vector<RunResult> batch = run_experiment(experiment);
    REQUIRE(batch.size() == 2);

    // The same seed run alone must reproduce its batch trace exactly.
    const RunResult alone = run_single(experiment, "mucbv", 2);
    REQUIRE(batch[1].seed == 2);
    CHECK(render_trace(alone) == render_trace(batch[1]));

    // Different seeds follow different trajectories once the horizon is long
    // enough for the confidence radii to leave the early all-capped regime.
    const ExperimentConfig longer = make_experiment(parse(
        "env.mu = 0.8, 0.6, 0.4, 0.2\n"
        "env.d = 2\n"
        "env.horizon = 500\n"
        "policy.kind = mucbv\n"));
    const auto chosen_sequence = [](const RunResult& run) {
        std::vector<std::vector<std::uint32_t>> lists;
        for (const auto& row : run.rows) lists.push_back(row.chosen.items);
        return lists;
    };
    CHECK(chosen_sequence(run_single(longer, "mucbv", 1)) !=
          chosen_sequence(run_single(longer, "mucbv", 2)));

    // A second full run reproduces both traces byte for byte.
    const std::vector<RunResult> again = run_experiment(experiment);
    CHECK(render_trace(again[0]) == render_trace(batch[0]));
    CHECK(render_trace(again[1]) == render_trace(batch[1]));

    // The thread pool cannot change any result.
    experiment.jobs = 2;
    const std::vector<RunResult> parallel = run_experiment(experiment);
    REQUIRE(parallel.size() == 2);
    CHECK(render_trace(parallel[0]) == render_trace(batch[0]));
    CHECK(render_trace(parallel[1]) == render_trace(batch[1]));
}

TEST_CASE("trace CSV follows the published schema", "[harness]") {
    RunResult result = fake_run("mucbv", 5, 2, 0.5);
    result.rows[0].chosen = RankedList{{2, 0}};
    result.rows[1].chosen = RankedList{{1, 3}};
    result.rows[1].corruption_spent = 1;
    const std::string text = render_trace(result);
    std::istringstream in(text);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "round,policy,seed,chosen_list,per_round_regret,cumulative_regret,"
          "corruption_spent");
    REQUIRE(std::getline(in, line));
    CHECK(line == "1,mucbv,5,2|0,0.250000000,0.250000000,0");
    REQUIRE(std::getline(in, line));
    CHECK(line == "2,mucbv,5,1|3,0.250000000,0.500000000,1");
    CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("summaries aggregate finals and pairwise improvements", "[harness]") {
    const std::vector<RunResult> results = {
        fake_run("mucbv", 1, 10, 10.0),
        fake_run("cascade_ucbv", 1, 10, 400.0),
    };
    const std::vector<SummaryRow> rows = summarize(results);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].policy == "cascade_ucbv");
    CHECK(rows[1].policy == "mucbv");
    CHECK(rows[1].mean_final == 10.0);
    CHECK(rows[1].improvement_vs.at("cascade_ucbv") == Catch::Approx(97.5));
    CHECK(rows[0].improvement_vs.at("mucbv") == Catch::Approx(-3900.0));
}

TEST_CASE("summaries compute per-policy order statistics", "[harness]") {
    const std::vector<RunResult> results = {
        fake_run("mucbv", 1, 5, 1.0),
        fake_run("mucbv", 2, 5, 2.0),
        fake_run("mucbv", 3, 5, 3.0),
        fake_run("mucbv", 4, 5, 4.0),
    };
    const std::vector<SummaryRow> rows = summarize(results);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].runs == 4);
    CHECK(rows[0].mean_final == Catch::Approx(2.5));
    CHECK(rows[0].median_final == Catch::Approx(2.5));
    CHECK(rows[0].min_final == 1.0);
    CHECK(rows[0].max_final == 4.0);
    CHECK(rows[0].improvement_vs.empty());
}

TEST_CASE("identical policies show zero improvement over each other", "[harness]") {
    const std::vector<RunResult> results = {
        fake_run("a", 1, 5, 7.0),
        fake_run("b", 1, 5, 7.0),
    };
    const std::vector<SummaryRow> rows = summarize(results);
    CHECK(rows[0].improvement_vs.at("b") == Catch::Approx(0.0).margin(1e-12));
    CHECK(rows[1].improvement_vs.at("a") == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("summaries reject mismatched horizons and empty input", "[harness]") {
    const std::vector<RunResult> mismatched = {
        fake_run("a", 1, 5, 1.0),
        fake_run("b", 1, 6, 1.0),
    };
    CHECK_THROWS_AS(summarize(mismatched), std::invalid_argument);
    CHECK_THROWS_AS(summarize({}), std::invalid_argument);
    CHECK_THROWS_AS(final_of(RunResult{}), std::invalid_argument);
}

TEST_CASE("summary CSV lists improvement columns for every policy", "[harness]") {
    const std::vector<SummaryRow> rows = summarize({
        fake_run("mucbv", 1, 10, 10.0),
        fake_run("cascade_ucbv", 1, 10, 400.0),
    });
    std::ostringstream out;
    write_summary_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "policy,runs,mean_final_regret,median_final_regret,min_final_regret,"
          "max_final_regret,improvement_vs_cascade_ucbv,improvement_vs_mucbv");
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "cascade_ucbv,1,400.000000000,400.000000000,400.000000000,400.000000000,"
          ",-3900.000000000");
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "mucbv,1,10.000000000,10.000000000,10.000000000,10.000000000,"
          "97.500000000,");
}

TEST_CASE("written traces round-trip through directory summaries", "[harness]") {
    const std::filesystem::path dir = "harness_test_out";
    std::filesystem::remove_all(dir);
    ExperimentConfig experiment = make_experiment(parse(
        "env.mu = 0.8, 0.6, 0.4, 0.2\n"
        "env.d = 2\n"
        "env.horizon = 60\n"
        "policy.kind = mucbv, cascade_ucbv\n"
        "run.seeds = 1, 2\n"));
    experiment.out_dir = dir.string();
    const std::vector<RunResult> results = run_experiment(experiment);
    const std::vector<std::string> paths = write_traces(experiment, results);
    REQUIRE(paths.size() == 4);
    CHECK(paths[0] == dir.string() + "/trace_mucbv_seed1.csv");
    CHECK(std::filesystem::exists(paths[0]));

    const std::vector<SummaryRow> direct = summarize(results);
    const std::vector<SummaryRow> from_disk = summarize_dir(dir.string());
    REQUIRE(from_disk.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(from_disk[i].policy == direct[i].policy);
        CHECK(from_disk[i].runs == direct[i].runs);
        CHECK(from_disk[i].mean_final ==
              Catch::Approx(direct[i].mean_final).margin(1e-8));
        CHECK(from_disk[i].median_final ==
              Catch::Approx(direct[i].median_final).margin(1e-8));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("directory summaries reject empty or malformed inputs", "[harness]") {
    const std::filesystem::path dir = "harness_test_empty";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    CHECK_THROWS_AS(summarize_dir(dir.string()), std::runtime_error);

    std::ofstream(dir / "trace_bad_seed1.csv") << "round,policy\n1,2,3\n";
    CHECK_THROWS_WITH(summarize_dir(dir.string()),
                      Catch::Matchers::ContainsSubstring("expected 7 fields"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("output directory resolution prefers config over environment",
          "[harness]") {
    const char* saved = std::getenv("CASCOR_OUT");
    const std::string saved_value = saved == nullptr ? "" : saved;

    unsetenv("CASCOR_OUT");
    CHECK(resolve_out_dir(parse("")) == "out");
    setenv("CASCOR_OUT", "env_dir", 1);
    CHECK(resolve_out_dir(parse("")) == "env_dir");
    CHECK(resolve_out_dir(parse("run.out = cfg_dir\n")) == "cfg_dir");

    if (saved == nullptr) {
        unsetenv("CASCOR_OUT");
    } else {
        setenv("CASCOR_OUT", saved_value.c_str(), 1);
    }
}
