// ---------------------------------------------------------------------------
// cascor: command-line front end for the cascading-bandit experiment harness.
//
// Subcommands:
//   run                run one experiment from a config file, writing one
//                      trace CSV per (policy, seed) plus a summary.csv
//   sweep              rerun one experiment at several corruption rates,
//                      each into its own subdirectory
//   summarize <dir>    aggregate previously written traces into a summary
//   ingest <csv>       print the click probabilities derived from a
//                      ratings-summary CSV
//   check-calibration  verify that majority-vote calibration inverts itself
//                      across a probability grid
//
// The default output directory is taken from --out, then the CASCOR_OUT
// environment variable, then "out".
// ---------------------------------------------------------------------------

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cascor/config.hpp"
#include "cascor/estimators.hpp"
#include "cascor/harness.hpp"
#include "cascor/ingest.hpp"

namespace {

using namespace cascor;

// Applies command-line overrides on top of the parsed config file. The
// corruption rate is translated into an absolute budget of round(rate * T).
Config load_config(const std::string& path, const std::string& seeds,
                   const std::string& out, std::uint64_t jobs, double corruption_rate) {
    Config config = Config::parse_file(path);
    if (!seeds.empty()) config.set("run.seeds", seeds);
    if (!out.empty()) config.set("run.out", out);
    if (jobs > 0) config.set("run.jobs", std::to_string(jobs));
    if (corruption_rate >= 0.0) {
        const double horizon = static_cast<double>(config.get_uint("env.horizon"));
        const auto budget =
            static_cast<std::uint64_t>(std::llround(corruption_rate * horizon));
        config.set("corruption.budget", std::to_string(budget));
    }
    return config;
}

void print_summary(const std::vector<SummaryRow>& rows) {
    write_summary_csv(std::cout, rows);
}

// Runs one experiment and writes its artifacts under the resolved directory.
std::vector<SummaryRow> run_and_write(const ExperimentConfig& experiment) {
    const std::vector<RunResult> results = run_experiment(experiment);
    write_traces(experiment, results);
    const std::vector<SummaryRow> summary = summarize(results);
    const std::string summary_path = experiment.out_dir + "/summary.csv";
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + summary_path + "'");
    }
    write_summary_csv(out, summary);
    return summary;
}

int command_run(const std::string& config_path, const std::string& seeds,
                const std::string& out, std::uint64_t jobs, double corruption_rate) {
    const Config config = load_config(config_path, seeds, out, jobs, corruption_rate);
    const ExperimentConfig experiment = make_experiment(config);
    const std::vector<SummaryRow> summary = run_and_write(experiment);
    std::cout << "wrote " << experiment.policy_kinds.size() * experiment.seeds.size()
              << " trace(s) to " << experiment.out_dir << "\n";
    print_summary(summary);
    return 0;
}

int command_sweep(const std::string& config_path, const std::string& rates_spec,
                  const std::string& seeds, const std::string& out,
                  std::uint64_t jobs) {
    const std::vector<std::string> rate_tokens = detail::split_list(rates_spec);
    if (rate_tokens.empty()) {
        throw std::invalid_argument("sweep: --corruption lists no rates");
    }
    for (const auto& token : rate_tokens) {
        double rate = 0.0;
        if (!detail::parse_double(token, rate) || rate < 0.0 || rate > 1.0) {
            throw std::invalid_argument("sweep: bad corruption rate '" + token + "'");
        }
        const Config config = load_config(config_path, seeds, out, jobs, rate);
        ExperimentConfig experiment = make_experiment(config);
        experiment.out_dir += "/rate_" + token;
        std::cout << "corruption rate " << token << " (budget "
                  << experiment.corruption_budget << "):\n";
        print_summary(run_and_write(experiment));
    }
    return 0;
}

int command_summarize(const std::string& dir) {
    print_summary(summarize_dir(dir));
    return 0;
}

int command_ingest(const std::string& csv_path, double prior_weight, double slope,
                   double center) {
    IngestConfig config;
    if (prior_weight >= 0.0) config.prior_weight = prior_weight;
    if (slope > 0.0) config.sigmoid_slope = slope;
    if (center > 0.0) config.sigmoid_center = center;
    const auto summaries =
        load_summaries(csv_path, config.rating_min, config.rating_max);
    const std::vector<double> mu = click_probabilities(summaries, config);
    std::cout << "item_id,avg_rating,num_ratings,click_prob\n";
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        std::cout << summaries[i].item_id << ',' << summaries[i].avg_rating << ','
                  << summaries[i].num_ratings << ',' << detail::format_fixed(mu[i])
                  << '\n';
    }
    return 0;
}

// Round-trips y = q_b(p) through calibrate and back for every odd block size
// up to 31, reporting the worst |q_b(calibrate(b, y)) - y| seen. The error is
// measured on the majority scale because the inverse is ill-conditioned where
// q_b is nearly flat. Exits nonzero if any block size drifts past the
// bisection tolerance.
int command_check_calibration() {
    const CalibrationParams params;
    const double tolerance = params.eta + std::ldexp(1.0, -60);
    bool ok = true;
    for (int b = 1; b <= 31; b += 2) {
        double worst = 0.0;
        for (int i = 1; i <= 99; ++i) {
            const double p = i / 100.0;
            const double y = q_b(b, p);
            worst = std::max(worst, std::abs(q_b(b, calibrate(b, y, params)) - y));
        }
        const bool pass = worst <= tolerance;
        ok = ok && pass;
        std::cout << "b=" << b << " max round-trip error " << worst << " "
                  << (pass ? "[PASS]" : "[FAIL]") << "\n";
    }
    std::cout << (ok ? "calibration check passed" : "calibration check FAILED")
              << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascading-bandit experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seeds;
    std::string out;
    std::uint64_t jobs = 0;
    double corruption_rate = -1.0;
    std::string rates_spec;
    std::string summarize_path;
    std::string ingest_path;
    double prior_weight = -1.0;
    double slope = 0.0;
    double center = 0.0;

    CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--seeds", seeds, "seed spec override, e.g. 1,2,5..8");
    run->add_option("--out", out, "output directory override");
    run->add_option("--jobs", jobs, "worker thread count override");
    run->add_option("--corruption-rate", corruption_rate,
                    "override the budget to round(rate * horizon)")
        ->check(CLI::Range(0.0, 1.0));

    CLI::App* sweep =
        app.add_subcommand("sweep", "rerun the experiment at several corruption rates");
    sweep->add_option("--config", config_path, "experiment config file")->required();
    sweep->add_option("--corruption", rates_spec,
                      "comma-separated corruption rates, e.g. 0,0.05,0.1")
        ->required();
    sweep->add_option("--seeds", seeds, "seed spec override");
    sweep->add_option("--out", out, "output directory override");
    sweep->add_option("--jobs", jobs, "worker thread count override");

    CLI::App* summarize_cmd =
        app.add_subcommand("summarize", "aggregate traces from a directory");
    summarize_cmd->add_option("dir", summarize_path, "directory of trace_*.csv files")
        ->required();

    CLI::App* ingest =
        app.add_subcommand("ingest", "derive click probabilities from a ratings CSV");
    ingest->add_option("csv", ingest_path, "ratings-summary CSV")->required();
    ingest->add_option("--prior-weight", prior_weight,
                       "shrinkage weight (default: mean rating count)");
    ingest->add_option("--slope", slope, "sigmoid slope (default 1.5)");
    ingest->add_option("--center", center, "sigmoid center (default: mean rating)");

    app.add_subcommand("check-calibration",
                       "verify estimator calibration round-trips");

    CLI11_PARSE(app, argc, argv);

    try {
        const CLI::App* chosen = app.get_subcommands().front();
        if (chosen->get_name() == "run") {
            return command_run(config_path, seeds, out, jobs, corruption_rate);
        }
        if (chosen->get_name() == "sweep") {
            return command_sweep(config_path, rates_spec, seeds, out, jobs);
        }
        if (chosen->get_name() == "summarize") {
            return command_summarize(summarize_path);
        }
        if (chosen->get_name() == "ingest") {
            return command_ingest(ingest_path, prior_weight, slope, center);
        }
        return command_check_calibration();
    } catch (const std::exception& error) {
        std::cerr << "cascor: error: " << error.what() << "\n";
        return 1;
    }
}
