// ---------------------------------------------------------------------------
// make_fixtures: regenerates the synthetic rating-summary CSVs under data/.
//
// Usage: cascor_make_fixtures [output_dir]
//
// Three 500-item datasets are produced with fixed seeds, so reruns are
// byte-identical. Ratings follow a bell-shaped distribution on the 1-5 scale
// and rating counts follow a heavy-tailed distribution, mimicking the shape
// of public review dumps without shipping third-party data.
// ---------------------------------------------------------------------------

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "cascor/rng.hpp"

namespace {

struct DatasetSpec {
    std::string file_name;
    std::string id_prefix;
    std::uint64_t seed;
    double rating_center;
    double rating_spread;
};

void write_dataset(const std::string& dir, const DatasetSpec& spec) {
    const std::string path = dir + "/" + spec.file_name;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    cascor::Rng rng(spec.seed);
    out << "item_id,avg_rating,num_ratings\n";
    for (int i = 0; i < 500; ++i) {
        // Sum of three uniforms gives a symmetric bell on [-1.5, 1.5].
        const double bell =
            rng.uniform01() + rng.uniform01() + rng.uniform01() - 1.5;
        double rating = spec.rating_center + spec.rating_spread * bell;
        rating = std::clamp(rating, 1.0, 5.0);
        rating = std::round(rating * 100.0) / 100.0;
        // Heavy-tailed counts between 1 and roughly 3000.
        const auto count = static_cast<std::uint64_t>(
            std::ceil(std::exp(rng.uniform01() * std::log(3000.0))));

        char row[96];
        std::snprintf(row, sizeof(row), "%s%04d,%.2f,%llu\n", spec.id_prefix.c_str(),
                      i + 1, rating, static_cast<unsigned long long>(count));
        out << row;
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    const DatasetSpec specs[] = {
        {"restaurants_500.csv", "rest", 101, 3.8, 0.9},
        {"movies_500.csv", "movie", 202, 3.4, 1.1},
        {"artists_500.csv", "artist", 303, 3.9, 0.7},
    };
    try {
        for (const auto& spec : specs) {
            write_dataset(dir, spec);
            std::cout << "wrote " << dir << "/" << spec.file_name << "\n";
        }
    } catch (const std::exception& error) {
        std::cerr << "make_fixtures: " << error.what() << "\n";
        return 1;
    }
    return 0;
}
