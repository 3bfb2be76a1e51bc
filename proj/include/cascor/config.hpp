// Flat key=value experiment configuration.
//
// Config files hold one experiment each: one `key = value` pair per line,
// `#` starts a whole-line comment, blank lines are ignored, and a repeated
// key overwrites the earlier value (so command-line overrides can be applied
// by appending). Typed getters parse on access and report the offending key
// in their errors.

#ifndef CASCOR_CONFIG_HPP
#define CASCOR_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascor {

namespace detail {

inline std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t");
    return text.substr(begin, end - begin + 1);
}

}  // namespace detail

class Config {
  public:
    static Config parse_string(const std::string& text, const std::string& source) {
        Config config;
        std::istringstream in(text);
        std::string line;
        std::size_t line_number = 0;
        while (std::getline(in, line)) {
            ++line_number;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string stripped = detail::trim(line);
            if (stripped.empty() || stripped.front() == '#') continue;
            const auto equals = stripped.find('=');
            if (equals == std::string::npos) {
                throw std::runtime_error(source + ":" + std::to_string(line_number) +
                                         ": expected 'key = value'");
            }
            const std::string key = detail::trim(stripped.substr(0, equals));
            const std::string value = detail::trim(stripped.substr(equals + 1));
            if (key.empty()) {
                throw std::runtime_error(source + ":" + std::to_string(line_number) +
                                         ": empty key");
            }
            config.set(key, value);
        }
        return config;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw std::runtime_error("Config: cannot open '" + path + "'");
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return parse_string(buffer.str(), path);
    }

    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            throw std::invalid_argument("Config: missing key '" + key + "'");
        }
        return it->second;
    }

    std::string get_string_or(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const {
        const std::string text = get_string(key);
        double value = 0.0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            throw std::invalid_argument("Config: key '" + key +
                                        "' is not a number: '" + text + "'");
        }
        return value;
    }

    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::uint64_t get_uint(const std::string& key) const {
        const std::string text = get_string(key);
        std::uint64_t value = 0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            throw std::invalid_argument("Config: key '" + key +
                                        "' is not a non-negative integer: '" + text +
                                        "'");
        }
        return value;
    }

    std::uint64_t get_uint_or(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? get_uint(key) : fallback;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

// Expands a seed specification: comma-separated integers or inclusive
// `a..b` ranges, e.g. "1,2,5..8" -> {1, 2, 5, 6, 7, 8}. Duplicates are
// rejected because each seed names one trace file.
inline std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    const auto parse_one = [&spec](const std::string& token) {
        std::uint64_t value = 0;
        const char* begin = token.data();
        const char* end = begin + token.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            throw std::invalid_argument("parse_seed_spec: bad seed '" + token +
                                        "' in '" + spec + "'");
        }
        return value;
    };
    while (start <= spec.size()) {
        const std::size_t comma = spec.find(',', start);
        const std::string token = detail::trim(
            spec.substr(start, comma == std::string::npos ? comma : comma - start));
        if (token.empty()) {
            throw std::invalid_argument("parse_seed_spec: empty entry in '" + spec + "'");
        }
        const auto dots = token.find("..");
        if (dots == std::string::npos) {
            seeds.push_back(parse_one(token));
        } else {
            const std::uint64_t lo = parse_one(detail::trim(token.substr(0, dots)));
            const std::uint64_t hi = parse_one(detail::trim(token.substr(dots + 2)));
            if (lo > hi) {
                throw std::invalid_argument("parse_seed_spec: descending range '" +
                                            token + "'");
            }
            for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (std::size_t j = i + 1; j < seeds.size(); ++j) {
            if (seeds[i] == seeds[j]) {
                throw std::invalid_argument("parse_seed_spec: duplicate seed " +
                                            std::to_string(seeds[i]));
            }
        }
    }
    return seeds;
}

}  // namespace cascor

#endif  // CASCOR_CONFIG_HPP
