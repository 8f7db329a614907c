#ifndef RACLORA_HARNESS_CONFIG_HPP
#define RACLORA_HARNESS_CONFIG_HPP

// Flat key=value configuration: a file of `key = value` lines ('#' starts a
// comment) overlaid with `--set key=value` overrides.

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/harness/trace_io.hpp"

namespace raclora::harness {

inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "config") {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw InvalidConfig(origin + ":" + std::to_string(lineno) + ": expected key = value");
            }
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) { return parse(read_text_file(path), path); }

    void set(const std::string& key, const std::string& value) {
        if (key.empty()) throw InvalidConfig("empty configuration key");
        values_[key] = value;
    }

    // Accepts "key=value".
    void set_assignment(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw InvalidConfig("--set expects key=value, got '" + assignment + "'");
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return get(key).value_or(fallback);
    }

    double get_real(const std::string& key, double fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        return to_real(key, *v);
    }

    long get_int(const std::string& key, long fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        return to_int(key, *v);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
        if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
        throw InvalidConfig("key '" + key + "': expected a boolean, got '" + *v + "'");
    }

    // Rejects keys outside `known`.
    void require_known(const std::set<std::string>& known) const {
        for (const auto& [k, v] : values_) {
            if (!known.count(k) && k.rfind("client.", 0) != 0) throw InvalidConfig("unknown configuration key '" + k + "'");
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    static double to_real(const std::string& key, const std::string& v) {
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size()) {
            throw InvalidConfig("key '" + key + "': expected a number, got '" + v + "'");
        }
        return d;
    }

    static long to_int(const std::string& key, const std::string& v) {
        char* end = nullptr;
        const long i = std::strtol(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size()) {
            throw InvalidConfig("key '" + key + "': expected an integer, got '" + v + "'");
        }
        return i;
    }

private:
    std::map<std::string, std::string> values_;
};

// Seeds first, first+1, ..., first+count-1.
inline std::vector<std::uint64_t> seed_range(std::uint64_t first, long count) {
    if (count < 1) throw InvalidConfig("seed list is empty");
    std::vector<std::uint64_t> seeds;
    for (long i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    return seeds;
}

inline void require_distinct_seeds(const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw InvalidConfig("seed list is empty");
    const std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw InvalidConfig("seed list contains duplicates");
}

}  // namespace raclora::harness

#endif  // RACLORA_HARNESS_CONFIG_HPP
