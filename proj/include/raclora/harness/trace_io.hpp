#ifndef RACLORA_HARNESS_TRACE_IO_HPP
#define RACLORA_HARNESS_TRACE_IO_HPP

// Trace files: CSV with a '#'-prefixed header block.
//
//   # raclora-trace v1
//   # method=raclora
//   # objective=counterexample
//   # gamma=0.050000000000000003
//   ...
//   step,f,grad_norm_sq,gap,seed,method
//   0,0,9,2.0249999999999999,1,raclora
//
// Reals are written with 17 significant digits, so write -> read -> write
// reproduces the file byte for byte.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/optimizers.hpp"

namespace raclora::harness {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_real(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw IoError("malformed number '" + s + "' in " + what);
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw IoError("malformed integer '" + s + "' in " + what);
    return v;
}

struct TraceHeader {
    std::string method;
    std::string objective;
    double gamma = 0.0;
    int rank = 0;
    double alpha = 0.0;
    double lambda_min_h = 0.0;
    std::uint64_t seed = 0;
    // Additional key=value lines kept in order (inner, side, L, mu, diverged, ...).
    std::vector<std::pair<std::string, std::string>> extra;

    std::optional<std::string> find(const std::string& key) const {
        for (const auto& [k, v] : extra)
            if (k == key) return v;
        return std::nullopt;
    }
};

struct TraceFile {
    TraceHeader header;
    std::vector<TraceRecord> rows;

    bool diverged() const {
        const auto d = header.find("diverged");
        return d && *d == "1";
    }
};

inline constexpr const char* kTraceMagic = "# raclora-trace v1";
inline constexpr const char* kTraceColumns = "step,f,grad_norm_sq,gap,seed,method";

inline std::string serialize_trace(const TraceFile& tf) {
    std::ostringstream out;
    const TraceHeader& h = tf.header;
    out << kTraceMagic << '\n';
    out << "# method=" << h.method << '\n';
    out << "# objective=" << h.objective << '\n';
    out << "# gamma=" << format_real(h.gamma) << '\n';
    out << "# rank=" << h.rank << '\n';
    out << "# alpha=" << format_real(h.alpha) << '\n';
    out << "# lambda_min_h=" << format_real(h.lambda_min_h) << '\n';
    out << "# seed=" << h.seed << '\n';
    for (const auto& [k, v] : h.extra) out << "# " << k << '=' << v << '\n';
    out << kTraceColumns << '\n';
    for (const auto& r : tf.rows) {
        out << r.t << ',' << format_real(r.f_value) << ',' << format_real(r.grad_norm_sq) << ','
            << (r.gap ? format_real(*r.gap) : std::string()) << ',' << r.seed << ',' << r.method << '\n';
    }
    return out.str();
}

inline TraceFile parse_trace(const std::string& text, const std::string& origin = "trace") {
    TraceFile tf;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kTraceMagic) throw IoError(origin + ": not a trace file");

    bool columns_seen = false;
    while (std::getline(in, line)) {
        if (!columns_seen) {
            if (line == kTraceColumns) {
                columns_seen = true;
                continue;
            }
            if (line.rfind("# ", 0) != 0) throw IoError(origin + ": unexpected header line '" + line + "'");
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw IoError(origin + ": header line without '='");
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            TraceHeader& h = tf.header;
            if (key == "method") h.method = value;
            else if (key == "objective") h.objective = value;
            else if (key == "gamma") h.gamma = parse_real(value, origin);
            else if (key == "rank") h.rank = static_cast<int>(parse_u64(value, origin));
            else if (key == "alpha") h.alpha = parse_real(value, origin);
            else if (key == "lambda_min_h") h.lambda_min_h = parse_real(value, origin);
            else if (key == "seed") h.seed = parse_u64(value, origin);
            else h.extra.emplace_back(key, value);
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != 6) throw IoError(origin + ": expected 6 columns in '" + line + "'");
        TraceRecord r;
        r.t = static_cast<long>(parse_real(fields[0], origin));
        r.f_value = parse_real(fields[1], origin);
        r.grad_norm_sq = parse_real(fields[2], origin);
        if (!fields[3].empty()) r.gap = parse_real(fields[3], origin);
        r.seed = parse_u64(fields[4], origin);
        r.method = fields[5];
        tf.rows.push_back(std::move(r));
    }
    if (!columns_seen) throw IoError(origin + ": missing column line");
    if (tf.diverged() && !tf.rows.empty()) tf.rows.back().diverged = true;
    return tf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_trace(const std::string& path, const TraceFile& tf) { write_text_file(path, serialize_trace(tf)); }

inline TraceFile read_trace(const std::string& path) { return parse_trace(read_text_file(path), path); }

}  // namespace raclora::harness

#endif  // RACLORA_HARNESS_TRACE_IO_HPP
