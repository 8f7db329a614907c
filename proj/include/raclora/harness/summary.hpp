#ifndef RACLORA_HARNESS_SUMMARY_HPP
#define RACLORA_HARNESS_SUMMARY_HPP

// Per-(method, gamma, rank) aggregation of trace files.

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/harness/trace_io.hpp"

namespace raclora::harness {

struct SummaryRow {
    std::string method;
    double gamma = 0.0;
    int rank = 0;
    int runs = 0;
    int diverged = 0;
    double final_gap_mean = std::numeric_limits<double>::quiet_NaN();
    double final_gap_std = std::numeric_limits<double>::quiet_NaN();
    double final_grad_sq_mean = std::numeric_limits<double>::quiet_NaN();
    double final_grad_sq_std = std::numeric_limits<double>::quiet_NaN();
    // Mean first step with gap <= threshold over runs that got there.
    double iterations_to_threshold = std::numeric_limits<double>::quiet_NaN();
    int reached_threshold = 0;
    // bound / observed, averaged over runs; >= 1 means the bound holds.
    double nonconvex_margin = std::numeric_limits<double>::quiet_NaN();
    double pl_margin = std::numeric_limits<double>::quiet_NaN();
};

struct Summary {
    std::string objective;
    double threshold = 1e-6;
    std::vector<SummaryRow> rows;
};

namespace detail {

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    int n = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN(); }
    double stddev() const {
        if (n < 2) return n == 1 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        const double m = mean();
        return std::sqrt(std::max(0.0, (sum_sq - n * m * m) / (n - 1)));
    }
};

inline std::optional<double> header_real(const TraceHeader& h, const std::string& key) {
    const auto v = h.find(key);
    if (!v || v->empty()) return std::nullopt;
    return parse_real(*v, "trace header " + key);
}

}  // namespace detail

inline Summary summarize(const std::vector<TraceFile>& traces, double threshold = 1e-6) {
    if (traces.empty()) throw InvalidConfig("summarize: no traces");
    Summary out;
    out.objective = traces.front().header.objective;
    out.threshold = threshold;

    using Key = std::tuple<std::string, double, int>;
    struct Acc {
        int runs = 0, diverged = 0, reached = 0;
        detail::Moments gap, grad, iters, nonconvex, pl;
    };
    std::map<Key, Acc> groups;
    std::vector<Key> order;

    for (const auto& tf : traces) {
        const TraceHeader& h = tf.header;
        if (h.objective != out.objective) {
            throw InvalidConfig("summarize: mixed objectives '" + out.objective + "' and '" + h.objective + "'");
        }
        const Key key{h.method, h.gamma, h.rank};
        if (!groups.count(key)) order.push_back(key);
        Acc& acc = groups[key];
        ++acc.runs;
        if (tf.diverged() || (!tf.rows.empty() && tf.rows.back().diverged)) {
            ++acc.diverged;
            continue;
        }
        if (tf.rows.empty()) continue;
        const TraceRecord& last = tf.rows.back();
        if (last.gap) acc.gap.add(*last.gap);
        acc.grad.add(last.grad_norm_sq);
        for (const auto& r : tf.rows) {
            if (r.gap && *r.gap <= threshold) {
                acc.iters.add(static_cast<double>(r.t));
                ++acc.reached;
                break;
            }
        }

        // Bound margins apply to the projected-gradient chains only.
        const bool chain = h.method == "raclora" || h.method == "fpft";
        const auto& first = tf.rows.front();
        const long horizon = static_cast<long>(tf.rows.size()) - 1;
        if (!chain || horizon < 1 || !first.gap || !last.gap) continue;
        const double gap0 = *first.gap;
        double mean_grad = 0.0;
        for (long t = 0; t < horizon; ++t) mean_grad += tf.rows[t].grad_norm_sq;
        mean_grad /= horizon;
        const double nonconvex_bound = 2.0 * gap0 / (h.lambda_min_h * h.gamma * horizon);
        if (mean_grad > 0.0) acc.nonconvex.add(nonconvex_bound / mean_grad);
        const auto mu = detail::header_real(h, "mu");
        if (mu && gap0 > 0.0 && *last.gap > 1e-12 * gap0) {
            const double bound = std::pow(1.0 - h.gamma * *mu * h.lambda_min_h, static_cast<double>(horizon));
            acc.pl.add(bound / (*last.gap / gap0));
        }
    }

    for (const auto& key : order) {
        const Acc& acc = groups[key];
        SummaryRow row;
        std::tie(row.method, row.gamma, row.rank) = key;
        row.runs = acc.runs;
        row.diverged = acc.diverged;
        row.final_gap_mean = acc.gap.mean();
        row.final_gap_std = acc.gap.stddev();
        row.final_grad_sq_mean = acc.grad.mean();
        row.final_grad_sq_std = acc.grad.stddev();
        row.iterations_to_threshold = acc.iters.mean();
        row.reached_threshold = acc.reached;
        row.nonconvex_margin = acc.nonconvex.mean();
        row.pl_margin = acc.pl.mean();
        out.rows.push_back(row);
    }
    return out;
}

inline std::string format_summary(const Summary& s) {
    std::ostringstream out;
    out << "# objective=" << s.objective << '\n';
    out << "# threshold=" << format_real(s.threshold) << '\n';
    out << "method,gamma,rank,runs,diverged,final_gap_mean,final_gap_std,final_grad_sq_mean,final_grad_sq_std,"
           "iters_to_threshold,reached,nonconvex_margin,pl_margin\n";
    char buf[512];
    for (const auto& r : s.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%d,%d,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%d,%.6g,%.6g\n", r.method.c_str(),
                      r.gamma, r.rank, r.runs, r.diverged, r.final_gap_mean, r.final_gap_std, r.final_grad_sq_mean,
                      r.final_grad_sq_std, r.iterations_to_threshold, r.reached_threshold, r.nonconvex_margin,
                      r.pl_margin);
        out << buf;
    }
    return out.str();
}

}  // namespace raclora::harness

#endif  // RACLORA_HARNESS_SUMMARY_HPP
