#ifndef RACLORA_FEDERATED_HPP
#define RACLORA_FEDERATED_HPP

// Federated chain of low-rank blocks with a shared sketch per round.
//
// Each round the server samples a cohort, broadcasts (W^t, sketch) and every
// cohort client runs one RR pass of projected steps on its local loss. A
// client uploads only its trainable factor; the server averages the factors
// and merges W^{t+1} = W^t + beta (alpha/r) B_S mean(A_hat_m) (left sketch).
// With eta_tilde = beta gamma N this is the server step
// W^t - eta_tilde H (1/(C N)) sum_m sum_i grad f_{m, pi_i}(W_{m,i}).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/linalg.hpp"
#include "raclora/objectives.hpp"
#include "raclora/optimizers.hpp"
#include "raclora/random.hpp"
#include "raclora/sketch.hpp"

namespace raclora {

struct FedConfig {
    int num_clients = 1;
    int cohort_size = 1;
    double local_gamma = 0.0;  // <= 0 selects a default
    double server_beta = 1.0;
    int chain_length = 1;
    SketchSpec sketch;
    std::uint64_t seed = 0;
    // Enforce gamma N <= eta_tilde <= (1 - lambda_min^H) / (4 L).
    bool theorem_mode = false;
};

struct ClientData {
    int client_id = 0;
    Objective objective;
};

struct DissimilarityReport {
    double f_star = 0.0;
    std::vector<double> client_f_star;
    double delta_star = 0.0;
    std::vector<double> delta_star_m;
};

// c distinct client ids drawn uniformly from 0..m-1, returned sorted.
inline std::vector<int> sample_cohort(int m, int c, RandomStream& rng) {
    if (m < 1 || c < 1 || c > m) {
        throw InvalidConfig("sample_cohort: need 1 <= c <= m (got c=" + std::to_string(c) + ", m=" +
                            std::to_string(m) + ")");
    }
    const auto picks = rng.choose(static_cast<std::size_t>(m), static_cast<std::size_t>(c));
    std::vector<int> ids(picks.begin(), picks.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

// FNV-1a over the raw bytes of each matrix (shape included).
inline std::uint64_t content_hash(std::initializer_list<const Matrix*> parts) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    for (const Matrix* m : parts) {
        const std::int64_t shape[2] = {m->rows(), m->cols()};
        mix(shape, sizeof(shape));
        mix(m->data(), static_cast<std::size_t>(m->size()) * sizeof(double));
    }
    return h;
}

// What the server sends to every cohort client in a round.
struct Broadcast {
    Matrix w;
    Matrix sketch;
    std::uint64_t hash = 0;
};

inline Broadcast make_broadcast(const Matrix& w, const Matrix& sketch) {
    return {w, sketch, content_hash({&w, &sketch})};
}

struct LocalUpdate {
    Matrix factor;        // A_hat_m (r x n, left) or B_hat_m (m x r, right); the only thing uploaded
    Matrix displacement;  // W_{m,N} - W^t, kept for diagnostics
};

// One RR pass of W_{i+1} = W_i - gamma H grad f_{m, perm_i}(W_i) over the
// client's samples, expressed as the trainable factor whose merge
// reproduces the displacement.
inline LocalUpdate client_local_update(const ClientData& client, const Matrix& w, const Matrix& sketch,
                                       SketchSide side, double gamma, double alpha,
                                       const std::vector<std::size_t>& permutation) {
    const Objective& obj = client.objective;
    obj.check_shape(w);
    if (static_cast<int>(permutation.size()) != obj.sample_count) {
        throw InvalidConfig("client_local_update: permutation length differs from the client's sample count");
    }
    const Projector proj = build_projector(sketch, side);
    Matrix local = w;
    rr_pass(local, obj, proj, side, gamma, permutation);
    if (!local.allFinite()) throw DivergenceDetected(0, std::numeric_limits<double>::quiet_NaN());

    LocalUpdate out;
    out.displacement = local - w;
    const int r = side == SketchSide::Left ? static_cast<int>(sketch.cols()) : static_cast<int>(sketch.rows());
    const double inv_scale = r / alpha;
    if (side == SketchSide::Left) {
        const Matrix gram_pinv = pseudo_inverse(Matrix(sketch.transpose() * sketch));
        out.factor = inv_scale * (gram_pinv * (sketch.transpose() * out.displacement));
    } else {
        const Matrix gram_pinv = pseudo_inverse(Matrix(sketch * sketch.transpose()));
        out.factor = inv_scale * ((out.displacement * sketch.transpose()) * gram_pinv);
    }
    return out;
}

// Convenience overload drawing the permutation from `rng`.
inline LocalUpdate client_local_update(const ClientData& client, const Matrix& w, const Matrix& sketch,
                                       SketchSide side, double gamma, double alpha, RandomStream& rng) {
    return client_local_update(client, w, sketch, side, gamma, alpha,
                               rng.permutation(static_cast<std::size_t>(client.objective.sample_count)));
}

// W + beta (alpha/r) B_S mean(A_hat) (left) or W + beta (alpha/r) mean(B_hat) A_S (right).
inline Matrix server_merge(const Matrix& w, const std::vector<Matrix>& factors, const Matrix& sketch,
                           SketchSide side, double beta, double alpha, int r) {
    if (factors.empty()) throw InvalidConfig("server_merge: no client updates");
    Matrix mean = Matrix::Zero(factors.front().rows(), factors.front().cols());
    for (const auto& f : factors) {
        require_same_shape(mean, f, "server_merge");
        mean += f;
    }
    mean /= static_cast<double>(factors.size());
    return merge_factor(w, sketch, Matrix(beta * mean), alpha, r, side);
}

struct RoundLog {
    long round = 0;
    std::vector<int> cohort;
    std::uint64_t broadcast_hash = 0;
    std::vector<std::uint64_t> received_hashes;  // one per cohort client
    std::vector<std::size_t> upload_scalars;     // one per cohort client
    std::size_t full_update_scalars = 0;         // m x n, for comparison
};

struct FedResult {
    std::vector<TraceRecord> trace;
    std::vector<RoundLog> rounds;
    double local_gamma = 0.0;
    double eta_tilde = 0.0;
    bool diverged = false;
};

inline double fed_smoothness(const std::vector<ClientData>& clients) {
    double l = 0.0;
    for (const auto& c : clients) {
        if (!c.objective.smoothness_l) throw InvalidConfig("client " + std::to_string(c.client_id) + " has no L");
        l = std::max(l, *c.objective.smoothness_l);
    }
    return l;
}

// Fills the default local step and validates the configuration against the
// client list. In theorem mode also checks gamma N <= eta_tilde <= (1 - lambda)/(4L).
inline FedConfig resolve_fed_config(const std::vector<ClientData>& clients, FedConfig cfg) {
    if (clients.empty()) throw InvalidConfig("federated run needs at least one client");
    if (cfg.num_clients != static_cast<int>(clients.size())) {
        throw InvalidConfig("num_clients does not match the client list");
    }
    if (cfg.cohort_size < 1 || cfg.cohort_size > cfg.num_clients) throw InvalidConfig("need 1 <= cohort_size <= M");
    if (cfg.chain_length < 1) throw InvalidConfig("chain_length must be >= 1");
    if (!(cfg.server_beta > 0.0)) throw InvalidConfig("server_beta must be positive");
    cfg.sketch.validate();
    const int rows = clients.front().objective.param_rows;
    const int cols = clients.front().objective.param_cols;
    const int n = clients.front().objective.sample_count;
    for (const auto& c : clients) {
        if (c.objective.param_rows != rows || c.objective.param_cols != cols) {
            throw InvalidConfig("clients disagree on the parameter shape");
        }
        if (cfg.theorem_mode && c.objective.sample_count != n) {
            throw InvalidConfig("theorem mode needs the same sample count on every client");
        }
    }
    if (cfg.sketch.target_rows != rows || cfg.sketch.target_cols != cols) {
        throw InvalidConfig("sketch target shape does not match the clients' parameter shape");
    }

    const double lam = cfg.sketch.lambda_min_closed_form();
    if (!(cfg.local_gamma > 0.0)) {
        const double l = fed_smoothness(clients);
        cfg.local_gamma = cfg.theorem_mode ? (1.0 - lam) / (4.0 * l) / (cfg.server_beta * n)
                                           : 1.0 / (2.0 * l * n);
    }
    if (cfg.theorem_mode) {
        const double l = fed_smoothness(clients);
        const double eta_tilde = cfg.server_beta * cfg.local_gamma * n;
        const double upper = (1.0 - lam) / (4.0 * l);
        if (cfg.local_gamma * n > eta_tilde * (1.0 + 1e-12)) {
            throw InvalidConfig("theorem mode: gamma N <= eta_tilde requires server_beta >= 1");
        }
        if (eta_tilde > upper * (1.0 + 1e-12)) {
            throw InvalidConfig("theorem mode: eta_tilde = " + std::to_string(eta_tilde) +
                                " exceeds (1 - lambda_min^H) / (4 L) = " + std::to_string(upper));
        }
    }
    return cfg;
}

inline FedResult run_fed_chain(const std::vector<ClientData>& clients, const FedConfig& cfg_in, const Matrix& w0) {
    const FedConfig cfg = resolve_fed_config(clients, cfg_in);
    std::vector<Objective> parts;
    parts.reserve(clients.size());
    for (const auto& c : clients) parts.push_back(c.objective);
    Objective global = average_objective(parts);
    global.check_shape(w0);
    // Gap column needs f*; fall back to a numeric minimum when no closed form exists.
    if (!global.optimum_value) global = with_optimum(std::move(global));

    FedResult result;
    result.local_gamma = cfg.local_gamma;
    result.eta_tilde = cfg.server_beta * cfg.local_gamma * clients.front().objective.sample_count;

    RandomStream sketch_rng(cfg.seed);
    RandomStream cohort_rng(cfg.seed, {stream_tag::cohort});
    const double threshold = 1e6 * std::abs(global.value(w0)) + 1e6;
    const std::string tag = "fed-raclora";

    auto record = [&](long t, const Matrix& w) {
        TraceRecord rec;
        rec.t = t;
        rec.f_value = global.value(w);
        rec.grad_norm_sq = global.gradient(w).squaredNorm();
        if (global.optimum_value) rec.gap = rec.f_value - *global.optimum_value;
        rec.seed = cfg.seed;
        rec.method = tag;
        rec.diverged = !std::isfinite(rec.f_value) || rec.f_value > threshold;
        return rec;
    };

    Matrix w = w0;
    for (long t = 0; t < cfg.chain_length; ++t) {
        TraceRecord rec = record(t, w);
        if (rec.diverged) {
            result.trace.push_back(std::move(rec));
            result.diverged = true;
            return result;
        }
        const std::vector<int> cohort = sample_cohort(cfg.num_clients, cfg.cohort_size, cohort_rng);
        const Matrix sketch = sample_sketch(cfg.sketch, sketch_rng);
        const Broadcast message = make_broadcast(w, sketch);

        RoundLog log;
        log.round = t;
        log.cohort = cohort;
        log.broadcast_hash = message.hash;
        log.full_update_scalars = static_cast<std::size_t>(w.size());

        std::vector<Matrix> factors;
        factors.reserve(cohort.size());
        bool client_diverged = false;
        for (int id : cohort) {
            const Broadcast received = message;  // each client owns its copy
            log.received_hashes.push_back(content_hash({&received.w, &received.sketch}));
            const ClientData& client = clients[static_cast<std::size_t>(id)];
            const auto perm = rr_permutation(cfg.seed, t, static_cast<std::uint64_t>(id),
                                             client.objective.sample_count);
            try {
                LocalUpdate upd = client_local_update(client, received.w, received.sketch, cfg.sketch.side,
                                                      cfg.local_gamma, cfg.sketch.alpha, perm);
                log.upload_scalars.push_back(static_cast<std::size_t>(upd.factor.size()));
                factors.push_back(std::move(upd.factor));
            } catch (const DivergenceDetected&) {
                client_diverged = true;
                break;
            }
        }
        result.trace.push_back(std::move(rec));
        result.rounds.push_back(std::move(log));
        if (client_diverged) {
            TraceRecord bad;
            bad.t = t + 1;
            bad.f_value = std::numeric_limits<double>::quiet_NaN();
            bad.grad_norm_sq = std::numeric_limits<double>::quiet_NaN();
            bad.seed = cfg.seed;
            bad.method = tag;
            bad.diverged = true;
            result.trace.push_back(std::move(bad));
            result.diverged = true;
            return result;
        }
        w = server_merge(w, factors, sketch, cfg.sketch.side, cfg.server_beta, cfg.sketch.alpha, cfg.sketch.rank);
    }
    result.trace.push_back(record(cfg.chain_length, w));
    result.diverged = result.trace.back().diverged;
    return result;
}

// Functional dissimilarity: Delta* = f* - mean_m f_m* and
// Delta*_m = f* - (1/N) sum_i f_{m,i}*.
inline DissimilarityReport dissimilarity(const std::vector<ClientData>& clients) {
    if (clients.empty()) throw InvalidConfig("dissimilarity: no clients");
    std::vector<Objective> parts;
    for (const auto& c : clients) parts.push_back(c.objective);
    const Objective global = average_objective(parts);

    DissimilarityReport rep;
    rep.f_star = global.optimum_value ? *global.optimum_value : minimize(global).value;
    double mean_client = 0.0;
    for (const auto& c : clients) {
        const Objective& obj = c.objective;
        const double fm = obj.optimum_value ? *obj.optimum_value : minimize(obj).value;
        rep.client_f_star.push_back(fm);
        mean_client += fm;

        if (!obj.sample_infimum) throw Unsupported(obj.name + ": per-sample infima are not available");
        double mean_sample = 0.0;
        for (int i = 0; i < obj.sample_count; ++i) mean_sample += obj.sample_infimum(i);
        mean_sample /= obj.sample_count;
        rep.delta_star_m.push_back(rep.f_star - mean_sample);
    }
    mean_client /= static_cast<double>(clients.size());
    rep.delta_star = rep.f_star - mean_client;
    return rep;
}

}  // namespace raclora

#endif  // RACLORA_FEDERATED_HPP
