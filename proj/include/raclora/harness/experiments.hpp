#ifndef RACLORA_HARNESS_EXPERIMENTS_HPP
#define RACLORA_HARNESS_EXPERIMENTS_HPP

// Experiment configuration, problem construction, and the preset runs.

#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/federated.hpp"
#include "raclora/harness/config.hpp"
#include "raclora/harness/datasets.hpp"
#include "raclora/harness/trace_io.hpp"
#include "raclora/objectives.hpp"
#include "raclora/optimizers.hpp"

namespace raclora::harness {

// ---------------------------------------------------------------------------
// Single-machine experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string objective = "counterexample";  // counterexample | linreg | logreg
    std::string data_path;                     // dataset file (fine-tuning data for linreg)
    std::string pretrain_path;                 // linreg only: W^0 is the ridge fit on this file
    std::uint64_t data_seed = 0;               // preset data when no file is given
    double task_shift = 1.0;

    std::vector<Method> methods{Method::RacLora};
    double gamma = 0.0;               // <= 0: per-method default
    std::vector<double> gamma_scales;  // if set, gamma = scale / L for each entry
    int rank = 1;
    double alpha = 0.0;  // <= 0: alpha = rank
    SketchSide side = SketchSide::Left;
    SketchDistribution distribution = SketchDistribution::GaussianStd;
    int chain_length = 1000;
    InnerKind inner = InnerKind::Gd;
    int inner_steps = 1;
    int cola_steps = 10;

    std::vector<std::uint64_t> seeds{0};
    std::string out_dir;
    bool fail_on_divergence = false;

    double resolved_alpha() const { return alpha > 0.0 ? alpha : static_cast<double>(rank); }
};

inline const std::set<std::string>& experiment_keys() {
    static const std::set<std::string> keys{
        "objective", "data", "pretrain", "data_seed", "task_shift", "method", "gamma", "gamma_scale",
        "rank", "alpha", "side", "distribution", "chain_length", "inner", "inner_steps", "cola_steps",
        "seed", "seeds", "seed_list", "out", "fail_on_divergence"};
    return keys;
}

inline std::vector<std::uint64_t> seeds_from(const KeyValueConfig& kv) {
    if (const auto list = kv.get("seed_list")) {
        std::vector<std::uint64_t> seeds;
        for (const auto& s : split_list(*list)) seeds.push_back(static_cast<std::uint64_t>(KeyValueConfig::to_int("seed_list", s)));
        require_distinct_seeds(seeds);
        return seeds;
    }
    const long first = kv.get_int("seed", 0);
    if (first < 0) throw InvalidConfig("seed must be non-negative");
    return seed_range(static_cast<std::uint64_t>(first), kv.get_int("seeds", 1));
}

inline ExperimentConfig experiment_from(const KeyValueConfig& kv) {
    kv.require_known(experiment_keys());
    ExperimentConfig c;
    c.objective = kv.get_string("objective", c.objective);
    if (c.objective != "counterexample" && c.objective != "linreg" && c.objective != "logreg") {
        throw InvalidConfig("unknown objective '" + c.objective + "'");
    }
    c.data_path = kv.get_string("data", "");
    c.pretrain_path = kv.get_string("pretrain", "");
    c.data_seed = static_cast<std::uint64_t>(kv.get_int("data_seed", 0));
    c.task_shift = kv.get_real("task_shift", c.task_shift);
    if (const auto m = kv.get("method")) {
        c.methods.clear();
        for (const auto& s : split_list(*m)) c.methods.push_back(parse_method(s));
        if (c.methods.empty()) throw InvalidConfig("method list is empty");
    }
    c.gamma = kv.get_real("gamma", 0.0);
    if (const auto g = kv.get("gamma_scale")) {
        for (const auto& s : split_list(*g)) c.gamma_scales.push_back(KeyValueConfig::to_real("gamma_scale", s));
    }
    c.rank = static_cast<int>(kv.get_int("rank", c.rank));
    c.alpha = kv.get_real("alpha", 0.0);
    c.side = parse_sketch_side(kv.get_string("side", "left"));
    c.distribution = parse_sketch_distribution(kv.get_string("distribution", "gaussian"));
    c.chain_length = static_cast<int>(kv.get_int("chain_length", c.chain_length));
    c.inner = parse_inner(kv.get_string("inner", "gd"));
    c.inner_steps = static_cast<int>(kv.get_int("inner_steps", 1));
    c.cola_steps = static_cast<int>(kv.get_int("cola_steps", c.cola_steps));
    c.seeds = seeds_from(kv);
    c.out_dir = kv.get_string("out", "");
    c.fail_on_divergence = kv.get_bool("fail_on_divergence", false);

    if (c.rank < 1) throw InvalidConfig("rank must be >= 1");
    if (c.chain_length < 1) throw InvalidConfig("chain_length must be >= 1");
    if (c.inner_steps < 1 || c.cola_steps < 1) throw InvalidConfig("step counts must be >= 1");
    for (double s : c.gamma_scales)
        if (!(s > 0.0)) throw InvalidConfig("gamma_scale entries must be positive");
    require_distinct_seeds(c.seeds);
    return c;
}

// Resolved configuration, one key=value per line, defaults filled in.
inline std::string describe(const ExperimentConfig& c) {
    std::ostringstream out;
    std::string methods;
    for (Method m : c.methods) methods += (methods.empty() ? "" : ",") + std::string(to_string(m));
    std::string scales;
    for (double s : c.gamma_scales) scales += (scales.empty() ? "" : ",") + format_real(s);
    std::string seeds;
    for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    out << "objective=" << c.objective << '\n'
        << "data=" << c.data_path << '\n'
        << "pretrain=" << c.pretrain_path << '\n'
        << "data_seed=" << c.data_seed << '\n'
        << "task_shift=" << format_real(c.task_shift) << '\n'
        << "method=" << methods << '\n'
        << "gamma=" << (c.gamma > 0.0 ? format_real(c.gamma) : std::string("default")) << '\n'
        << "gamma_scale=" << scales << '\n'
        << "rank=" << c.rank << '\n'
        << "alpha=" << format_real(c.resolved_alpha()) << '\n'
        << "side=" << to_string(c.side) << '\n'
        << "distribution=" << to_string(c.distribution) << '\n'
        << "chain_length=" << c.chain_length << '\n'
        << "inner=" << to_string(c.inner) << '\n'
        << "inner_steps=" << c.inner_steps << '\n'
        << "cola_steps=" << c.cola_steps << '\n'
        << "seed_list=" << seeds << '\n'
        << "out=" << c.out_dir << '\n'
        << "fail_on_divergence=" << (c.fail_on_divergence ? 1 : 0) << '\n';
    return out.str();
}

struct Problem {
    std::string label;
    Objective objective;
    Matrix w0;
};

inline Dataset load_dataset_of(const std::string& path, DataKind expected) {
    Dataset ds = read_dataset(path);
    if (ds.kind != expected) throw InvalidConfig(path + ": dataset kind is " + to_string(ds.kind));
    return ds;
}

inline Problem build_problem(const ExperimentConfig& c) {
    Problem p;
    p.label = c.objective;
    if (c.objective == "counterexample") {
        p.objective = make_quadratic(counterexample_spec());
        p.w0 = p.objective.zero_point();
    } else if (c.objective == "linreg") {
        Dataset finetune;
        Matrix w0;
        if (!c.data_path.empty()) {
            finetune = load_dataset_of(c.data_path, DataKind::LinReg);
            if (!c.pretrain_path.empty()) w0 = pretrained_weights(load_dataset_of(c.pretrain_path, DataKind::LinReg));
        } else {
            const LinRegPreset preset = linreg_preset(c.data_seed, c.task_shift);
            finetune = preset.finetune;
            w0 = pretrained_weights(preset.pretrain);
        }
        p.objective = finetune.objective();
        p.w0 = w0.size() == 0 ? p.objective.zero_point() : w0;
    } else {
        const Dataset ds = c.data_path.empty() ? logreg_preset(c.data_seed) : load_dataset_of(c.data_path, DataKind::LogReg);
        p.objective = with_optimum(ds.objective());
        p.w0 = p.objective.zero_point();
    }
    p.objective.check_shape(p.w0);
    return p;
}

inline ChainConfig chain_config_for(const ExperimentConfig& c, const Problem& p, Method method, double gamma,
                                    std::uint64_t seed) {
    ChainConfig cc;
    cc.chain_length = c.chain_length;
    cc.step_gamma = gamma;
    cc.sketch.side = c.side;
    cc.sketch.rank = c.rank;
    cc.sketch.target_rows = p.objective.param_rows;
    cc.sketch.target_cols = p.objective.param_cols;
    cc.sketch.distribution = c.distribution;
    cc.sketch.alpha = c.resolved_alpha();
    cc.inner = {c.inner, c.inner_steps};
    cc.seed = seed;
    cc.method = method;
    cc.cola_steps_per_block = c.cola_steps;
    return cc;
}

inline TraceFile make_trace_file(const Problem& p, const ChainConfig& cc, const ChainResult& res,
                                 std::optional<double> gamma_scale) {
    TraceFile tf;
    TraceHeader& h = tf.header;
    h.method = std::string(to_string(cc.method));
    h.objective = p.label;
    h.gamma = res.step_gamma;
    h.rank = cc.sketch.rank;
    h.alpha = cc.sketch.alpha;
    h.lambda_min_h = res.lambda_min_h;
    h.seed = cc.seed;
    auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
    if (gamma_scale) h.extra.emplace_back("gamma_scale", format_real(*gamma_scale));
    h.extra.emplace_back("inner", std::string(to_string(cc.inner.kind)));
    h.extra.emplace_back("inner_steps", std::to_string(cc.inner.steps));
    h.extra.emplace_back("side", std::string(to_string(cc.sketch.side)));
    h.extra.emplace_back("distribution", std::string(to_string(cc.sketch.distribution)));
    h.extra.emplace_back("chain_length", std::to_string(cc.chain_length));
    if (cc.method == Method::Cola) h.extra.emplace_back("cola_steps", std::to_string(cc.cola_steps_per_block));
    h.extra.emplace_back("L", opt(p.objective.smoothness_l));
    h.extra.emplace_back("mu", opt(p.objective.pl_mu));
    h.extra.emplace_back("f_star", opt(p.objective.optimum_value));
    h.extra.emplace_back("descent_checked", std::to_string(res.descent_checked));
    h.extra.emplace_back("descent_violations", std::to_string(res.descent_violations));
    h.extra.emplace_back("output_index", std::to_string(res.output_index));
    h.extra.emplace_back("diverged", res.diverged ? "1" : "0");
    tf.rows = res.trace;
    return tf;
}

inline std::string gamma_tag(std::optional<double> scale, double gamma) {
    char buf[48];
    if (scale) std::snprintf(buf, sizeof(buf), "gx%g", *scale);
    else std::snprintf(buf, sizeof(buf), "g%.6g", gamma);
    return buf;
}

inline std::string trace_file_name(const TraceFile& tf, std::optional<double> scale) {
    return tf.header.objective + "_" + tf.header.method + "_r" + std::to_string(tf.header.rank) + "_" +
           gamma_tag(scale, tf.header.gamma) + "_s" + std::to_string(tf.header.seed) + ".csv";
}

inline void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
}

struct ExperimentOutput {
    std::vector<TraceFile> traces;
    std::vector<std::string> paths;  // empty when out_dir is unset
    int diverged_runs = 0;
    std::vector<std::string> warnings;
};

inline void append(ExperimentOutput& into, ExperimentOutput&& from) {
    for (auto& t : from.traces) into.traces.push_back(std::move(t));
    for (auto& p : from.paths) into.paths.push_back(std::move(p));
    for (auto& w : from.warnings) into.warnings.push_back(std::move(w));
    into.diverged_runs += from.diverged_runs;
}

// One trace per (method, gamma, seed). Divergence is recorded in the trace,
// never thrown.
inline ExperimentOutput run_experiment(const ExperimentConfig& c, const Problem& p) {
    require_distinct_seeds(c.seeds);
    if (c.methods.empty()) throw InvalidConfig("method list is empty");
    if (!c.out_dir.empty()) ensure_directory(c.out_dir);

    std::vector<std::optional<double>> scales;
    if (c.gamma_scales.empty()) scales.emplace_back(std::nullopt);
    for (double s : c.gamma_scales) scales.emplace_back(s);

    ExperimentOutput out;
    for (Method method : c.methods) {
        for (const auto& scale : scales) {
            double gamma = c.gamma;
            if (scale) {
                if (!p.objective.smoothness_l) throw InvalidConfig("gamma_scale needs an objective with known L");
                gamma = *scale / *p.objective.smoothness_l;
            }
            for (std::uint64_t seed : c.seeds) {
                const ChainConfig cc = chain_config_for(c, p, method, gamma, seed);
                const ChainResult res = run_chain(p.objective, cc, p.w0);
                TraceFile tf = make_trace_file(p, cc, res, scale);
                if (res.diverged) ++out.diverged_runs;
                for (const auto& w : res.warnings) out.warnings.push_back(std::string(to_string(method)) + ": " + w);
                if (!c.out_dir.empty()) {
                    const std::string path = (std::filesystem::path(c.out_dir) / trace_file_name(tf, scale)).string();
                    write_trace(path, tf);
                    out.paths.push_back(path);
                }
                out.traces.push_back(std::move(tf));
            }
        }
    }
    return out;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& c) { return run_experiment(c, build_problem(c)); }

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// Counterexample: RAC-LoRA and AsymmLoRA at 1/L, LoRA and COLA at
// {1, 1/10, 1/100} / L. COLA runs chain_length / cola_steps blocks so every
// method sees the same number of gradient evaluations.
inline std::vector<ExperimentConfig> counterexample_preset(const ExperimentConfig& base) {
    ExperimentConfig c = base;
    c.objective = "counterexample";
    c.rank = 1;
    c.alpha = 0.0;
    c.inner = InnerKind::Gd;
    c.inner_steps = 1;
    c.gamma = 0.0;

    std::vector<ExperimentConfig> out;
    ExperimentConfig rac = c;
    rac.methods = {Method::RacLora, Method::AsymmLora};
    rac.gamma_scales = {1.0};
    out.push_back(rac);

    ExperimentConfig lora = c;
    lora.methods = {Method::JointLora};
    lora.gamma_scales = {1.0, 0.1, 0.01};
    out.push_back(lora);

    ExperimentConfig cola = lora;
    cola.methods = {Method::Cola};
    cola.chain_length = std::max(1, c.chain_length / c.cola_steps);
    out.push_back(cola);
    return out;
}

inline ExperimentOutput run_counterexample_preset(const ExperimentConfig& base) {
    ExperimentOutput all;
    for (const auto& c : counterexample_preset(base)) append(all, run_experiment(c));
    return all;
}

// First t with gap <= threshold, or -1.
inline long iterations_to_gap(const std::vector<TraceRecord>& trace, double threshold) {
    for (const auto& r : trace) {
        if (r.diverged) return -1;
        if (r.gap && *r.gap <= threshold) return r.t;
    }
    return -1;
}

struct RankSweepRow {
    int rank = 0;
    double mean_iterations = 0.0;  // over seeds that reached the threshold
    int reached = 0;
    int runs = 0;
    double ratio_to_full = 0.0;      // iters(r) / iters(full rank)
    double normalized_ratio = 0.0;   // ratio_to_full / (full / r)
};

struct RankSweep {
    std::vector<RankSweepRow> rows;
    ExperimentOutput output;
};

// RAC-LoRA at gamma = 1/L for each rank; the last rank is the reference.
inline RankSweep run_rank_sweep(const ExperimentConfig& base, const std::vector<int>& ranks, double threshold) {
    if (ranks.empty()) throw InvalidConfig("rank list is empty");
    const Problem problem = build_problem(base);
    RankSweep sweep;
    for (int r : ranks) {
        ExperimentConfig c = base;
        c.methods = {Method::RacLora};
        c.rank = r;
        c.alpha = 0.0;
        ExperimentOutput out = run_experiment(c, problem);
        RankSweepRow row;
        row.rank = r;
        row.runs = static_cast<int>(out.traces.size());
        double sum = 0.0;
        for (const auto& tf : out.traces) {
            const long it = iterations_to_gap(tf.rows, threshold);
            if (it >= 0) {
                sum += static_cast<double>(it);
                ++row.reached;
            }
        }
        row.mean_iterations = row.reached > 0 ? sum / row.reached : std::numeric_limits<double>::quiet_NaN();
        sweep.rows.push_back(row);
        append(sweep.output, std::move(out));
    }
    const RankSweepRow& ref = sweep.rows.back();
    for (auto& row : sweep.rows) {
        row.ratio_to_full = row.mean_iterations / ref.mean_iterations;
        row.normalized_ratio = row.ratio_to_full / (static_cast<double>(ref.rank) / row.rank);
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// Federated scenarios
// ---------------------------------------------------------------------------
//
// Keys: clients, cohort, local_gamma, server_beta, chain_length, rank, alpha,
// side, distribution, seed, theorem_mode, client_kind (quadratic | linreg |
// logreg), rows, cols, samples_per_client, heterogeneity, reg_lambda,
// data_seed, out, and client.<i> = dataset path (overrides generation).

struct FedScenario {
    FedConfig cfg;
    std::vector<ClientData> clients;
    Matrix w0;
    std::string client_kind = "linreg";
    std::uint64_t data_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    double heterogeneity = 1.0;
};

inline const std::set<std::string>& fed_keys() {
    static const std::set<std::string> keys{
        "clients", "cohort", "local_gamma", "server_beta", "chain_length", "rank", "alpha", "side",
        "distribution", "seed", "seeds", "seed_list", "theorem_mode", "client_kind", "rows", "cols",
        "samples_per_client", "heterogeneity", "reg_lambda", "data_seed", "out", "fail_on_divergence"};
    return keys;
}

// Quadratic clients f_m(x) = x^T M_m x + b_m^T x with M_m = diag(1 + 9 u),
// b_m = 1 + heterogeneity * N(0, 1).
inline std::vector<ClientData> quadratic_clients(int m, int rows, int cols, double heterogeneity, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<ClientData> clients;
    const int d = rows * cols;
    for (int id = 0; id < m; ++id) {
        QuadraticSpec q;
        q.rows = rows;
        q.cols = cols;
        q.m = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i) q.m(i, i) = 1.0 + 9.0 * rng.uniform();
        q.b = Vector::Ones(d) + heterogeneity * gaussian_vector(d, rng);
        clients.push_back({id, make_quadratic(q)});
    }
    return clients;
}

// Regression clients sharing a ground truth shifted per client by
// heterogeneity * N(0, 1).
inline std::vector<ClientData> regression_clients(DataKind kind, int m, const SyntheticParams& p, double heterogeneity,
                                                  std::uint64_t seed) {
    RandomStream rng(seed);
    const int d = p.rows * p.cols;
    const Vector w_true = gaussian_vector(d, rng);
    std::vector<ClientData> clients;
    for (int id = 0; id < m; ++id) {
        const Vector w_m = w_true + heterogeneity * gaussian_vector(d, rng);
        const Dataset ds = synthesize(kind, p, w_m, rng);
        clients.push_back({id, ds.objective()});
    }
    return clients;
}

inline FedScenario fed_scenario_from(const KeyValueConfig& kv) {
    kv.require_known(fed_keys());
    FedScenario s;
    s.client_kind = kv.get_string("client_kind", s.client_kind);
    s.data_seed = static_cast<std::uint64_t>(kv.get_int("data_seed", 0));
    s.heterogeneity = kv.get_real("heterogeneity", s.heterogeneity);
    s.seeds = seeds_from(kv);
    s.out_dir = kv.get_string("out", "");
    const int m = static_cast<int>(kv.get_int("clients", 4));
    if (m < 1) throw InvalidConfig("clients must be >= 1");
    const int rows = static_cast<int>(kv.get_int("rows", 3));
    const int cols = static_cast<int>(kv.get_int("cols", 3));
    if (rows < 1 || cols < 1) throw InvalidConfig("rows and cols must be positive");

    bool from_files = false;
    for (int id = 0; id < m; ++id) from_files = from_files || kv.has("client." + std::to_string(id));
    if (from_files) {
        for (int id = 0; id < m; ++id) {
            const auto path = kv.get("client." + std::to_string(id));
            if (!path) throw InvalidConfig("client." + std::to_string(id) + " is missing");
            s.clients.push_back({id, read_dataset(*path).objective()});
        }
        s.client_kind = "files";
    } else if (s.client_kind == "quadratic") {
        s.clients = quadratic_clients(m, rows, cols, s.heterogeneity, s.data_seed);
    } else if (s.client_kind == "linreg" || s.client_kind == "logreg") {
        SyntheticParams p;
        p.samples = static_cast<int>(kv.get_int("samples_per_client", 20));
        p.rows = rows;
        p.cols = cols;
        p.reg_lambda = kv.get_real("reg_lambda", 1e-3);
        s.clients = regression_clients(parse_data_kind(s.client_kind), m, p, s.heterogeneity, s.data_seed);
    } else {
        throw InvalidConfig("unknown client_kind '" + s.client_kind + "'");
    }

    FedConfig& f = s.cfg;
    f.num_clients = m;
    f.cohort_size = static_cast<int>(kv.get_int("cohort", m));
    f.local_gamma = kv.get_real("local_gamma", 0.0);
    f.server_beta = kv.get_real("server_beta", 1.0);
    f.chain_length = static_cast<int>(kv.get_int("chain_length", 100));
    f.theorem_mode = kv.get_bool("theorem_mode", false);
    f.sketch.side = parse_sketch_side(kv.get_string("side", "left"));
    f.sketch.rank = static_cast<int>(kv.get_int("rank", 1));
    f.sketch.target_rows = s.clients.front().objective.param_rows;
    f.sketch.target_cols = s.clients.front().objective.param_cols;
    f.sketch.distribution = parse_sketch_distribution(kv.get_string("distribution", "gaussian"));
    f.sketch.alpha = kv.get_real("alpha", static_cast<double>(f.sketch.rank));
    f.seed = s.seeds.front();
    s.cfg = resolve_fed_config(s.clients, f);
    s.w0 = s.clients.front().objective.zero_point();
    return s;
}

inline std::string describe(const FedScenario& s) {
    std::ostringstream out;
    std::string seeds;
    for (auto v : s.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(v);
    const FedConfig& f = s.cfg;
    out << "client_kind=" << s.client_kind << '\n'
        << "clients=" << f.num_clients << '\n'
        << "cohort=" << f.cohort_size << '\n'
        << "local_gamma=" << format_real(f.local_gamma) << '\n'
        << "server_beta=" << format_real(f.server_beta) << '\n'
        << "chain_length=" << f.chain_length << '\n'
        << "theorem_mode=" << (f.theorem_mode ? 1 : 0) << '\n'
        << "rank=" << f.sketch.rank << '\n'
        << "alpha=" << format_real(f.sketch.alpha) << '\n'
        << "side=" << to_string(f.sketch.side) << '\n'
        << "distribution=" << to_string(f.sketch.distribution) << '\n'
        << "shape=" << f.sketch.target_rows << 'x' << f.sketch.target_cols << '\n'
        << "heterogeneity=" << format_real(s.heterogeneity) << '\n'
        << "data_seed=" << s.data_seed << '\n'
        << "seed_list=" << seeds << '\n'
        << "out=" << s.out_dir << '\n';
    return out.str();
}

inline TraceFile fed_trace_file(const FedScenario& s, const FedConfig& f, const FedResult& res) {
    TraceFile tf;
    TraceHeader& h = tf.header;
    h.method = "fed-raclora";
    h.objective = "fed-" + s.client_kind;
    h.gamma = res.local_gamma;
    h.rank = f.sketch.rank;
    h.alpha = f.sketch.alpha;
    h.lambda_min_h = f.sketch.lambda_min_closed_form();
    h.seed = f.seed;
    h.extra.emplace_back("clients", std::to_string(f.num_clients));
    h.extra.emplace_back("cohort", std::to_string(f.cohort_size));
    h.extra.emplace_back("server_beta", format_real(f.server_beta));
    h.extra.emplace_back("eta_tilde", format_real(res.eta_tilde));
    h.extra.emplace_back("side", std::string(to_string(f.sketch.side)));
    h.extra.emplace_back("distribution", std::string(to_string(f.sketch.distribution)));
    h.extra.emplace_back("chain_length", std::to_string(f.chain_length));
    std::size_t upload = 0;
    for (const auto& r : res.rounds)
        for (auto u : r.upload_scalars) upload += u;
    h.extra.emplace_back("uploaded_scalars", std::to_string(upload));
    h.extra.emplace_back("diverged", res.diverged ? "1" : "0");
    tf.rows = res.trace;
    return tf;
}

struct FedOutput {
    std::vector<TraceFile> traces;
    std::vector<FedResult> results;
    std::vector<std::string> paths;
    int diverged_runs = 0;
};

inline FedOutput run_fed_scenario(const FedScenario& s) {
    require_distinct_seeds(s.seeds);
    if (!s.out_dir.empty()) ensure_directory(s.out_dir);
    FedOutput out;
    for (std::uint64_t seed : s.seeds) {
        FedConfig f = s.cfg;
        f.seed = seed;
        FedResult res = run_fed_chain(s.clients, f, s.w0);
        TraceFile tf = fed_trace_file(s, f, res);
        if (res.diverged) ++out.diverged_runs;
        if (!s.out_dir.empty()) {
            const std::string path = (std::filesystem::path(s.out_dir) /
                                      (tf.header.objective + "_fed-raclora_r" + std::to_string(f.sketch.rank) +
                                       "_s" + std::to_string(seed) + ".csv"))
                                         .string();
            write_trace(path, tf);
            out.paths.push_back(path);
        }
        out.traces.push_back(std::move(tf));
        out.results.push_back(std::move(res));
    }
    return out;
}

}  // namespace raclora::harness

#endif  // RACLORA_HARNESS_EXPERIMENTS_HPP
