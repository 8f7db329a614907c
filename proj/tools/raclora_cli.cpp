// Command-line front end for the experiment harness.
//
//   raclora counterexample [--seeds 20] [--out DIR]
//   raclora run --config exp.cfg --set method=raclora,fpft
//   raclora sweep --seeds 10 --out DIR
//   raclora fed --config scenario.cfg
//   raclora estimate-lambda --rows 5 --rank 2
//   raclora summarize DIR/*.csv
//   raclora gen-data --kind linreg --seed 3 --out DIR
//
// Exit codes: 0 ok, 2 configuration error, 3 divergence (with
// --fail-on-divergence), 4 I/O error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raclora/harness/config.hpp"
#include "raclora/harness/datasets.hpp"
#include "raclora/harness/experiments.hpp"
#include "raclora/harness/summary.hpp"
#include "raclora/raclora.hpp"

namespace h = raclora::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

// Flags shared by the experiment subcommands. Unset flags leave the
// configuration untouched.
struct CommonFlags {
    std::optional<long> seed;
    std::optional<long> seeds;
    std::optional<double> gamma;
    std::optional<int> rank;
    std::optional<double> alpha;
    std::optional<std::string> method;
    std::optional<int> chain_length;
    std::optional<std::string> inner;
    std::optional<std::string> out;
    bool fail_on_divergence = false;
    std::string config_path;
    std::vector<std::string> sets;

    void attach(CLI::App* app, bool chain_flags = true) {
        app->add_option("--seed", seed, "first seed (falls back to RACLORA_SEED)");
        app->add_option("--seeds", seeds, "number of consecutive seeds");
        app->add_option("--rank", rank, "sketch rank r");
        app->add_option("--alpha", alpha, "LoRA scaling alpha (default r)");
        app->add_option("--chain-length", chain_length, "number of chain blocks / rounds");
        app->add_option("--out", out, "output directory for trace files");
        app->add_flag("--fail-on-divergence", fail_on_divergence, "exit with code 3 if any run diverges");
        app->add_option("--config", config_path, "key = value configuration file");
        app->add_option("--set", sets, "override: key=value (repeatable)");
        if (chain_flags) {
            app->add_option("--gamma", gamma, "step size (default per method)");
            app->add_option("--method", method, "comma list of raclora, lora, cola, asymmlora, fpft");
            app->add_option("--inner", inner, "inner solver")->check(CLI::IsMember({"gd", "rr", "sgd"}));
        }
    }

    // defaults < config file < flags < --set
    h::KeyValueConfig resolve(const h::KeyValueConfig& defaults) const {
        h::KeyValueConfig kv = defaults;
        if (!config_path.empty()) {
            for (const auto& [k, v] : h::KeyValueConfig::load(config_path).values()) kv.set(k, v);
        }
        if (seed) kv.set("seed", std::to_string(*seed));
        if (seeds) kv.set("seeds", std::to_string(*seeds));
        if (gamma) kv.set("gamma", h::format_real(*gamma));
        if (rank) kv.set("rank", std::to_string(*rank));
        if (alpha) kv.set("alpha", h::format_real(*alpha));
        if (method) kv.set("method", *method);
        if (chain_length) kv.set("chain_length", std::to_string(*chain_length));
        if (inner) kv.set("inner", *inner);
        if (out) kv.set("out", *out);
        if (fail_on_divergence) kv.set("fail_on_divergence", "1");
        for (const auto& s : sets) kv.set_assignment(s);
        if (!kv.has("seed") && !kv.has("seed_list")) {
            if (const char* env = std::getenv("RACLORA_SEED")) kv.set("seed", env);
        }
        return kv;
    }
};

void print_config(const std::string& text) {
    std::cout << "[config]\n" << text << "[/config]\n";
}

void print_paths(const std::vector<std::string>& paths) {
    for (const auto& p : paths) std::cout << "wrote " << p << '\n';
}

int finish(int diverged_runs, bool fail_on_divergence) {
    if (diverged_runs > 0) {
        std::cout << "diverged runs: " << diverged_runs << '\n';
        if (fail_on_divergence) return kExitDiverged;
    }
    return kExitOk;
}

int cmd_counterexample(const CommonFlags& flags) {
    h::KeyValueConfig defaults;
    defaults.set("objective", "counterexample");
    defaults.set("seeds", "20");
    defaults.set("chain_length", "3000");
    const h::ExperimentConfig base = h::experiment_from(flags.resolve(defaults));
    std::vector<h::TraceFile> all;
    int diverged = 0;
    for (const auto& cfg : h::counterexample_preset(base)) {
        print_config(h::describe(cfg));
        h::ExperimentOutput out = h::run_experiment(cfg);
        print_paths(out.paths);
        diverged += out.diverged_runs;
        for (auto& t : out.traces) all.push_back(std::move(t));
    }
    std::cout << h::format_summary(h::summarize(all, 1e-10));
    return finish(diverged, base.fail_on_divergence);
}

int cmd_run(const CommonFlags& flags) {
    const h::ExperimentConfig cfg = h::experiment_from(flags.resolve({}));
    print_config(h::describe(cfg));
    const h::ExperimentOutput out = h::run_experiment(cfg);
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    print_paths(out.paths);
    std::cout << h::format_summary(h::summarize(out.traces));
    return finish(out.diverged_runs, cfg.fail_on_divergence);
}

int cmd_sweep(const CommonFlags& flags, const std::string& ranks_text, double threshold) {
    h::KeyValueConfig defaults;
    defaults.set("objective", "linreg");
    defaults.set("seeds", "10");
    defaults.set("chain_length", "3000");
    const h::ExperimentConfig cfg = h::experiment_from(flags.resolve(defaults));
    std::vector<int> ranks;
    for (const auto& r : h::split_list(ranks_text)) ranks.push_back(static_cast<int>(h::KeyValueConfig::to_int("ranks", r)));
    std::string ranks_line;
    for (int r : ranks) ranks_line += (ranks_line.empty() ? "" : ",") + std::to_string(r);
    print_config(h::describe(cfg) + "ranks=" + ranks_line + "\nthreshold=" + h::format_real(threshold) + "\n");

    const h::RankSweep sweep = h::run_rank_sweep(cfg, ranks, threshold);
    print_paths(sweep.output.paths);
    std::cout << "rank,mean_iterations,reached,runs,ratio_to_full,normalized_ratio\n";
    for (const auto& row : sweep.rows) {
        std::printf("%d,%.6g,%d,%d,%.6g,%.6g\n", row.rank, row.mean_iterations, row.reached, row.runs,
                    row.ratio_to_full, row.normalized_ratio);
    }
    return finish(sweep.output.diverged_runs, cfg.fail_on_divergence);
}

int cmd_fed(const CommonFlags& flags) {
    const h::KeyValueConfig kv = flags.resolve({});
    const h::FedScenario scenario = h::fed_scenario_from(kv);
    print_config(h::describe(scenario));

    const raclora::DissimilarityReport dis = raclora::dissimilarity(scenario.clients);
    std::cout << "f_star=" << h::format_real(dis.f_star) << '\n';
    std::cout << "delta_star=" << h::format_real(dis.delta_star) << '\n';
    for (std::size_t m = 0; m < dis.delta_star_m.size(); ++m) {
        std::cout << "delta_star_m[" << m << "]=" << h::format_real(dis.delta_star_m[m]) << '\n';
    }

    const h::FedOutput out = h::run_fed_scenario(scenario);
    print_paths(out.paths);
    if (!out.results.empty() && !out.results.front().rounds.empty()) {
        const auto& round = out.results.front().rounds.front();
        std::cout << "upload_scalars_per_client=" << round.upload_scalars.front()
                  << " full_update_scalars=" << round.full_update_scalars << '\n';
    }
    std::cout << h::format_summary(h::summarize(out.traces));
    return finish(out.diverged_runs, kv.get_bool("fail_on_divergence", false));
}

int cmd_estimate_lambda(int rows, int cols, int rank, const std::string& side, const std::string& dist, int samples,
                        std::optional<long> seed) {
    raclora::SketchSpec spec;
    spec.side = raclora::parse_sketch_side(side);
    spec.rank = rank;
    spec.target_rows = rows;
    spec.target_cols = cols;
    spec.distribution = raclora::parse_sketch_distribution(dist);
    spec.validate();
    if (samples < 1) throw raclora::InvalidConfig("samples must be >= 1");
    std::uint64_t s = 0;
    if (seed) s = static_cast<std::uint64_t>(*seed);
    else if (const char* env = std::getenv("RACLORA_SEED")) s = std::strtoull(env, nullptr, 10);

    print_config("rows=" + std::to_string(rows) + "\ncols=" + std::to_string(cols) + "\nrank=" + std::to_string(rank) +
                 "\nside=" + side + "\ndistribution=" + dist + "\nsamples=" + std::to_string(samples) +
                 "\nseed=" + std::to_string(s) + "\n");
    raclora::RandomStream rng(s);
    const raclora::ExpectedProjector est = raclora::estimate_expected_projector(spec, samples, rng);
    std::cout << "lambda_min_hat=" << h::format_real(est.lambda_min_hat) << '\n'
              << "lambda_max_hat=" << h::format_real(est.lambda_max_hat) << '\n'
              << "lambda_closed_form=" << h::format_real(spec.lambda_min_closed_form()) << '\n'
              << "std_err=" << h::format_real(est.std_err) << '\n';
    std::cout << "mean_h:\n";
    for (Eigen::Index i = 0; i < est.mean_h.rows(); ++i) {
        for (Eigen::Index j = 0; j < est.mean_h.cols(); ++j) std::printf(j ? " %.6f" : "%.6f", est.mean_h(i, j));
        std::printf("\n");
    }
    return kExitOk;
}

int cmd_summarize(const std::vector<std::string>& files, double threshold) {
    std::vector<h::TraceFile> traces;
    for (const auto& f : files) traces.push_back(h::read_trace(f));
    std::cout << h::format_summary(h::summarize(traces, threshold));
    return kExitOk;
}

int cmd_gen_data(const std::string& kind, std::optional<long> seed, const std::string& out_dir, double task_shift) {
    std::uint64_t s = 0;
    if (seed) s = static_cast<std::uint64_t>(*seed);
    else if (const char* env = std::getenv("RACLORA_SEED")) s = std::strtoull(env, nullptr, 10);
    print_config("kind=" + kind + "\nseed=" + std::to_string(s) + "\nout=" + out_dir +
                 "\ntask_shift=" + h::format_real(task_shift) + "\n");
    h::ensure_directory(out_dir);
    const std::filesystem::path dir(out_dir);
    if (kind == "linreg") {
        const h::LinRegPreset preset = h::linreg_preset(s, task_shift);
        const auto pre = (dir / ("linreg_pretrain_s" + std::to_string(s) + ".csv")).string();
        const auto fine = (dir / ("linreg_finetune_s" + std::to_string(s) + ".csv")).string();
        h::write_dataset(pre, preset.pretrain);
        h::write_dataset(fine, preset.finetune);
        print_paths({pre, fine});
    } else if (kind == "logreg") {
        const auto path = (dir / ("logreg_s" + std::to_string(s) + ".csv")).string();
        h::write_dataset(path, h::logreg_preset(s));
        print_paths({path});
    } else {
        throw raclora::InvalidConfig("unknown dataset kind '" + kind + "'");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sketch-projected low-rank gradient chains on convex problems"};
    app.require_subcommand(1);

    CommonFlags ce_flags, run_flags, sweep_flags, fed_flags;
    auto* ce = app.add_subcommand("counterexample", "run every method on the 3x3 quadratic counterexample");
    ce_flags.attach(ce, false);

    auto* run = app.add_subcommand("run", "run one experiment configuration");
    run_flags.attach(run);

    auto* sweep = app.add_subcommand("sweep", "rank sweep on the linear-regression preset");
    sweep_flags.attach(sweep);
    std::string ranks = "1,2,5,10";
    double sweep_threshold = 1e-6;
    sweep->add_option("--ranks", ranks, "comma list of ranks; the last one is the reference");
    sweep->add_option("--threshold", sweep_threshold, "gap threshold for iteration counts");

    auto* fed = app.add_subcommand("fed", "federated chain on a client scenario");
    fed_flags.attach(fed, false);

    auto* est = app.add_subcommand("estimate-lambda", "Monte Carlo estimate of E[H]");
    int est_rows = 3, est_cols = 3, est_rank = 1, est_samples = 10000;
    std::string est_side = "left", est_dist = "gaussian";
    std::optional<long> est_seed;
    est->add_option("--rows", est_rows, "m");
    est->add_option("--cols", est_cols, "n");
    est->add_option("--rank", est_rank, "r");
    est->add_option("--side", est_side, "left or right");
    est->add_option("--distribution", est_dist, "gaussian, rademacher or coordinate");
    est->add_option("--samples", est_samples, "number of sketches");
    est->add_option("--seed", est_seed, "seed (falls back to RACLORA_SEED)");

    auto* sum = app.add_subcommand("summarize", "aggregate trace files");
    std::vector<std::string> sum_files;
    double sum_threshold = 1e-6;
    sum->add_option("files", sum_files, "trace files")->required();
    sum->add_option("--threshold", sum_threshold, "gap threshold for iteration counts");

    auto* gen = app.add_subcommand("gen-data", "write the synthetic dataset presets");
    std::string gen_kind = "linreg", gen_out = ".";
    std::optional<long> gen_seed;
    double gen_shift = 1.0;
    gen->add_option("--kind", gen_kind, "linreg or logreg")->check(CLI::IsMember({"linreg", "logreg"}));
    gen->add_option("--seed", gen_seed, "data seed (falls back to RACLORA_SEED)");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--task-shift", gen_shift, "fine-tuning task shift scale");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*ce) return cmd_counterexample(ce_flags);
        if (*run) return cmd_run(run_flags);
        if (*sweep) return cmd_sweep(sweep_flags, ranks, sweep_threshold);
        if (*fed) return cmd_fed(fed_flags);
        if (*est) return cmd_estimate_lambda(est_rows, est_cols, est_rank, est_side, est_dist, est_samples, est_seed);
        if (*sum) return cmd_summarize(sum_files, sum_threshold);
        if (*gen) return cmd_gen_data(gen_kind, gen_seed, gen_out, gen_shift);
    } catch (const raclora::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const raclora::DivergenceDetected& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const raclora::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
