#ifndef RACLORA_OPTIMIZERS_HPP
#define RACLORA_OPTIMIZERS_HPP

// Chains of low-rank blocks and the baselines they are compared against.
//
// A RAC-LoRA block samples a sketch, freezes it, and trains the other
// factor. With a GD inner solver the trained factor has a closed form and the
// merged block reduces to the projected step W <- W - gamma H grad f(W)
// (H G for a left sketch, G H for a right sketch), where gamma = (alpha/r) eta.
// RR and SGD inner solvers take several projected steps under the same H.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/linalg.hpp"
#include "raclora/objectives.hpp"
#include "raclora/random.hpp"
#include "raclora/sketch.hpp"

namespace raclora {

enum class Method { RacLora, JointLora, Cola, AsymmLora, Fpft };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::RacLora: return "raclora";
        case Method::JointLora: return "lora";
        case Method::Cola: return "cola";
        case Method::AsymmLora: return "asymmlora";
        case Method::Fpft: return "fpft";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    if (s == "raclora") return Method::RacLora;
    if (s == "lora" || s == "jointlora") return Method::JointLora;
    if (s == "cola") return Method::Cola;
    if (s == "asymmlora") return Method::AsymmLora;
    if (s == "fpft") return Method::Fpft;
    throw InvalidConfig("unknown method '" + std::string(s) + "'");
}

enum class InnerKind { Gd, Rr, Sgd };

// Inner solver for one chain block. Gd with steps = 1 is the single
// closed-form step; Rr is one pass over a permutation; Sgd takes `steps`
// single-sample steps.
struct InnerSolver {
    InnerKind kind = InnerKind::Gd;
    int steps = 1;

    static InnerSolver gd_one_step() { return {InnerKind::Gd, 1}; }
    static InnerSolver gd_steps(int k) { return {InnerKind::Gd, k}; }
    static InnerSolver rr_one_pass() { return {InnerKind::Rr, 1}; }
    static InnerSolver sgd(int k) { return {InnerKind::Sgd, k}; }
};

inline std::string_view to_string(InnerKind k) {
    switch (k) {
        case InnerKind::Gd: return "gd";
        case InnerKind::Rr: return "rr";
        case InnerKind::Sgd: return "sgd";
    }
    return "?";
}

inline InnerKind parse_inner(std::string_view s) {
    if (s == "gd") return InnerKind::Gd;
    if (s == "rr") return InnerKind::Rr;
    if (s == "sgd") return InnerKind::Sgd;
    throw InvalidConfig("unknown inner solver '" + std::string(s) + "'");
}

struct ChainConfig {
    int chain_length = 1;
    double step_gamma = 0.0;  // <= 0 selects the default for the inner solver
    SketchSpec sketch;
    InnerSolver inner;
    std::uint64_t seed = 0;
    Method method = Method::RacLora;
    int cola_steps_per_block = 10;
};

struct ChainState {
    Matrix w;
    long t = 0;
    RandomStream rng;
    Matrix a;  // JointLora / Cola: r x n
    Matrix b;  // JointLora / Cola: m x r
    double divergence_threshold = std::numeric_limits<double>::infinity();

    ChainState(Matrix w0, std::uint64_t seed) : w(std::move(w0)), rng(seed) {}
};

struct TraceRecord {
    long t = 0;
    double f_value = 0.0;
    double grad_norm_sq = 0.0;
    std::optional<double> gap;
    std::uint64_t seed = 0;
    std::string method;
    // <grad f, H grad f> = ||H grad f||^2 under the block's projector; NaN
    // when the record has no projector (final records, joint factors).
    double projected_grad_sq = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
};

// Second-moment constants: E||g||^2 <= 2 a1 (f - f_inf) + b1 ||grad f||^2 + c1.
struct AbcConstants {
    double a1 = 0.0;
    double b1 = 0.0;
    double c1 = 0.0;
};

using GradientSampler = std::function<Matrix(const Matrix&, RandomStream&)>;

inline GradientSampler full_gradient_sampler(const Objective& obj) {
    return [grad = obj.gradient](const Matrix& w, RandomStream&) { return grad(w); };
}

// g(W) = grad f_i(W) with i uniform over the N summands.
inline GradientSampler uniform_sample_sampler(const Objective& obj) {
    return [sg = obj.sample_gradient, n = obj.sample_count](const Matrix& w, RandomStream& rng) {
        return sg(w, static_cast<int>(rng.index(static_cast<std::size_t>(n))));
    };
}

inline AbcConstants abc_full_gradient() { return {0.0, 1.0, 0.0}; }

// Uniform single-sample sampling with L_i-smooth summands:
// A = max L_i, B = 0, C = 2 A (f_inf - mean_i f_i_inf).
inline AbcConstants abc_uniform_sampling(const Objective& obj) {
    if (!obj.sample_smoothness_max || !obj.optimum_value || !obj.sample_infimum) {
        throw Unsupported(obj.name + ": expected-smoothness constants need L_i, f* and per-sample infima");
    }
    double mean_inf = 0.0;
    for (int i = 0; i < obj.sample_count; ++i) mean_inf += obj.sample_infimum(i);
    mean_inf /= obj.sample_count;
    const double a = *obj.sample_smoothness_max;
    return {a, 0.0, 2.0 * a * std::max(0.0, *obj.optimum_value - mean_inf)};
}

// Largest SGD stepsize allowed by the non-convex SGD theorem.
inline double sgd_step_bound_nonconvex(double l, const AbcConstants& abc, double lambda_min_h, double lambda_max_h,
                                       long horizon) {
    const double inf = std::numeric_limits<double>::infinity();
    const double first = abc.a1 > 0.0 ? 1.0 / std::sqrt(l * abc.a1 * lambda_max_h * static_cast<double>(horizon)) : inf;
    const double second = abc.b1 > 0.0 ? 1.0 / (l * abc.b1 * lambda_max_h / lambda_min_h) : inf;
    return std::min(first, second);
}

// Largest SGD stepsize allowed by the PL SGD theorem.
inline double sgd_step_bound_pl(double l, double mu, const AbcConstants& abc, double lambda_min_h,
                                double lambda_max_h) {
    const double inf = std::numeric_limits<double>::infinity();
    const double ratio = lambda_max_h / lambda_min_h;
    const double first = abc.a1 > 0.0 ? mu / (2.0 * abc.a1 * l * ratio) : inf;
    const double second = abc.b1 > 0.0 ? 1.0 / (l * abc.b1 * ratio) : inf;
    return std::min(first, second);
}

// ---------------------------------------------------------------------------
// Closed-form subproblem and merge
// ---------------------------------------------------------------------------

// Minimizer of the smoothness upper bound over the trainable factor:
// A_hat = -eta (B^T B)^+ B^T G (Left) or B_hat = -eta G A^T (A A^T)^+ (Right).
inline Matrix solve_subproblem_closed_form(const Matrix& sketch, const Matrix& grad, double eta, SketchSide side) {
    if (side == SketchSide::Left) {
        if (sketch.rows() != grad.rows()) throw ShapeError("solve_subproblem_closed_form: B rows != grad rows");
        return -eta * (pseudo_inverse(Matrix(sketch.transpose() * sketch)) * (sketch.transpose() * grad));
    }
    if (sketch.cols() != grad.cols()) throw ShapeError("solve_subproblem_closed_form: A cols != grad cols");
    return -eta * ((grad * sketch.transpose()) * pseudo_inverse(Matrix(sketch * sketch.transpose())));
}

// W + (alpha/r) B_S A_hat (Left) or W + (alpha/r) B_hat A_S (Right).
inline Matrix merge_factor(const Matrix& w, const Matrix& sketch, const Matrix& factor, double alpha, int rank,
                           SketchSide side) {
    const double scale = alpha / rank;
    if (side == SketchSide::Left) return w + scale * (sketch * factor);
    return w + scale * (factor * sketch);
}

// ---------------------------------------------------------------------------
// Step sizes and validation
// ---------------------------------------------------------------------------

inline double default_step_gamma(const Objective& obj, const ChainConfig& cfg) {
    if (!obj.smoothness_l) throw InvalidConfig(obj.name + ": no smoothness constant; set the step size explicitly");
    const double l = *obj.smoothness_l;
    if (cfg.method == Method::JointLora || cfg.method == Method::Cola || cfg.method == Method::AsymmLora) {
        return 1.0 / l;
    }
    switch (cfg.inner.kind) {
        case InnerKind::Gd: return 1.0 / l;
        case InnerKind::Rr: return 1.0 / (2.0 * l * obj.sample_count);
        case InnerKind::Sgd: {
            const double lam = cfg.method == Method::Fpft ? 1.0 : cfg.sketch.lambda_min_closed_form();
            const AbcConstants abc = obj.sample_count == 1 ? abc_full_gradient() : abc_uniform_sampling(obj);
            const long horizon = static_cast<long>(cfg.chain_length) * cfg.inner.steps;
            const double bound = sgd_step_bound_nonconvex(l, abc, lam, lam, horizon);
            return std::isfinite(bound) ? bound : 1.0 / l;
        }
    }
    return 1.0 / l;
}

inline ChainConfig resolve_chain_config(const Objective& obj, ChainConfig cfg) {
    if (cfg.chain_length < 1) throw InvalidConfig("chain_length must be >= 1");
    if (cfg.inner.steps < 1) throw InvalidConfig("inner solver steps must be >= 1");
    if (cfg.cola_steps_per_block < 1) throw InvalidConfig("cola_steps_per_block must be >= 1");
    if (cfg.sketch.target_rows != obj.param_rows || cfg.sketch.target_cols != obj.param_cols) {
        throw InvalidConfig("sketch target shape does not match the objective's parameter shape");
    }
    cfg.sketch.validate();
    if (!(cfg.step_gamma > 0.0)) cfg.step_gamma = default_step_gamma(obj, cfg);
    if (!std::isfinite(cfg.step_gamma)) throw InvalidConfig("step size must be finite");
    return cfg;
}

// ---------------------------------------------------------------------------
// Single steps
// ---------------------------------------------------------------------------

namespace detail {

inline TraceRecord make_record(const ChainState& state, const Objective& obj, const ChainConfig& cfg,
                               const Matrix& at, const Matrix& grad) {
    TraceRecord rec;
    rec.t = state.t;
    rec.f_value = obj.value(at);
    rec.grad_norm_sq = grad.squaredNorm();
    if (obj.optimum_value) rec.gap = rec.f_value - *obj.optimum_value;
    rec.seed = cfg.seed;
    rec.method = std::string(to_string(cfg.method));
    return rec;
}

inline void check_divergence(const ChainState& state, double f_value) {
    if (!std::isfinite(f_value) || f_value > state.divergence_threshold) throw DivergenceDetected(state.t, f_value);
}

inline void check_iterate(const ChainState& state, const Matrix& w) {
    if (!w.allFinite()) throw DivergenceDetected(state.t, std::numeric_limits<double>::quiet_NaN());
}

inline void apply_step(Matrix& w, double gamma, const Matrix& direction) { w -= gamma * direction; }

inline Projector draw_projector(ChainState& state, const ChainConfig& cfg) {
    if (cfg.method == Method::Fpft) return identity_projector(cfg.sketch.projector_dim());
    return build_projector(sample_sketch(cfg.sketch, state.rng), cfg.sketch.side);
}

}  // namespace detail

// One GD block: fresh sketch, then W <- W - gamma H grad f(W) (repeated
// inner.steps times under the same H). Returns the record for W^t.
inline TraceRecord rac_gd_step(ChainState& state, const Objective& obj, const ChainConfig& cfg) {
    const Matrix grad = obj.gradient(state.w);
    TraceRecord rec = detail::make_record(state, obj, cfg, state.w, grad);
    detail::check_divergence(state, rec.f_value);

    const Projector proj = detail::draw_projector(state, cfg);
    const Matrix direction = project(proj, grad, cfg.sketch.side);
    rec.projected_grad_sq = frobenius_inner(grad, direction);

    detail::apply_step(state.w, cfg.step_gamma, direction);
    for (int k = 1; k < cfg.inner.steps; ++k) {
        detail::check_iterate(state, state.w);
        detail::apply_step(state.w, cfg.step_gamma, project(proj, obj.gradient(state.w), cfg.sketch.side));
    }
    detail::check_iterate(state, state.w);
    ++state.t;
    return rec;
}

// Permutation used by the RR epoch of block t; drawn from a stream derived
// from (seed, t, client) so that it never perturbs the sketch stream.
inline std::vector<std::size_t> rr_permutation(std::uint64_t seed, long t, std::uint64_t client, int n) {
    RandomStream perm_rng(seed, {stream_tag::permutation, static_cast<std::uint64_t>(t), client});
    return perm_rng.permutation(static_cast<std::size_t>(n));
}

// Runs W_{i+1} = W_i - gamma H grad f_{perm_i}(W_i) over the whole permutation.
inline void rr_pass(Matrix& w, const Objective& obj, const Projector& proj, SketchSide side, double gamma,
                    const std::vector<std::size_t>& perm) {
    for (std::size_t i : perm) {
        detail::apply_step(w, gamma, project(proj, obj.sample_gradient(w, static_cast<int>(i)), side));
        if (!w.allFinite()) return;
    }
}

// One RR block: one sketch and one permutation, N sequential projected steps.
inline TraceRecord rac_rr_epoch(ChainState& state, const Objective& obj, const ChainConfig& cfg) {
    const Matrix grad = obj.gradient(state.w);
    TraceRecord rec = detail::make_record(state, obj, cfg, state.w, grad);
    detail::check_divergence(state, rec.f_value);

    const Projector proj = detail::draw_projector(state, cfg);
    rec.projected_grad_sq = frobenius_inner(grad, project(proj, grad, cfg.sketch.side));

    const auto perm = rr_permutation(cfg.seed, state.t, 0, obj.sample_count);
    rr_pass(state.w, obj, proj, cfg.sketch.side, cfg.step_gamma, perm);
    detail::check_iterate(state, state.w);
    ++state.t;
    return rec;
}

// One SGD block: one sketch, inner.steps steps W <- W - gamma H g(W).
inline TraceRecord rac_sgd_step(ChainState& state, const Objective& obj, const ChainConfig& cfg,
                                const GradientSampler& sampler) {
    const Matrix grad = obj.gradient(state.w);
    TraceRecord rec = detail::make_record(state, obj, cfg, state.w, grad);
    detail::check_divergence(state, rec.f_value);

    const Projector proj = detail::draw_projector(state, cfg);
    rec.projected_grad_sq = frobenius_inner(grad, project(proj, grad, cfg.sketch.side));

    for (int k = 0; k < cfg.inner.steps; ++k) {
        detail::apply_step(state.w, cfg.step_gamma, project(proj, sampler(state.w, state.rng), cfg.sketch.side));
        detail::check_iterate(state, state.w);
    }
    ++state.t;
    return rec;
}

// Simultaneous LoRA update of both factors at the composite W + (alpha/r) B A.
// state.w stays frozen. Returns the record for the composite before the step.
inline TraceRecord joint_lora_step(ChainState& state, const Objective& obj, const ChainConfig& cfg, double eta,
                                   double alpha, int r) {
    const double scale = alpha / r;
    const Matrix composite = state.w + scale * (state.b * state.a);
    const Matrix grad = obj.gradient(composite);
    TraceRecord rec = detail::make_record(state, obj, cfg, composite, grad);
    detail::check_divergence(state, rec.f_value);

    Matrix a_next = state.a - (eta * scale) * (state.b.transpose() * grad);
    Matrix b_next = state.b - (eta * scale) * (grad * state.a.transpose());
    if (!a_next.allFinite() || !b_next.allFinite()) {
        throw DivergenceDetected(state.t + 1, std::numeric_limits<double>::quiet_NaN());
    }
    state.a = std::move(a_next);
    state.b = std::move(b_next);
    ++state.t;
    return rec;
}

// ---------------------------------------------------------------------------
// Chain runner
// ---------------------------------------------------------------------------

struct ChainResult {
    std::vector<TraceRecord> trace;
    // Index drawn uniformly from 0..T-1 for the randomized-output guarantee.
    long output_index = 0;
    bool diverged = false;
    long descent_checked = 0;
    long descent_violations = 0;
    double step_gamma = 0.0;
    double lambda_min_h = 1.0;
    std::vector<std::string> warnings;
};

// Lower bound on the smallest eigenvalue of E[H] used by the rate checks.
inline double chain_lambda_min(const ChainConfig& cfg) {
    return cfg.method == Method::Fpft ? 1.0 : cfg.sketch.lambda_min_closed_form();
}

namespace detail {

inline void init_factors(ChainState& state, const ChainConfig& cfg) {
    const int r = cfg.sketch.rank;
    state.a = Matrix(r, cfg.sketch.target_cols);
    for (Eigen::Index i = 0; i < state.a.size(); ++i) state.a.data()[i] = state.rng.normal();
    state.b = Matrix::Zero(cfg.sketch.target_rows, r);
}

inline TraceRecord final_record(const ChainState& state, const Objective& obj, const ChainConfig& cfg,
                                const Matrix& at) {
    TraceRecord rec = make_record(state, obj, cfg, at, obj.gradient(at));
    rec.diverged = !std::isfinite(rec.f_value) || rec.f_value > state.divergence_threshold;
    return rec;
}

}  // namespace detail

// Runs a whole chain. The trace holds one record per block (per gradient
// step for the factored baselines) plus a final record for the last iterate.
inline ChainResult run_chain(const Objective& obj, const ChainConfig& cfg_in, const Matrix& w0,
                             const GradientSampler& sampler = {}) {
    obj.check_shape(w0);
    require_finite(w0, "run_chain w0");
    const ChainConfig cfg = resolve_chain_config(obj, cfg_in);

    ChainResult result;
    result.step_gamma = cfg.step_gamma;
    result.lambda_min_h = chain_lambda_min(cfg);
    if (obj.smoothness_l && cfg.step_gamma > 1.0 / *obj.smoothness_l * (1.0 + 1e-12) &&
        (cfg.method == Method::RacLora || cfg.method == Method::Fpft) && cfg.inner.kind == InnerKind::Gd) {
        result.warnings.push_back("step size exceeds 1/L; descent guarantees do not apply");
    }

    ChainState state(w0, cfg.seed);
    state.divergence_threshold = 1e6 * std::abs(obj.value(w0)) + 1e6;
    const GradientSampler sgd_sampler = sampler ? sampler : uniform_sample_sampler(obj);
    const double alpha = cfg.sketch.alpha;
    const int r = cfg.sketch.rank;
    // gamma = (alpha / r) eta
    const double eta = cfg.step_gamma * r / alpha;

    auto& trace = result.trace;
    try {
        switch (cfg.method) {
            case Method::RacLora:
            case Method::Fpft:
                for (int t = 0; t < cfg.chain_length; ++t) {
                    switch (cfg.inner.kind) {
                        case InnerKind::Gd: trace.push_back(rac_gd_step(state, obj, cfg)); break;
                        case InnerKind::Rr: trace.push_back(rac_rr_epoch(state, obj, cfg)); break;
                        case InnerKind::Sgd: trace.push_back(rac_sgd_step(state, obj, cfg, sgd_sampler)); break;
                    }
                }
                trace.push_back(detail::final_record(state, obj, cfg, state.w));
                break;

            case Method::AsymmLora: {
                // One frozen sketch, chain_length projected GD steps.
                const Projector proj = detail::draw_projector(state, cfg);
                for (int t = 0; t < cfg.chain_length; ++t) {
                    const Matrix grad = obj.gradient(state.w);
                    TraceRecord rec = detail::make_record(state, obj, cfg, state.w, grad);
                    detail::check_divergence(state, rec.f_value);
                    const Matrix direction = project(proj, grad, cfg.sketch.side);
                    rec.projected_grad_sq = frobenius_inner(grad, direction);
                    detail::apply_step(state.w, cfg.step_gamma, direction);
                    detail::check_iterate(state, state.w);
                    ++state.t;
                    trace.push_back(std::move(rec));
                }
                TraceRecord last = detail::final_record(state, obj, cfg, state.w);
                last.projected_grad_sq = project(proj, obj.gradient(state.w), cfg.sketch.side).squaredNorm();
                trace.push_back(std::move(last));
                break;
            }

            case Method::JointLora:
                detail::init_factors(state, cfg);
                for (int t = 0; t < cfg.chain_length; ++t) {
                    trace.push_back(joint_lora_step(state, obj, cfg, eta, alpha, r));
                }
                trace.push_back(
                    detail::final_record(state, obj, cfg, state.w + (alpha / r) * (state.b * state.a)));
                break;

            case Method::Cola:
                for (int block = 0; block < cfg.chain_length; ++block) {
                    detail::init_factors(state, cfg);
                    for (int k = 0; k < cfg.cola_steps_per_block; ++k) {
                        trace.push_back(joint_lora_step(state, obj, cfg, eta, alpha, r));
                    }
                    state.w += (alpha / r) * (state.b * state.a);
                    detail::check_iterate(state, state.w);
                }
                trace.push_back(detail::final_record(state, obj, cfg, state.w));
                break;
        }
    } catch (const DivergenceDetected& e) {
        TraceRecord rec;
        rec.t = e.step();
        rec.f_value = e.f_value();
        rec.grad_norm_sq = std::numeric_limits<double>::quiet_NaN();
        rec.seed = cfg.seed;
        rec.method = std::string(to_string(cfg.method));
        rec.diverged = true;
        trace.push_back(std::move(rec));
    }
    result.diverged = !trace.empty() && trace.back().diverged;

    // Descent check: f(W^{t+1}) <= f(W^t) - (gamma/2) <grad f, H grad f> + 1e-9.
    const bool gd_chain = (cfg.method == Method::RacLora || cfg.method == Method::Fpft) &&
                          cfg.inner.kind == InnerKind::Gd;
    if ((gd_chain || cfg.method == Method::AsymmLora) && obj.smoothness_l &&
        cfg.step_gamma <= 1.0 / *obj.smoothness_l * (1.0 + 1e-12)) {
        for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
            if (trace[i + 1].diverged || std::isnan(trace[i].projected_grad_sq)) continue;
            ++result.descent_checked;
            const double allowed = trace[i].f_value - 0.5 * cfg.step_gamma * trace[i].projected_grad_sq + 1e-9;
            if (!(trace[i + 1].f_value <= allowed)) ++result.descent_violations;
        }
    }

    const long steps = std::max<long>(1, static_cast<long>(trace.size()) - 1);
    result.output_index = static_cast<long>(state.rng.index(static_cast<std::size_t>(steps)));
    return result;
}

// ---------------------------------------------------------------------------
// Rate checks
// ---------------------------------------------------------------------------

struct RateReport {
    double lambda_min_h = 0.0;
    double step_gamma = 0.0;
    long horizon = 0;  // T, the number of non-final records

    // Randomized-output bound: E||grad f(W~)||^2 <= 2 (f(W^0) - f*) / (lambda gamma T).
    double grad_sq_mean = 0.0;
    double grad_sq_min = 0.0;
    double nonconvex_bound = std::numeric_limits<double>::quiet_NaN();
    bool nonconvex_holds = false;

    // PL bound: gap(T) <= (1 - gamma mu lambda)^T gap(0).
    double pl_rate_bound = std::numeric_limits<double>::quiet_NaN();
    double fitted_rate = std::numeric_limits<double>::quiet_NaN();
    double final_gap_ratio = std::numeric_limits<double>::quiet_NaN();
    double final_ratio_bound = std::numeric_limits<double>::quiet_NaN();

    // f(W^{t+1}) <= f(W^t) - (gamma/2) <grad f, H grad f> + 1e-9, per step.
    long descent_checked = 0;
    long descent_violations = 0;

    // 1 - lambda_max[E(I - H)] - lambda_max^H / 4 for isotropic sketches;
    // the RR theorems need it positive.
    double rr_condition = std::numeric_limits<double>::quiet_NaN();
};

inline RateReport theorem_rate_check(const std::vector<TraceRecord>& trace, const Objective& obj,
                                     const ChainConfig& cfg) {
    RateReport rep;
    rep.lambda_min_h = chain_lambda_min(cfg);
    rep.step_gamma = cfg.step_gamma > 0.0 ? cfg.step_gamma : default_step_gamma(obj, cfg);
    if (trace.size() < 2) return rep;

    const long horizon = static_cast<long>(trace.size()) - 1;
    rep.horizon = horizon;
    double sum = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    for (long t = 0; t < horizon; ++t) {
        sum += trace[t].grad_norm_sq;
        mn = std::min(mn, trace[t].grad_norm_sq);
    }
    rep.grad_sq_mean = sum / horizon;
    rep.grad_sq_min = mn;

    const double lam = rep.lambda_min_h;
    const double gamma = rep.step_gamma;
    if (obj.optimum_value) {
        const double gap0 = trace.front().f_value - *obj.optimum_value;
        rep.nonconvex_bound = 2.0 * gap0 / (lam * gamma * horizon);
        rep.nonconvex_holds = rep.grad_sq_mean <= rep.nonconvex_bound;

        if (obj.pl_mu && gap0 > 0.0) {
            rep.pl_rate_bound = 1.0 - gamma * *obj.pl_mu * lam;
            rep.final_ratio_bound = std::pow(rep.pl_rate_bound, static_cast<double>(horizon));
            rep.final_gap_ratio = (trace[horizon].f_value - *obj.optimum_value) / gap0;

            // Least-squares slope of log(gap) while the gap is above roundoff.
            double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
            long n = 0;
            for (long t = 0; t <= horizon; ++t) {
                const double gap = trace[t].f_value - *obj.optimum_value;
                if (!(gap > 1e-13 * gap0) || trace[t].diverged) break;
                const double y = std::log(gap);
                st += t;
                sy += y;
                stt += static_cast<double>(t) * t;
                sty += t * y;
                ++n;
            }
            if (n >= 2) {
                const double slope = (n * sty - st * sy) / (n * stt - st * st);
                rep.fitted_rate = std::exp(slope);
            }
        }
    }

    // A diverged successor counts as a violation.
    for (long t = 0; t < horizon; ++t) {
        if (std::isnan(trace[t].projected_grad_sq)) continue;
        ++rep.descent_checked;
        const double allowed = trace[t].f_value - 0.5 * gamma * trace[t].projected_grad_sq + 1e-9;
        if (trace[t + 1].diverged || !(trace[t + 1].f_value <= allowed)) ++rep.descent_violations;
    }

    const double lam_max = lam;  // isotropic: E[H] = lambda I
    rep.rr_condition = 1.0 - (1.0 - lam) - 0.25 * lam_max;
    return rep;
}

}  // namespace raclora

#endif  // RACLORA_OPTIMIZERS_HPP
