#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "raclora/harness/datasets.hpp"
#include "raclora/objectives.hpp"
#include "raclora/optimizers.hpp"

using namespace raclora;

namespace {

Matrix random_matrix(int rows, int cols, RandomStream& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

Objective counterexample() { return make_quadratic(counterexample_spec()); }

ChainConfig counterexample_config(std::uint64_t seed, int length, Method method = Method::RacLora) {
    ChainConfig c;
    c.chain_length = length;
    c.step_gamma = 1.0 / 20.0;
    c.sketch.rank = 1;
    c.sketch.target_rows = 3;
    c.sketch.target_cols = 3;
    c.sketch.alpha = 1.0;
    c.seed = seed;
    c.method = method;
    return c;
}

RegressionSpec small_regression(int n, int rows, int cols, double lambda, RandomStream& rng) {
    RegressionSpec s;
    s.x = random_matrix(n, rows * cols, rng);
    s.y = Vector(n);
    for (int i = 0; i < n; ++i) s.y(i) = rng.normal();
    s.reg_lambda = lambda;
    s.rows = rows;
    s.cols = cols;
    return s;
}

// Compares bit patterns, so NaN records of diverged runs also match.
bool same_bits(double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); }

bool bitwise_equal(const std::vector<TraceRecord>& a, const std::vector<TraceRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].t != b[i].t || !same_bits(a[i].f_value, b[i].f_value) ||
            !same_bits(a[i].grad_norm_sq, b[i].grad_norm_sq)) {
            return false;
        }
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed form and merge
// ---------------------------------------------------------------------------

TEST(ClosedForm, AxisSketchPicksFirstRow) {
    RandomStream rng(1);
    const Matrix g = random_matrix(3, 4, rng);
    Matrix e1 = Matrix::Zero(3, 1);
    e1(0, 0) = 1.0;
    const Matrix a_hat = solve_subproblem_closed_form(e1, g, 0.3, SketchSide::Left);
    ASSERT_EQ(a_hat.rows(), 1);
    ASSERT_EQ(a_hat.cols(), 4);
    EXPECT_LE((a_hat - (-0.3) * g.row(0)).norm(), 1e-15);
}

TEST(ClosedForm, ZeroGradient) {
    RandomStream rng(2);
    const Matrix b = random_matrix(3, 2, rng);
    EXPECT_EQ(solve_subproblem_closed_form(b, Matrix::Zero(3, 4), 0.5, SketchSide::Left).norm(), 0.0);
}

TEST(ClosedForm, ShapeMismatch) {
    EXPECT_THROW(solve_subproblem_closed_form(Matrix::Ones(3, 1), Matrix::Zero(4, 4), 1.0, SketchSide::Left),
                 ShapeError);
    EXPECT_THROW(solve_subproblem_closed_form(Matrix::Ones(1, 3), Matrix::Zero(4, 4), 1.0, SketchSide::Right),
                 ShapeError);
}

// Merging the closed-form factor equals the direct projected step.
TEST(ClosedForm, MergeEquivalence) {
    RandomStream rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 2 + static_cast<int>(rng.index(5));
        const int n = 2 + static_cast<int>(rng.index(5));
        const int r = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(std::min(m, n))));
        const double alpha = 0.5 + rng.uniform() * 4.0;
        const double eta = 0.01 + rng.uniform();
        const double gamma = alpha / r * eta;
        const Matrix w = random_matrix(m, n, rng);
        const Matrix g = random_matrix(m, n, rng);

        const Matrix b = random_matrix(m, r, rng);
        const Matrix left = merge_factor(w, b, solve_subproblem_closed_form(b, g, eta, SketchSide::Left), alpha, r,
                                         SketchSide::Left);
        const Matrix h_b = b * pseudo_inverse(Matrix(b.transpose() * b)) * b.transpose();
        EXPECT_LE((left - (w - gamma * h_b * g)).norm(), 1e-10);

        const Matrix a = random_matrix(r, n, rng);
        const Matrix right = merge_factor(w, a, solve_subproblem_closed_form(a, g, eta, SketchSide::Right), alpha, r,
                                          SketchSide::Right);
        const Matrix h_a = a.transpose() * pseudo_inverse(Matrix(a * a.transpose())) * a;
        EXPECT_LE((right - (w - gamma * g * h_a)).norm(), 1e-10);
    }
}

// ---------------------------------------------------------------------------
// GD block
// ---------------------------------------------------------------------------

TEST(RacGdStep, FullRankMatchesPlainGradientStep) {
    const Objective obj = counterexample();
    RandomStream rng(4);
    ChainConfig cfg = counterexample_config(9, 1);
    cfg.sketch.rank = 3;
    cfg.sketch.alpha = 3.0;
    const Matrix w0 = random_matrix(3, 3, rng);
    ChainState state(w0, cfg.seed);
    const TraceRecord rec = rac_gd_step(state, obj, cfg);
    EXPECT_LE((state.w - (w0 - cfg.step_gamma * obj.gradient(w0))).norm(), 1e-10);
    EXPECT_EQ(rec.t, 0);
    EXPECT_EQ(state.t, 1);
    EXPECT_DOUBLE_EQ(rec.f_value, obj.value(w0));
}

TEST(RacGdStep, AxisSketchLeavesOtherRowsUntouched) {
    const Objective obj = counterexample();
    RandomStream rng(5);
    ChainConfig cfg = counterexample_config(0, 1);
    cfg.sketch.distribution = SketchDistribution::CoordinateSubset;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        const Matrix w0 = random_matrix(3, 3, rng);
        ChainState state(w0, seed);
        rac_gd_step(state, obj, cfg);
        // Recover the drawn axis from the same stream.
        RandomStream replay(seed);
        const Matrix b = sample_sketch(cfg.sketch, replay);
        Eigen::Index axis = 0;
        b.col(0).maxCoeff(&axis);
        for (Eigen::Index i = 0; i < 3; ++i) {
            if (i == axis) continue;
            EXPECT_TRUE((state.w.row(i).array() == w0.row(i).array()).all());
        }
    }
}

TEST(RacGdStep, StepLiesInRangeOfProjector) {
    RandomStream rng(6);
    const Objective obj = make_linear_regression(small_regression(30, 4, 3, 0.1, rng));
    ChainConfig cfg;
    cfg.chain_length = 1;
    cfg.sketch.rank = 2;
    cfg.sketch.target_rows = 4;
    cfg.sketch.target_cols = 3;
    cfg.sketch.alpha = 2.0;
    cfg = resolve_chain_config(obj, cfg);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        cfg.seed = seed;
        const Matrix w0 = random_matrix(4, 3, rng);
        ChainState state(w0, seed);
        rac_gd_step(state, obj, cfg);
        RandomStream replay(seed);
        const Projector p = build_projector(sample_sketch(cfg.sketch, replay), SketchSide::Left);
        const Matrix step = state.w - w0;
        EXPECT_LE(((Matrix::Identity(4, 4) - p.h) * step).norm(), 1e-10);
    }
}

TEST(RacGdStep, MonotoneWithStepAtMostOneOverL) {
    RandomStream rng(7);
    const Objective obj = make_linear_regression(small_regression(40, 3, 3, 0.01, rng));
    for (auto side : {SketchSide::Left, SketchSide::Right}) {
        ChainConfig cfg;
        cfg.chain_length = 200;
        cfg.sketch.side = side;
        cfg.sketch.rank = 1;
        cfg.sketch.target_rows = 3;
        cfg.sketch.target_cols = 3;
        cfg.seed = 3;
        const ChainResult res = run_chain(obj, cfg, random_matrix(3, 3, rng));
        for (std::size_t t = 0; t + 1 < res.trace.size(); ++t) {
            EXPECT_LE(res.trace[t + 1].f_value, res.trace[t].f_value + 1e-9);
        }
        EXPECT_EQ(res.descent_violations, 0);
        EXPECT_GT(res.descent_checked, 0);
    }
}

// ---------------------------------------------------------------------------
// RR and SGD blocks
// ---------------------------------------------------------------------------

TEST(RacRrEpoch, SingleSampleEqualsGdBitwise) {
    RandomStream rng(8);
    const Objective obj = make_linear_regression(small_regression(1, 3, 3, 0.2, rng));
    ChainConfig cfg = counterexample_config(5, 40);
    cfg.step_gamma = 0.5 / *obj.smoothness_l;
    ChainConfig rr = cfg;
    rr.inner = InnerSolver::rr_one_pass();
    const Matrix w0 = random_matrix(3, 3, rng);
    const ChainResult a = run_chain(obj, cfg, w0);
    const ChainResult b = run_chain(obj, rr, w0);
    EXPECT_TRUE(bitwise_equal(a.trace, b.trace));
}

// f_i(w) = (x_i w - y_i)^2 + lambda w^2 on scalars, permutation (0, 1), H = I.
TEST(RacRrEpoch, TwoSampleHandSimulation) {
    RegressionSpec s;
    s.x = Matrix(2, 1);
    s.x << 1.5, -0.5;
    s.y = Vector(2);
    s.y << 1.0, 2.0;
    s.reg_lambda = 0.1;
    s.rows = 1;
    s.cols = 1;
    const Objective obj = make_linear_regression(s);
    const double gamma = 0.05;
    double w = 0.3;
    for (int i : {0, 1}) {
        const double xi = s.x(i, 0);
        w -= gamma * (2.0 * (xi * w - s.y(i)) * xi + 2.0 * 0.1 * w);
    }
    Matrix wm(1, 1);
    wm << 0.3;
    rr_pass(wm, obj, identity_projector(1), SketchSide::Left, gamma, {0, 1});
    EXPECT_NEAR(wm(0, 0), w, 1e-12);
}

TEST(RacRrEpoch, PermutationsAreValid) {
    for (long t = 0; t < 50; ++t) {
        auto p = rr_permutation(17, t, 0, 13);
        std::sort(p.begin(), p.end());
        for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
    }
    EXPECT_NE(rr_permutation(17, 0, 0, 20), rr_permutation(17, 1, 0, 20));
    EXPECT_EQ(rr_permutation(17, 3, 2, 20), rr_permutation(17, 3, 2, 20));
}

TEST(RacSgdStep, FullGradientSamplerEqualsGdBitwise) {
    RandomStream rng(9);
    const Objective obj = make_linear_regression(small_regression(20, 3, 3, 0.1, rng));
    ChainConfig cfg = counterexample_config(11, 60);
    cfg.step_gamma = 1.0 / *obj.smoothness_l;
    ChainConfig sgd = cfg;
    sgd.inner = InnerSolver::sgd(1);
    const Matrix w0 = random_matrix(3, 3, rng);
    const ChainResult a = run_chain(obj, cfg, w0);
    const ChainResult b = run_chain(obj, sgd, w0, full_gradient_sampler(obj));
    EXPECT_TRUE(bitwise_equal(a.trace, b.trace));
    EXPECT_EQ(a.output_index, b.output_index);
}

TEST(RacSgdStep, UniformSamplerIsUnbiased) {
    RandomStream rng(10);
    const Objective obj = make_linear_regression(small_regression(15, 2, 2, 0.1, rng));
    const GradientSampler sampler = uniform_sample_sampler(obj);
    const Matrix w = random_matrix(2, 2, rng);
    const int draws = 10000;
    Matrix sum = Matrix::Zero(2, 2), sum_sq = Matrix::Zero(2, 2);
    for (int k = 0; k < draws; ++k) {
        const Matrix g = sampler(w, rng);
        sum += g;
        sum_sq += g.cwiseProduct(g);
    }
    const Matrix mean = sum / draws;
    const Matrix sigma = (sum_sq / draws - mean.cwiseProduct(mean)).cwiseSqrt();
    const Matrix full = obj.gradient(w);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_LE(std::abs(mean.data()[i] - full.data()[i]), 3.0 * sigma.data()[i] / std::sqrt(double(draws)) + 1e-12);
    }
}

TEST(RacSgdStep, AbcConstants) {
    const AbcConstants full = abc_full_gradient();
    EXPECT_EQ(full.a1, 0.0);
    EXPECT_EQ(full.b1, 1.0);
    EXPECT_EQ(full.c1, 0.0);
    // For a single-summand quadratic g = grad f, so E||g||^2 = ||grad f||^2 exactly.
    const Objective q = counterexample();
    RandomStream rng(11);
    const Matrix w = random_matrix(3, 3, rng);
    const double lhs = full_gradient_sampler(q)(w, rng).squaredNorm();
    EXPECT_DOUBLE_EQ(lhs, 2 * full.a1 * (q.value(w) - *q.optimum_value) + full.b1 * q.gradient(w).squaredNorm() + full.c1);

    // Uniform sampling on a finite sum: the inequality holds at random points.
    const Objective lin = make_linear_regression(small_regression(12, 2, 2, 0.1, rng));
    const AbcConstants abc = abc_uniform_sampling(lin);
    for (int k = 0; k < 50; ++k) {
        const Matrix v = random_matrix(2, 2, rng);
        double second_moment = 0.0;
        for (int i = 0; i < lin.sample_count; ++i) second_moment += lin.sample_gradient(v, i).squaredNorm();
        second_moment /= lin.sample_count;
        double mean_inf = 0.0;
        for (int i = 0; i < lin.sample_count; ++i) mean_inf += lin.sample_infimum(i);
        mean_inf /= lin.sample_count;
        EXPECT_LE(second_moment, 2 * abc.a1 * (lin.value(v) - *lin.optimum_value) + abc.b1 * lin.gradient(v).squaredNorm() +
                                     abc.c1 + 1e-9);
    }
}

TEST(RacSgdStep, ConvergesOnFiniteSum) {
    RandomStream rng(12);
    const Objective obj = make_linear_regression(small_regression(20, 3, 3, 0.1, rng));
    ChainConfig cfg;
    cfg.chain_length = 2000;
    cfg.sketch.rank = 2;
    cfg.sketch.target_rows = 3;
    cfg.sketch.target_cols = 3;
    cfg.sketch.alpha = 2.0;
    cfg.inner = InnerSolver::sgd(5);
    cfg.seed = 4;
    const ChainResult res = run_chain(obj, cfg, obj.zero_point());
    ASSERT_FALSE(res.diverged);
    EXPECT_LT(*res.trace.back().gap, 0.1 * *res.trace.front().gap);
}

// ---------------------------------------------------------------------------
// Joint-factor baselines
// ---------------------------------------------------------------------------

TEST(JointLoraStep, ZeroBFirstStep) {
    const Objective obj = counterexample();
    ChainConfig cfg = counterexample_config(1, 1, Method::JointLora);
    RandomStream rng(13);
    const Matrix w0 = random_matrix(3, 3, rng);
    ChainState state(w0, 1);
    state.a = random_matrix(1, 3, rng);
    state.b = Matrix::Zero(3, 1);
    const Matrix a0 = state.a;
    const double eta = 0.05, alpha = 1.0;
    joint_lora_step(state, obj, cfg, eta, alpha, 1);
    EXPECT_EQ(state.a, a0);
    EXPECT_LE((state.b - (-eta * alpha * obj.gradient(w0) * a0.transpose())).norm(), 1e-15);
}

TEST(JointLoraStep, StationaryPointLeavesFactorsUnchanged) {
    QuadraticSpec s;
    s.m = Matrix::Identity(4, 4);
    s.b = Vector::Zero(4);
    s.rows = 2;
    s.cols = 2;
    const Objective obj = make_quadratic(s);
    ChainConfig cfg;
    cfg.method = Method::JointLora;
    cfg.sketch.target_rows = 2;
    cfg.sketch.target_cols = 2;
    ChainState state(Matrix::Zero(2, 2), 0);
    RandomStream rng(14);
    state.a = random_matrix(1, 2, rng);
    state.b = Matrix::Zero(2, 1);
    const Matrix a0 = state.a;
    joint_lora_step(state, obj, cfg, 0.1, 1.0, 1);
    EXPECT_EQ(state.a, a0);
    EXPECT_EQ(state.b.norm(), 0.0);
}

TEST(JointLora, CounterexampleStallsOrDiverges) {
    const Objective obj = counterexample();
    int failing = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ChainResult res = run_chain(obj, counterexample_config(seed, 500, Method::JointLora), obj.zero_point());
        const bool exceeded = std::any_of(res.trace.begin(), res.trace.end(), [&](const TraceRecord& r) {
            return r.diverged || r.f_value > res.trace.front().f_value;
        });
        const bool stalled = !res.diverged && res.trace.back().grad_norm_sq > 1e-4;
        if (exceeded || stalled) ++failing;
    }
    EXPECT_GE(failing, 1);
}

TEST(AsymmLora, StationaryOnlyForRestrictedProblem) {
    const Objective obj = counterexample();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ChainResult res = run_chain(obj, counterexample_config(seed, 3000, Method::AsymmLora), obj.zero_point());
        ASSERT_FALSE(res.diverged);
        EXPECT_LE(std::sqrt(res.trace.back().projected_grad_sq), 1e-8);
        EXPECT_GT(std::sqrt(res.trace.back().grad_norm_sq), 1e-2);
        EXPECT_EQ(res.descent_violations, 0);
    }
}

TEST(Cola, DivergesAtOneOverLWithTenStepBlocks) {
    const Objective obj = counterexample();
    int flagged = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ChainResult res = run_chain(obj, counterexample_config(seed, 300, Method::Cola), obj.zero_point());
        if (res.diverged || res.trace.back().grad_norm_sq > 1e-4) ++flagged;
        EXPECT_TRUE(res.trace.back().diverged == res.diverged);
    }
    EXPECT_EQ(flagged, 5);
}

// ---------------------------------------------------------------------------
// run_chain
// ---------------------------------------------------------------------------

TEST(RunChain, FpftOnQuadraticIsTextbookGd) {
    const Objective obj = counterexample();
    ChainConfig cfg = counterexample_config(0, 200, Method::Fpft);
    const ChainResult res = run_chain(obj, cfg, obj.zero_point());
    const double gap0 = *res.trace.front().gap;
    const double rate = 1.0 - cfg.step_gamma * *obj.pl_mu;
    for (std::size_t t = 0; t + 1 < res.trace.size(); ++t) {
        EXPECT_LE(res.trace[t + 1].f_value, res.trace[t].f_value + 1e-15);
        EXPECT_LE(*res.trace[t].gap, std::pow(rate, double(t)) * gap0 + 1e-15);
    }
    const RateReport rep = theorem_rate_check(res.trace, obj, cfg);
    EXPECT_TRUE(rep.nonconvex_holds);
    EXPECT_EQ(rep.descent_violations, 0);
    EXPECT_LE(rep.final_gap_ratio, rep.final_ratio_bound + 1e-15);
}

TEST(RunChain, FullRankRacLoraEqualsFpft) {
    RandomStream rng(15);
    const Objective obj = make_linear_regression(small_regression(50, 4, 4, 0.01, rng));
    ChainConfig cfg;
    cfg.chain_length = 300;
    cfg.sketch.rank = 4;
    cfg.sketch.target_rows = 4;
    cfg.sketch.target_cols = 4;
    cfg.sketch.alpha = 4.0;
    cfg.seed = 2;
    ChainConfig full = cfg;
    full.method = Method::Fpft;
    const Matrix w0 = random_matrix(4, 4, rng);
    const ChainResult a = run_chain(obj, cfg, w0);
    const ChainResult b = run_chain(obj, full, w0);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t t = 0; t < a.trace.size(); ++t) {
        EXPECT_NEAR(a.trace[t].f_value, b.trace[t].f_value, 1e-10);
        EXPECT_NEAR(a.trace[t].grad_norm_sq, b.trace[t].grad_norm_sq, 1e-10);
    }
}

TEST(RunChain, CounterexampleConvergesBothSides) {
    const Objective obj = counterexample();
    for (auto side : {SketchSide::Left, SketchSide::Right}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            ChainConfig cfg = counterexample_config(seed, 3000);
            cfg.sketch.side = side;
            const ChainResult res = run_chain(obj, cfg, obj.zero_point());
            ASSERT_FALSE(res.diverged);
            EXPECT_LE(res.trace.back().grad_norm_sq, 1e-16);
            EXPECT_EQ(res.descent_violations, 0);
            EXPECT_GE(res.output_index, 0);
            EXPECT_LT(res.output_index, 3000);
        }
    }
}

TEST(RunChain, MeanContractionMatchesRate) {
    const Objective obj = counterexample();
    const int seeds = 20, steps = 2000;
    std::vector<double> mean_gap(steps + 1, 0.0);
    for (int s = 0; s < seeds; ++s) {
        const ChainResult res = run_chain(obj, counterexample_config(s, steps), obj.zero_point());
        for (int t = 0; t <= steps; ++t) mean_gap[t] += *res.trace[t].gap / seeds;
    }
    // Geometric rate up to the last step still above roundoff.
    int last = 0;
    while (last < steps && mean_gap[last + 1] > 1e-12 * mean_gap[0]) ++last;
    ASSERT_GT(last, 100);
    const double rate = std::pow(mean_gap[last] / mean_gap[0], 1.0 / last);
    EXPECT_LE(rate, 1.0 - 1.0 / 30.0 + 0.01);
    EXPECT_LE(mean_gap[300], std::pow(1.0 - 1.0 / 30.0, 300) * 2.025 * 1.1);
}

TEST(RunChain, OversizedStepTriggersViolations) {
    const Objective obj = counterexample();
    ChainConfig cfg = counterexample_config(0, 50);
    cfg.step_gamma = 10.0 / 20.0;
    const ChainResult res = run_chain(obj, cfg, obj.zero_point());
    EXPECT_FALSE(res.warnings.empty());
    const RateReport rep = theorem_rate_check(res.trace, obj, cfg);
    EXPECT_GT(rep.descent_violations, 0);
}

TEST(RunChain, DivergenceIsFlaggedNotThrown) {
    const Objective obj = counterexample();
    ChainConfig cfg = counterexample_config(0, 500, Method::Fpft);
    cfg.step_gamma = 1.0;
    ChainResult res;
    ASSERT_NO_THROW(res = run_chain(obj, cfg, obj.zero_point()));
    EXPECT_TRUE(res.diverged);
    EXPECT_TRUE(res.trace.back().diverged);
    EXPECT_LT(res.trace.size(), 502u);
}

TEST(RunChain, DeterministicTraces) {
    const Objective obj = counterexample();
    for (Method m : {Method::RacLora, Method::JointLora, Method::Cola, Method::AsymmLora}) {
        const ChainConfig cfg = counterexample_config(21, 100, m);
        const ChainResult a = run_chain(obj, cfg, obj.zero_point());
        const ChainResult b = run_chain(obj, cfg, obj.zero_point());
        EXPECT_TRUE(bitwise_equal(a.trace, b.trace));
        EXPECT_EQ(a.output_index, b.output_index);
    }
}

TEST(RunChain, RejectsInvalidConfigs) {
    const Objective obj = counterexample();
    ChainConfig cfg = counterexample_config(0, 0);
    EXPECT_THROW(run_chain(obj, cfg, obj.zero_point()), InvalidConfig);
    cfg = counterexample_config(0, 10);
    cfg.sketch.target_rows = 4;
    EXPECT_THROW(run_chain(obj, cfg, obj.zero_point()), InvalidConfig);
    cfg = counterexample_config(0, 10);
    cfg.sketch.rank = 5;
    EXPECT_THROW(run_chain(obj, cfg, obj.zero_point()), InvalidSpec);
    cfg = counterexample_config(0, 10);
    EXPECT_THROW(run_chain(obj, cfg, Matrix::Zero(2, 2)), ShapeError);
}

TEST(RunChain, DefaultStepSizes) {
    RandomStream rng(16);
    const Objective obj = make_linear_regression(small_regression(10, 2, 2, 0.1, rng));
    ChainConfig cfg;
    cfg.sketch.target_rows = 2;
    cfg.sketch.target_cols = 2;
    EXPECT_DOUBLE_EQ(resolve_chain_config(obj, cfg).step_gamma, 1.0 / *obj.smoothness_l);
    cfg.inner = InnerSolver::rr_one_pass();
    EXPECT_DOUBLE_EQ(resolve_chain_config(obj, cfg).step_gamma, 1.0 / (2.0 * *obj.smoothness_l * 10));
    cfg.inner = InnerSolver::sgd(3);
    const double sgd = resolve_chain_config(obj, cfg).step_gamma;
    EXPECT_GT(sgd, 0.0);
    EXPECT_TRUE(std::isfinite(sgd));
}

// With a fixed gradient budget, one step per block is at least as good as
// several steps under the same sketch.
TEST(RunChain, SingleStepBlocksUseBudgetWell) {
    const harness::LinRegPreset preset = harness::linreg_preset(0);
    const Objective obj = preset.finetune.objective();
    const Matrix w0 = harness::pretrained_weights(preset.pretrain);
    const int budget = 600, k = 5;
    double one = 0.0, many = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ChainConfig cfg;
        cfg.chain_length = budget;
        cfg.sketch.rank = 1;
        cfg.sketch.target_rows = 10;
        cfg.sketch.target_cols = 10;
        cfg.seed = seed;
        one += *run_chain(obj, cfg, w0).trace.back().gap;
        cfg.chain_length = budget / k;
        cfg.inner = InnerSolver::gd_steps(k);
        many += *run_chain(obj, cfg, w0).trace.back().gap;
    }
    EXPECT_LE(one, 1.5 * many);
}
