#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "raclora/objectives.hpp"
#include "raclora/random.hpp"

using namespace raclora;

namespace {

Matrix random_matrix(int rows, int cols, RandomStream& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

Vector random_vector(int n, RandomStream& rng) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

RegressionSpec small_regression(int n, int rows, int cols, double lambda, bool labels, RandomStream& rng) {
    RegressionSpec s;
    s.x = random_matrix(n, rows * cols, rng);
    s.y = random_vector(n, rng);
    if (labels)
        for (int i = 0; i < n; ++i) s.y(i) = s.y(i) >= 0.0 ? 1.0 : -1.0;
    s.reg_lambda = lambda;
    s.rows = rows;
    s.cols = cols;
    return s;
}

// Central differences, step 1e-6.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& w) {
    const double h = 1e-6;
    Matrix g(w.rows(), w.cols());
    Matrix p = w;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double orig = p.data()[i];
        p.data()[i] = orig + h;
        const double up = f(p);
        p.data()[i] = orig - h;
        const double down = f(p);
        p.data()[i] = orig;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double relative_error(const Matrix& approx, const Matrix& exact) {
    return (approx - exact).norm() / std::max(exact.norm(), 1e-12);
}

void expect_gradient_matches_fd(const Objective& obj, RandomStream& rng, int points) {
    for (int k = 0; k < points; ++k) {
        const Matrix w = random_matrix(obj.param_rows, obj.param_cols, rng);
        EXPECT_LE(relative_error(fd_gradient(obj.value, w), obj.gradient(w)), 1e-5) << obj.name << " point " << k;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadratic
// ---------------------------------------------------------------------------

TEST(Quadratic, OriginMinimum) {
    QuadraticSpec s;
    s.m = Matrix::Identity(1, 1);
    s.b = Vector::Zero(1);
    s.rows = 1;
    s.cols = 1;
    const Objective q = make_quadratic(s);
    EXPECT_EQ(q.value(Matrix::Zero(1, 1)), 0.0);
    EXPECT_EQ(q.gradient(Matrix::Zero(1, 1)).norm(), 0.0);
    EXPECT_EQ(*q.optimum_value, 0.0);
}

TEST(Quadratic, CounterexampleConstants) {
    const Objective q = make_quadratic(counterexample_spec());
    EXPECT_EQ(q.param_rows, 3);
    EXPECT_EQ(q.param_cols, 3);
    EXPECT_DOUBLE_EQ(*q.smoothness_l, 20.0);
    EXPECT_DOUBLE_EQ(*q.pl_mu, 2.0);
    EXPECT_NEAR(*q.optimum_value, -2.025, 1e-14);

    const Minimum m = minimize(q);
    EXPECT_NEAR(m.w(0, 0), -0.05, 1e-14);
    for (Eigen::Index i = 1; i < 9; ++i) EXPECT_NEAR(m.w.data()[i], -0.5, 1e-14);
}

// Independent oracle: plain-vector gradient descent on x^T M x + b^T x.
TEST(Quadratic, CounterexampleOptimumByGradientDescent) {
    std::vector<double> diag(9, 1.0);
    diag[0] = 10.0;
    std::vector<double> x(9, 0.0);
    auto grad_norm = [&] {
        double s = 0.0;
        for (int i = 0; i < 9; ++i) s += std::pow(2.0 * diag[i] * x[i] + 1.0, 2);
        return std::sqrt(s);
    };
    for (int it = 0; it < 100000 && grad_norm() >= 1e-12; ++it) {
        for (int i = 0; i < 9; ++i) x[i] -= (2.0 * diag[i] * x[i] + 1.0) / 20.0;
    }
    ASSERT_LT(grad_norm(), 1e-12);
    double f = 0.0;
    for (int i = 0; i < 9; ++i) f += diag[i] * x[i] * x[i] + x[i];
    const Objective q = make_quadratic(counterexample_spec());
    EXPECT_NEAR(f, *q.optimum_value, 1e-12);
}

TEST(Quadratic, RejectsBadSpecs) {
    QuadraticSpec s = counterexample_spec();
    s.m(3, 3) = -1.0;
    EXPECT_THROW(make_quadratic(s), InvalidSpec);
    s = counterexample_spec();
    s.m(0, 1) = 0.5;
    EXPECT_THROW(make_quadratic(s), InvalidSpec);
    s = counterexample_spec();
    s.rows = 2;
    EXPECT_THROW(make_quadratic(s), InvalidSpec);
}

TEST(Quadratic, GradientMatchesFiniteDifferences) {
    RandomStream rng(1);
    const Matrix a = random_matrix(6, 6, rng);
    QuadraticSpec s;
    s.m = a * a.transpose() + Matrix::Identity(6, 6);
    s.b = random_vector(6, rng);
    s.rows = 2;
    s.cols = 3;
    expect_gradient_matches_fd(make_quadratic(s), rng, 100);
}

// ---------------------------------------------------------------------------
// Regression objectives
// ---------------------------------------------------------------------------

TEST(LinearRegression, TrivialValue) {
    RegressionSpec s;
    s.x = Matrix::Identity(2, 2);
    s.y = Vector::Zero(2);
    s.rows = 1;
    s.cols = 2;
    EXPECT_EQ(make_linear_regression(s).value(Matrix::Zero(1, 2)), 0.0);
}

TEST(LinearRegression, RejectsShapeMismatch) {
    RandomStream rng(2);
    RegressionSpec s = small_regression(10, 2, 2, 0.1, false, rng);
    s.y = Vector::Zero(9);
    EXPECT_THROW(make_linear_regression(s), InvalidSpec);
    s = small_regression(10, 2, 2, 0.1, false, rng);
    s.cols = 3;
    EXPECT_THROW(make_linear_regression(s), InvalidSpec);
}

TEST(LinearRegression, GradientsMatchFiniteDifferences) {
    RandomStream rng(3);
    const RegressionSpec s = small_regression(40, 3, 4, 1e-2, false, rng);
    const Objective obj = make_linear_regression(s);
    expect_gradient_matches_fd(obj, rng, 100);
    // Per-sample gradients against the one-row objective's value.
    for (int i = 0; i < obj.sample_count; i += 7) {
        RegressionSpec one = s;
        one.x = s.x.row(i);
        one.y = s.y.segment(i, 1);
        const Objective fi = make_linear_regression(one);
        const Matrix w = random_matrix(3, 4, rng);
        EXPECT_LE(relative_error(fd_gradient(fi.value, w), obj.sample_gradient(w, i)), 1e-5);
    }
}

TEST(LinearRegression, SampleGradientsAverageToFullGradient) {
    RandomStream rng(4);
    const Objective obj = make_linear_regression(small_regression(25, 2, 3, 0.05, false, rng));
    for (int k = 0; k < 10; ++k) {
        const Matrix w = random_matrix(2, 3, rng);
        Matrix mean = Matrix::Zero(2, 3);
        for (int i = 0; i < obj.sample_count; ++i) mean += obj.sample_gradient(w, i);
        mean /= obj.sample_count;
        EXPECT_LE((mean - obj.gradient(w)).norm(), 1e-12 * std::max(1.0, mean.norm()));
    }
}

// L-smoothness and mu-strong convexity along random pairs.
TEST(LinearRegression, ConstantsHoldOnRandomPairs) {
    RandomStream rng(5);
    const Objective obj = make_linear_regression(small_regression(30, 3, 3, 1e-3, false, rng));
    const double l = *obj.smoothness_l;
    const double mu = *obj.pl_mu;
    for (int k = 0; k < 200; ++k) {
        const Matrix x = random_matrix(3, 3, rng);
        const Matrix y = random_matrix(3, 3, rng);
        const double dist = (x - y).norm();
        EXPECT_LE((obj.gradient(x) - obj.gradient(y)).norm(), l * dist * (1.0 + 1e-10));
        EXPECT_GE(obj.value(y), obj.value(x) + frobenius_inner(obj.gradient(x), y - x) + 0.5 * mu * dist * dist - 1e-10);
    }
}

// Oracle: normal equations solved with a QR factorization.
TEST(LinearRegression, OptimumMatchesNormalEquations) {
    RandomStream rng(6);
    const RegressionSpec s = small_regression(50, 2, 4, 1e-2, false, rng);
    const Objective obj = make_linear_regression(s);
    const double n = 50.0;
    const Eigen::MatrixXd lhs = Eigen::MatrixXd(s.x.transpose() * s.x) / n + s.reg_lambda * Eigen::MatrixXd::Identity(8, 8);
    const Eigen::VectorXd rhs = s.x.transpose() * s.y / n;
    const Eigen::VectorXd v = lhs.colPivHouseholderQr().solve(rhs);
    EXPECT_NEAR(*obj.optimum_value, obj.value(reshape(v, 2, 4)), 1e-12);
}

TEST(LinearRegression, SampleInfimumMatchesOneSampleMinimum) {
    RandomStream rng(7);
    const RegressionSpec s = small_regression(8, 2, 2, 0.3, false, rng);
    const Objective obj = make_linear_regression(s);
    for (int i = 0; i < 8; ++i) {
        RegressionSpec one = s;
        one.x = s.x.row(i);
        one.y = s.y.segment(i, 1);
        const Objective fi = make_linear_regression(one);
        EXPECT_NEAR(obj.sample_infimum(i), minimize(fi).value, 1e-12);
    }
}

TEST(LogisticRegression, ValueAtOrigin) {
    RandomStream rng(8);
    const Objective obj = make_logistic_regression(small_regression(20, 2, 2, 0.1, true, rng));
    EXPECT_NEAR(obj.value(Matrix::Zero(2, 2)), std::log(2.0), 1e-15);
}

TEST(LogisticRegression, RejectsInvalidLabels) {
    RandomStream rng(9);
    RegressionSpec s = small_regression(20, 2, 2, 0.1, true, rng);
    s.y(3) = 0.0;
    EXPECT_THROW(make_logistic_regression(s), InvalidSpec);
}

TEST(LogisticRegression, GradientsMatchFiniteDifferences) {
    RandomStream rng(10);
    expect_gradient_matches_fd(make_logistic_regression(small_regression(40, 3, 4, 0.1, true, rng)), rng, 100);
}

TEST(LogisticRegression, StableForLargeMargins) {
    RandomStream rng(11);
    const Objective obj = make_logistic_regression(small_regression(20, 2, 2, 0.1, true, rng));
    const Matrix w = random_matrix(2, 2, rng, 1e3);
    EXPECT_TRUE(std::isfinite(obj.value(w)));
    EXPECT_TRUE(obj.gradient(w).allFinite());
}

TEST(LogisticRegression, ConstantsHoldOnRandomPairs) {
    RandomStream rng(12);
    const Objective obj = make_logistic_regression(small_regression(30, 2, 3, 0.1, true, rng));
    for (int k = 0; k < 200; ++k) {
        const Matrix x = random_matrix(2, 3, rng);
        const Matrix y = random_matrix(2, 3, rng);
        const double dist = (x - y).norm();
        EXPECT_LE((obj.gradient(x) - obj.gradient(y)).norm(), *obj.smoothness_l * dist * (1.0 + 1e-10));
        EXPECT_GE(obj.value(y),
                  obj.value(x) + frobenius_inner(obj.gradient(x), y - x) + 0.5 * *obj.pl_mu * dist * dist - 1e-10);
    }
}

TEST(LogisticRegression, SampleInfimumMatchesOneSampleMinimum) {
    RandomStream rng(13);
    const RegressionSpec s = small_regression(6, 2, 2, 0.1, true, rng);
    const Objective obj = make_logistic_regression(s);
    for (int i = 0; i < 6; ++i) {
        RegressionSpec one = s;
        one.x = s.x.row(i);
        one.y = s.y.segment(i, 1);
        EXPECT_NEAR(obj.sample_infimum(i), minimize(make_logistic_regression(one), 1e-11).value, 1e-10);
    }
}

TEST(LogisticRegression, NumericOptimumIsStationary) {
    RandomStream rng(14);
    const Objective obj = with_optimum(make_logistic_regression(small_regression(50, 3, 3, 0.1, true, rng)));
    ASSERT_TRUE(obj.optimum_value.has_value());
    const Minimum m = minimize(obj);
    EXPECT_LE(m.grad_norm, 1e-9);
    for (int k = 0; k < 20; ++k) EXPECT_GE(obj.value(random_matrix(3, 3, rng)), *obj.optimum_value);
}

// ---------------------------------------------------------------------------
// sample_variance
// ---------------------------------------------------------------------------

TEST(SampleVariance, SingleSummandIsZero) {
    const Objective q = make_quadratic(counterexample_spec());
    RandomStream rng(15);
    EXPECT_EQ(sample_variance(q, random_matrix(3, 3, rng)), 0.0);
}

TEST(SampleVariance, DuplicatedSamplesAreZero) {
    RandomStream rng(16);
    RegressionSpec s = small_regression(1, 2, 2, 0.1, false, rng);
    RegressionSpec dup = s;
    dup.x = Matrix(4, 4);
    dup.y = Vector(4);
    for (int i = 0; i < 4; ++i) {
        dup.x.row(i) = s.x.row(0);
        dup.y(i) = s.y(0);
    }
    EXPECT_LE(sample_variance(make_linear_regression(dup), random_matrix(2, 2, rng)), 1e-28);
}

// Two samples in R^1: f_i(w) = (x_i w - y_i)^2 + lambda w^2.
TEST(SampleVariance, TwoSampleEnumeration) {
    RegressionSpec s;
    s.x = Matrix(2, 1);
    s.x << 1.0, 3.0;
    s.y = Vector(2);
    s.y << 2.0, -1.0;
    s.reg_lambda = 0.5;
    s.rows = 1;
    s.cols = 1;
    const Objective obj = make_linear_regression(s);
    const double w = 0.7;
    const double g1 = 2.0 * (1.0 * w - 2.0) * 1.0 + 2.0 * 0.5 * w;
    const double g2 = 2.0 * (3.0 * w + 1.0) * 3.0 + 2.0 * 0.5 * w;
    const double mean = 0.5 * (g1 + g2);
    const double expected = 0.5 * ((g1 - mean) * (g1 - mean) + (g2 - mean) * (g2 - mean));
    Matrix wm(1, 1);
    wm << w;
    EXPECT_NEAR(sample_variance(obj, wm), expected, 1e-12);
    EXPECT_NEAR(obj.gradient(wm)(0, 0), mean, 1e-12);
}

// ---------------------------------------------------------------------------
// average_objective
// ---------------------------------------------------------------------------

TEST(AverageObjective, ShiftedQuadraticsClosedForm) {
    // f_1 = ||x||^2 + b1^T x, f_2 = 3 ||x||^2 + b2^T x in R^2.
    QuadraticSpec a;
    a.m = Matrix::Identity(2, 2);
    a.b = Vector(2);
    a.b << 2.0, 0.0;
    a.rows = 1;
    a.cols = 2;
    QuadraticSpec b = a;
    b.m = 3.0 * Matrix::Identity(2, 2);
    b.b << 0.0, -6.0;
    const Objective avg = average_objective({make_quadratic(a), make_quadratic(b)});
    // Average: 2 ||x||^2 + (1, -3)^T x, minimum -(1 + 9) / 8.
    EXPECT_NEAR(*avg.optimum_value, -10.0 / 8.0, 1e-14);
    // Hessian of 2 ||x||^2 is 4 I.
    EXPECT_DOUBLE_EQ(*avg.smoothness_l, 4.0);
    EXPECT_DOUBLE_EQ(*avg.pl_mu, 4.0);
    RandomStream rng(17);
    const Matrix w = random_matrix(1, 2, rng);
    EXPECT_NEAR(avg.value(w), 0.5 * (make_quadratic(a).value(w) + make_quadratic(b).value(w)), 1e-14);
}
