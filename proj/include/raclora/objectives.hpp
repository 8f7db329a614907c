#ifndef RACLORA_OBJECTIVES_HPP
#define RACLORA_OBJECTIVES_HPP

// Convex finite-sum test objectives over a matrix parameter W.
//
// Conventions: losses are averaged with 1/N, the ridge term is
// reg_lambda * ||w||^2 (no 1/2), and w = vec(W) in row-major order. All the
// smoothness and PL constants below follow from these conventions.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "raclora/errors.hpp"
#include "raclora/linalg.hpp"

namespace raclora {

// f(w) = w^T P w + q^T w + s with P symmetric.
struct QuadraticForm {
    Matrix p;
    Vector q;
    double s = 0.0;

    // Minimum value; P must be positive semidefinite with q in its range.
    double minimum_value() const { return s - 0.25 * q.dot(pseudo_inverse(p) * q); }
    Vector minimizer() const { return -0.5 * (pseudo_inverse(p) * q); }
};

// A differentiable finite-sum loss f(W) = (1/N) sum_i f_i(W).
struct Objective {
    std::string name;
    int param_rows = 0;
    int param_cols = 0;
    int sample_count = 1;

    std::function<double(const Matrix&)> value;
    std::function<Matrix(const Matrix&)> gradient;
    std::function<Matrix(const Matrix&, int)> sample_gradient;
    // inf_W f_i(W); empty when no closed form is known.
    std::function<double(int)> sample_infimum;

    std::optional<double> smoothness_l;
    std::optional<double> pl_mu;
    std::optional<double> optimum_value;
    // max_i L_i over the summands; feeds the expected-smoothness constants.
    std::optional<double> sample_smoothness_max;
    // Present when f is exactly quadratic in vec(W).
    std::optional<QuadraticForm> quadratic;

    Matrix zero_point() const { return Matrix::Zero(param_rows, param_cols); }

    void check_shape(const Matrix& w) const {
        if (w.rows() != param_rows || w.cols() != param_cols) {
            throw ShapeError(name + ": expected " + std::to_string(param_rows) + "x" + std::to_string(param_cols) +
                             " parameter, got " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
        }
    }
};

// ---------------------------------------------------------------------------
// Quadratic f(x) = x^T M x + b^T x
// ---------------------------------------------------------------------------

struct QuadraticSpec {
    Matrix m;  // d x d, symmetric positive definite
    Vector b;  // d
    int rows = 0;
    int cols = 0;
};

inline Objective make_quadratic(const QuadraticSpec& spec) {
    const Eigen::Index d = spec.m.rows();
    if (spec.m.cols() != d || spec.b.size() != d) throw InvalidSpec("quadratic: M must be d x d and b length d");
    if (spec.rows < 1 || spec.cols < 1 || spec.rows * spec.cols != d) {
        throw InvalidSpec("quadratic: reshape does not match d");
    }
    require_finite(spec.m, "quadratic M");
    if (!spec.b.allFinite()) throw InvalidSpec("quadratic: b has non-finite entries");
    if ((spec.m - spec.m.transpose()).norm() > 1e-12 * std::max(1.0, spec.m.norm())) {
        throw InvalidSpec("quadratic: M is not symmetric");
    }
    const EigExtremes ev = sym_eig_extremes(spec.m);
    if (!(ev.lambda_min > 0.0)) throw InvalidSpec("quadratic: M is not positive definite");

    const Matrix m = spec.m;
    const Vector b = spec.b;
    const int rows = spec.rows;
    const int cols = spec.cols;
    const double f_star = -0.25 * b.dot(m.ldlt().solve(b));

    Objective obj;
    obj.name = "quadratic";
    obj.param_rows = rows;
    obj.param_cols = cols;
    obj.sample_count = 1;
    obj.value = [m, b](const Matrix& w) {
        const Vector x = vec(w);
        return x.dot(m * x) + b.dot(x);
    };
    obj.gradient = [m, b, rows, cols](const Matrix& w) {
        const Vector x = vec(w);
        return reshape(2.0 * (m * x) + b, rows, cols);
    };
    // Single summand: the per-sample gradient is the full gradient.
    obj.sample_gradient = [grad = obj.gradient](const Matrix& w, int) { return grad(w); };
    obj.sample_infimum = [f_star](int) { return f_star; };
    obj.smoothness_l = 2.0 * ev.lambda_max;
    obj.pl_mu = 2.0 * ev.lambda_min;
    obj.optimum_value = f_star;
    obj.sample_smoothness_max = 2.0 * ev.lambda_max;
    obj.quadratic = QuadraticForm{m, b, 0.0};
    return obj;
}

// M = Diag(10, 1, ..., 1) in R^{9x9}, b = 1, x reshaped to 3x3.
inline QuadraticSpec counterexample_spec() {
    QuadraticSpec spec;
    Vector diag = Vector::Ones(9);
    diag(0) = 10.0;
    spec.m = diag.asDiagonal();
    spec.b = Vector::Ones(9);
    spec.rows = 3;
    spec.cols = 3;
    return spec;
}

// ---------------------------------------------------------------------------
// Regularized linear and logistic regression
// ---------------------------------------------------------------------------

struct RegressionSpec {
    Matrix x;  // N x d design
    Vector y;  // N targets (or +-1 labels)
    double reg_lambda = 0.0;
    int rows = 0;
    int cols = 0;
};

namespace detail {

inline void validate_regression(const RegressionSpec& spec, const char* what) {
    if (spec.x.rows() < 1) throw InvalidSpec(std::string(what) + ": need at least one sample");
    if (spec.y.size() != spec.x.rows()) throw InvalidSpec(std::string(what) + ": X and y disagree on N");
    if (spec.rows < 1 || spec.cols < 1 || static_cast<Eigen::Index>(spec.rows) * spec.cols != spec.x.cols()) {
        throw InvalidSpec(std::string(what) + ": reshape does not match d");
    }
    if (!(spec.reg_lambda >= 0.0) || !std::isfinite(spec.reg_lambda)) {
        throw InvalidSpec(std::string(what) + ": reg_lambda must be >= 0");
    }
    if (!spec.x.allFinite() || !spec.y.allFinite()) throw InvalidSpec(std::string(what) + ": non-finite data");
}

inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

struct GramStats {
    double eig_max;
    double eig_min;
    double row_norm_sq_max;
};

inline GramStats gram_stats(const Matrix& x) {
    const Matrix gram = x.transpose() * x;
    const EigExtremes ev = sym_eig_extremes(0.5 * (gram + gram.transpose()));
    return {ev.lambda_max, std::max(0.0, ev.lambda_min), x.rowwise().squaredNorm().maxCoeff()};
}

// inf_t softplus(-a t) + lambda t^2 for a > 0, lambda > 0 by bisection on the
// derivative, which changes sign on [0, a / (2 lambda)].
inline double logistic_sample_infimum(double a, double lambda) {
    if (a == 0.0) return std::log(2.0);
    if (lambda == 0.0) return 0.0;
    auto deriv = [&](double t) { return -a * sigmoid(-a * t) + 2.0 * lambda * t; };
    double lo = 0.0;
    double hi = a / (2.0 * lambda);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) < 0.0 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    return softplus(-a * t) + lambda * t * t;
}

}  // namespace detail

inline Objective make_linear_regression(const RegressionSpec& spec) {
    detail::validate_regression(spec, "linear regression");
    auto x = std::make_shared<const Matrix>(spec.x);
    auto y = std::make_shared<const Vector>(spec.y);
    const double lambda = spec.reg_lambda;
    const int rows = spec.rows;
    const int cols = spec.cols;
    const double n = static_cast<double>(spec.x.rows());
    const Eigen::Index d = spec.x.cols();

    Objective obj;
    obj.name = "linreg";
    obj.param_rows = rows;
    obj.param_cols = cols;
    obj.sample_count = static_cast<int>(spec.x.rows());
    obj.value = [x, y, lambda, n](const Matrix& w) {
        const Vector v = vec(w);
        return (*x * v - *y).squaredNorm() / n + lambda * v.squaredNorm();
    };
    obj.gradient = [x, y, lambda, n, rows, cols](const Matrix& w) {
        const Vector v = vec(w);
        const Vector residual = *x * v - *y;
        return reshape((2.0 / n) * (x->transpose() * residual) + 2.0 * lambda * v, rows, cols);
    };
    obj.sample_gradient = [x, y, lambda, rows, cols](const Matrix& w, int i) {
        const Vector v = vec(w);
        const auto xi = x->row(i).transpose();
        const double residual = xi.dot(v) - (*y)(i);
        return reshape(2.0 * residual * xi + 2.0 * lambda * v, rows, cols);
    };
    obj.sample_infimum = [x, y, lambda](int i) {
        const double s = x->row(i).squaredNorm() + lambda;
        const double yi = (*y)(i);
        return s > 0.0 ? lambda * yi * yi / s : yi * yi;
    };

    const detail::GramStats g = detail::gram_stats(spec.x);
    obj.smoothness_l = 2.0 * g.eig_max / n + 2.0 * lambda;
    const double mu = 2.0 * g.eig_min / n + 2.0 * lambda;
    if (mu > 0.0) obj.pl_mu = mu;
    obj.sample_smoothness_max = 2.0 * g.row_norm_sq_max + 2.0 * lambda;

    QuadraticForm form;
    form.p = spec.x.transpose() * spec.x / n + lambda * Matrix::Identity(d, d);
    form.q = -2.0 * (spec.x.transpose() * spec.y) / n;
    form.s = spec.y.squaredNorm() / n;
    obj.optimum_value = form.minimum_value();
    obj.quadratic = std::move(form);
    return obj;
}

inline Objective make_logistic_regression(const RegressionSpec& spec) {
    detail::validate_regression(spec, "logistic regression");
    for (Eigen::Index i = 0; i < spec.y.size(); ++i) {
        if (spec.y(i) != 1.0 && spec.y(i) != -1.0) throw InvalidSpec("logistic regression: labels must be +-1");
    }
    auto x = std::make_shared<const Matrix>(spec.x);
    auto y = std::make_shared<const Vector>(spec.y);
    const double lambda = spec.reg_lambda;
    const int rows = spec.rows;
    const int cols = spec.cols;
    const double n = static_cast<double>(spec.x.rows());

    Objective obj;
    obj.name = "logreg";
    obj.param_rows = rows;
    obj.param_cols = cols;
    obj.sample_count = static_cast<int>(spec.x.rows());
    obj.value = [x, y, lambda, n](const Matrix& w) {
        const Vector v = vec(w);
        const Vector margin = y->cwiseProduct(*x * v);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < margin.size(); ++i) loss += detail::softplus(-margin(i));
        return loss / n + lambda * v.squaredNorm();
    };
    obj.gradient = [x, y, lambda, n, rows, cols](const Matrix& w) {
        const Vector v = vec(w);
        const Vector margin = y->cwiseProduct(*x * v);
        Vector coeff(margin.size());
        for (Eigen::Index i = 0; i < margin.size(); ++i) coeff(i) = -(*y)(i) * detail::sigmoid(-margin(i));
        return reshape((x->transpose() * coeff) / n + 2.0 * lambda * v, rows, cols);
    };
    obj.sample_gradient = [x, y, lambda, rows, cols](const Matrix& w, int i) {
        const Vector v = vec(w);
        const auto xi = x->row(i).transpose();
        const double yi = (*y)(i);
        const double coeff = -yi * detail::sigmoid(-yi * xi.dot(v));
        return reshape(coeff * xi + 2.0 * lambda * v, rows, cols);
    };
    obj.sample_infimum = [x, lambda](int i) { return detail::logistic_sample_infimum(x->row(i).norm(), lambda); };

    const detail::GramStats g = detail::gram_stats(spec.x);
    obj.smoothness_l = g.eig_max / (4.0 * n) + 2.0 * lambda;
    if (lambda > 0.0) obj.pl_mu = 2.0 * lambda;
    obj.sample_smoothness_max = g.row_norm_sq_max / 4.0 + 2.0 * lambda;
    return obj;
}

// ---------------------------------------------------------------------------
// Finite-sum diagnostics
// ---------------------------------------------------------------------------

// (1/N) sum_i ||grad f_i(W) - grad f(W)||_F^2, the variance witness at W.
inline double sample_variance(const Objective& obj, const Matrix& w) {
    obj.check_shape(w);
    const Matrix full = obj.gradient(w);
    double acc = 0.0;
    for (int i = 0; i < obj.sample_count; ++i) acc += (obj.sample_gradient(w, i) - full).squaredNorm();
    return acc / obj.sample_count;
}

struct Minimum {
    Matrix w;
    double value = 0.0;
    double grad_norm = 0.0;
};

// Minimizer of f: closed form for quadratic objectives, otherwise plain
// gradient descent with step 1/L until ||grad f|| <= tol.
inline Minimum minimize(const Objective& obj, double tol = 1e-9, long max_iter = 1000000) {
    Minimum out;
    if (obj.quadratic) {
        out.w = reshape(obj.quadratic->minimizer(), obj.param_rows, obj.param_cols);
        out.value = obj.value(out.w);
        out.grad_norm = obj.gradient(out.w).norm();
        if (obj.optimum_value) out.value = std::min(out.value, *obj.optimum_value);
        return out;
    }
    if (!obj.smoothness_l) throw Unsupported(obj.name + ": cannot minimize without a smoothness constant");
    const double step = 1.0 / *obj.smoothness_l;
    Matrix w = obj.zero_point();
    for (long it = 0; it < max_iter; ++it) {
        const Matrix g = obj.gradient(w);
        const double gn = g.norm();
        if (!std::isfinite(gn)) break;
        if (gn <= tol) {
            out.w = std::move(w);
            out.value = obj.value(out.w);
            out.grad_norm = gn;
            return out;
        }
        w -= step * g;
    }
    throw Unsupported(obj.name + ": gradient descent did not reach the requested stationarity");
}

// Returns a copy of obj with optimum_value filled in (numerically if needed).
inline Objective with_optimum(Objective obj) {
    if (!obj.optimum_value) obj.optimum_value = minimize(obj).value;
    return obj;
}

// f(W) = (1/M) sum_m f_m(W), exposed as a finite sum over the M components.
inline Objective average_objective(const std::vector<Objective>& parts) {
    if (parts.empty()) throw InvalidConfig("average_objective: no components");
    const int rows = parts.front().param_rows;
    const int cols = parts.front().param_cols;
    for (const auto& p : parts) {
        if (p.param_rows != rows || p.param_cols != cols) throw InvalidSpec("average_objective: shape mismatch");
    }
    auto shared = std::make_shared<const std::vector<Objective>>(parts);
    const double count = static_cast<double>(parts.size());

    Objective obj;
    obj.name = "average";
    obj.param_rows = rows;
    obj.param_cols = cols;
    obj.sample_count = static_cast<int>(parts.size());
    obj.value = [shared, count](const Matrix& w) {
        double acc = 0.0;
        for (const auto& p : *shared) acc += p.value(w);
        return acc / count;
    };
    obj.gradient = [shared, count](const Matrix& w) {
        Matrix acc = Matrix::Zero(w.rows(), w.cols());
        for (const auto& p : *shared) acc += p.gradient(w);
        return Matrix(acc / count);
    };
    obj.sample_gradient = [shared](const Matrix& w, int m) { return (*shared)[m].gradient(w); };

    bool all_smooth = true;
    double l_sum = 0.0;
    double l_max = 0.0;
    bool all_quadratic = true;
    for (const auto& p : parts) {
        all_smooth = all_smooth && p.smoothness_l.has_value();
        if (p.smoothness_l) {
            l_sum += *p.smoothness_l;
            l_max = std::max(l_max, *p.smoothness_l);
        }
        all_quadratic = all_quadratic && p.quadratic.has_value();
    }
    if (all_smooth) {
        obj.smoothness_l = l_sum / count;
        obj.sample_smoothness_max = l_max;
    }
    if (all_quadratic) {
        QuadraticForm form = *parts.front().quadratic;
        for (std::size_t k = 1; k < parts.size(); ++k) {
            form.p += parts[k].quadratic->p;
            form.q += parts[k].quadratic->q;
            form.s += parts[k].quadratic->s;
        }
        form.p /= count;
        form.q /= count;
        form.s /= count;
        const EigExtremes ev = sym_eig_extremes(0.5 * (form.p + form.p.transpose()));
        if (ev.lambda_min > 0.0) obj.pl_mu = 2.0 * ev.lambda_min;
        obj.smoothness_l = 2.0 * ev.lambda_max;
        obj.optimum_value = form.minimum_value();
        obj.quadratic = std::move(form);
    }
    return obj;
}

}  // namespace raclora

#endif  // RACLORA_OBJECTIVES_HPP
