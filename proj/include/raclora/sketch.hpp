#ifndef RACLORA_SKETCH_HPP
#define RACLORA_SKETCH_HPP

// Random sketches and the orthogonal projectors they induce.
//
// A left sketch B (m x r) freezes the column space of the update
// W + (alpha/r) B A; its projector H_B = B (B^T B)^+ B^T acts on the left of
// the gradient. A right sketch A (r x n) freezes the row space; its projector
// H_A = A^T (A A^T)^+ A acts on the right.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "raclora/errors.hpp"
#include "raclora/linalg.hpp"
#include "raclora/random.hpp"

namespace raclora {

enum class SketchSide { Left, Right };

enum class SketchDistribution { GaussianStd, Rademacher, CoordinateSubset };

inline std::string_view to_string(SketchSide s) { return s == SketchSide::Left ? "left" : "right"; }

inline std::string_view to_string(SketchDistribution d) {
    switch (d) {
        case SketchDistribution::GaussianStd: return "gaussian";
        case SketchDistribution::Rademacher: return "rademacher";
        case SketchDistribution::CoordinateSubset: return "coordinate";
    }
    return "?";
}

inline SketchSide parse_sketch_side(std::string_view s) {
    if (s == "left") return SketchSide::Left;
    if (s == "right") return SketchSide::Right;
    throw InvalidConfig("unknown sketch side '" + std::string(s) + "'");
}

inline SketchDistribution parse_sketch_distribution(std::string_view s) {
    if (s == "gaussian") return SketchDistribution::GaussianStd;
    if (s == "rademacher") return SketchDistribution::Rademacher;
    if (s == "coordinate") return SketchDistribution::CoordinateSubset;
    throw InvalidConfig("unknown sketch distribution '" + std::string(s) + "'");
}

struct SketchSpec {
    SketchSide side = SketchSide::Left;
    int rank = 1;
    int target_rows = 1;  // m
    int target_cols = 1;  // n
    SketchDistribution distribution = SketchDistribution::GaussianStd;
    double alpha = 1.0;

    // Dimension the projector acts on: m for Left, n for Right.
    int projector_dim() const { return side == SketchSide::Left ? target_rows : target_cols; }

    void validate() const {
        if (target_rows < 1 || target_cols < 1) throw InvalidSpec("sketch: target shape must be positive");
        if (rank < 1 || rank > std::min(target_rows, target_cols)) {
            throw InvalidSpec("sketch: rank " + std::to_string(rank) + " outside [1, min(m, n)]");
        }
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidSpec("sketch: alpha must be positive");
    }

    // Smallest eigenvalue of E[H] for rotation- or permutation-invariant
    // sketch distributions: r/m (Left) or r/n (Right).
    double lambda_min_closed_form() const { return static_cast<double>(rank) / projector_dim(); }
};

struct Projector {
    Matrix h;
    int source_rank = 0;
};

// Draws B_S (m x r) for Left or A_S (r x n) for Right.
inline Matrix sample_sketch(const SketchSpec& spec, RandomStream& rng) {
    spec.validate();
    const bool left = spec.side == SketchSide::Left;
    const int r = spec.rank;
    const int dim = spec.projector_dim();
    Matrix s = left ? Matrix(dim, r) : Matrix(r, dim);

    switch (spec.distribution) {
        case SketchDistribution::GaussianStd:
            for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
            break;
        case SketchDistribution::Rademacher:
            for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.rademacher();
            break;
        case SketchDistribution::CoordinateSubset: {
            s.setZero();
            const auto picks = rng.choose(static_cast<std::size_t>(dim), static_cast<std::size_t>(r));
            for (int k = 0; k < r; ++k) {
                const auto c = static_cast<Eigen::Index>(picks[k]);
                if (left)
                    s(c, k) = 1.0;
                else
                    s(k, c) = 1.0;
            }
            break;
        }
    }
    return s;
}

// Orthogonal projector onto the column space (Left) or row space (Right) of
// the sketch. Equal to B (B^T B)^+ B^T, resp. A^T (A A^T)^+ A, but formed from
// the sketch's singular vectors so the Gram matrix is never squared.
// Rank-deficient sketches give lower-rank projectors.
inline Projector build_projector(const Matrix& sketch, SketchSide side) {
    require_finite(sketch, "build_projector");
    Eigen::JacobiSVD<Matrix> svd(sketch, side == SketchSide::Left ? Eigen::ComputeThinU : Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = default_rel_tol(sketch) * (sigma.size() > 0 ? sigma(0) : 0.0);
    int k = 0;
    while (k < sigma.size() && sigma(k) > cutoff && sigma(k) > 0.0) ++k;
    const Matrix basis = side == SketchSide::Left ? svd.matrixU().leftCols(k) : svd.matrixV().leftCols(k);
    Projector p;
    p.h = basis * basis.transpose();
    p.source_rank = k;
    return p;
}

// Identity projector of the given dimension (full-parameter training).
inline Projector identity_projector(int dim) { return {Matrix::Identity(dim, dim), dim}; }

// Applies H to a gradient-shaped matrix: H G for Left, G H for Right.
inline Matrix project(const Projector& p, const Matrix& g, SketchSide side) {
    return side == SketchSide::Left ? Matrix(p.h * g) : Matrix(g * p.h);
}

struct ExpectedProjector {
    Matrix mean_h;
    double lambda_min_hat = 0.0;
    double lambda_max_hat = 0.0;
    Matrix entry_std_err;  // per-entry standard error of mean_h
    double std_err = 0.0;  // max entrywise standard error
};

// Monte Carlo estimate of E[H] over `samples` independent sketches.
inline ExpectedProjector estimate_expected_projector(const SketchSpec& spec, int samples, RandomStream& rng) {
    spec.validate();
    if (samples < 1) throw InvalidConfig("estimate_expected_projector: samples must be >= 1");
    const int dim = spec.projector_dim();
    Matrix sum = Matrix::Zero(dim, dim);
    Matrix sum_sq = Matrix::Zero(dim, dim);
    for (int k = 0; k < samples; ++k) {
        const Projector p = build_projector(sample_sketch(spec, rng), spec.side);
        sum += p.h;
        sum_sq += p.h.cwiseProduct(p.h);
    }
    ExpectedProjector out;
    const double n = samples;
    out.mean_h = sum / n;
    out.entry_std_err = Matrix::Zero(dim, dim);
    if (samples > 1) {
        const Matrix var = ((sum_sq / n) - out.mean_h.cwiseProduct(out.mean_h)).cwiseMax(0.0) * (n / (n - 1.0));
        out.entry_std_err = (var / n).cwiseSqrt();
        out.std_err = out.entry_std_err.maxCoeff();
    }
    const Matrix sym = 0.5 * (out.mean_h + out.mean_h.transpose());
    const EigExtremes ev = sym_eig_extremes(sym);
    out.lambda_min_hat = ev.lambda_min;
    out.lambda_max_hat = ev.lambda_max;
    return out;
}

}  // namespace raclora

#endif  // RACLORA_SKETCH_HPP
