#ifndef RACLORA_LINALG_HPP
#define RACLORA_LINALG_HPP

// Dense real-matrix helpers shared by every other module.
//
// Matrices are row-major so that vec(W) is the natural flattening of the
// storage; reshaping a d-vector into rows x cols fills row by row.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "raclora/errors.hpp"

namespace raclora {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw InvalidMatrix(std::string(what) + ": non-finite entry");
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
    }
}

// Default cutoff used by pseudo_inverse and numerical_rank.
inline double default_rel_tol(const Matrix& m) {
    return 1e-12 * static_cast<double>(std::max(m.rows(), m.cols()));
}

// Moore-Penrose pseudoinverse through a thin SVD. Singular values at or below
// rel_tol * sigma_max are treated as zero.
inline Matrix pseudo_inverse(const Matrix& m, double rel_tol) {
    require_finite(m, "pseudo_inverse");
    if (!(rel_tol > 0.0)) throw InvalidMatrix("pseudo_inverse: rel_tol must be positive");
    if (m.size() == 0) return Matrix(m.cols(), m.rows());

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = rel_tol * (sigma.size() > 0 ? sigma(0) : 0.0);

    Vector inv = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) inv(i) = 1.0 / sigma(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Matrix pseudo_inverse(const Matrix& m) { return pseudo_inverse(m, default_rel_tol(m)); }

inline int numerical_rank(const Matrix& m, double rel_tol) {
    require_finite(m, "numerical_rank");
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sigma = svd.singularValues();
    const double cutoff = rel_tol * sigma(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) ++rank;
    }
    return rank;
}

inline int numerical_rank(const Matrix& m) { return numerical_rank(m, default_rel_tol(m)); }

struct EigExtremes {
    double lambda_min;
    double lambda_max;
};

// Smallest and largest eigenvalue of a symmetric matrix. The input is
// symmetrized before the solve; asymmetry beyond 1e-10 (relative) is rejected.
inline EigExtremes sym_eig_extremes(const Matrix& m) {
    require_finite(m, "sym_eig_extremes");
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidMatrix("sym_eig_extremes: matrix must be square and non-empty");
    }
    const double scale = std::max(1.0, m.norm());
    if ((m - m.transpose()).norm() > 1e-10 * scale) {
        throw InvalidMatrix("sym_eig_extremes: matrix is not symmetric");
    }
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    const Vector& ev = solver.eigenvalues();
    return {ev(0), ev(ev.size() - 1)};
}

// Trace inner product <a, b> = sum_ij a_ij b_ij.
inline double frobenius_inner(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "frobenius_inner");
    return a.cwiseProduct(b).sum();
}

inline double frobenius_norm_sq(const Matrix& a) { return a.squaredNorm(); }

// Row-major flattening and its inverse.
inline Vector vec(const Matrix& w) { return Eigen::Map<const Vector>(w.data(), w.size()); }

inline Matrix reshape(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != v.size()) {
        throw ShapeError("reshape: " + std::to_string(v.size()) + " entries do not fill " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace raclora

#endif  // RACLORA_LINALG_HPP
