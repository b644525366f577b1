#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "matconc/sym_matrix.hpp"

namespace matconc {

/// Spectral norm of a symmetric matrix: max_j |lambda_j|.
inline double op_norm(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.mat(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("op_norm: eigensolver failed to converge");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Spectral norm of a rectangular matrix: largest singular value.
inline double op_norm(const RectMatrix& b) {
    if (b.rows() == 0 || b.cols() == 0) return 0.0;
    // sqrt of the top eigenvalue of the smaller Gram matrix
    Eigen::MatrixXd gram = (b.rows() <= b.cols())
        ? Eigen::MatrixXd(b * b.transpose())
        : Eigen::MatrixXd(b.transpose() * b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("op_norm: eigensolver failed to converge");
    }
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Full eigendecomposition, eigenvalues descending.
inline Spectrum eig(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.mat());
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("eig: eigensolver failed to converge");
    }
    // Eigen sorts ascending; flip to descending.
    const int d = a.dim();
    Spectrum s;
    s.eigenvalues = es.eigenvalues().reverse();
    s.eigenvectors.resize(d, d);
    for (int j = 0; j < d; ++j) {
        s.eigenvectors.col(j) = es.eigenvectors().col(d - 1 - j);
    }
    return s;
}

/// Effective rank trace(A)/||A|| of a nonzero PSD matrix; lies in [1, dim].
inline double effective_rank(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.mat(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("effective_rank: eigensolver failed to converge");
    }
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double norm = ev.cwiseAbs().maxCoeff();
    if (norm == 0.0) {
        throw std::invalid_argument("effective_rank: zero matrix");
    }
    if (ev.minCoeff() < -1e-10 * norm) {
        throw std::invalid_argument("effective_rank: matrix is not positive semidefinite");
    }
    // clamp eigensolver round-off below zero
    double trace = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) trace += std::max(0.0, ev[i]);
    return trace / norm;
}

/// Effective rank from a known spectrum of a PSD matrix.
inline double effective_rank(const Eigen::VectorXd& eigenvalues) {
    const double norm = eigenvalues.cwiseAbs().maxCoeff();
    if (norm == 0.0) throw std::invalid_argument("effective_rank: zero spectrum");
    if (eigenvalues.minCoeff() < -1e-10 * norm) {
        throw std::invalid_argument("effective_rank: spectrum is not nonnegative");
    }
    double trace = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) trace += std::max(0.0, eigenvalues[i]);
    return trace / norm;
}

/// Stable rank ||B||_F^2 / ||B||^2 of a nonzero rectangular matrix.
inline double stable_rank(const RectMatrix& b) {
    const double fro2 = b.squaredNorm();
    if (fro2 == 0.0) throw std::invalid_argument("stable_rank: zero matrix");
    const double norm = op_norm(b);
    return fro2 / (norm * norm);
}

/// Hermitian dilation [[0, W], [W^T, 0]] of a rectangular matrix. The result
/// has dimension rows+cols and spectrum {+/- singular values of W, zeros}, so
/// the operator norm is preserved.
inline SymMatrix hermitian_dilation(const RectMatrix& w) {
    const Eigen::Index r = w.rows(), c = w.cols();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(r + c, r + c);
    d.topRightCorner(r, c) = w;
    d.bottomLeftCorner(c, r) = w.transpose();
    return SymMatrix(std::move(d));
}

namespace detail {

inline void check_index(const Spectrum& s, int j) {
    if (j < 0 || j >= s.dim()) {
        throw std::out_of_range("eigenvalue index out of range");
    }
    if (s.dim() < 2) {
        throw std::invalid_argument("spectral gap undefined for dim < 2");
    }
}

}  // namespace detail

/// Spectral gap g_j for the j-th eigenvalue (descending order, 0-based):
/// distance to the nearest neighboring eigenvalue, one-sided at the edges.
inline double spectral_gap(const Spectrum& s, int j) {
    detail::check_index(s, j);
    const Eigen::VectorXd& lam = s.eigenvalues;
    const int d = s.dim();
    if (j == 0) return lam[0] - lam[1];
    if (j == d - 1) return lam[d - 2] - lam[d - 1];
    return std::min(lam[j - 1] - lam[j], lam[j] - lam[j + 1]);
}

namespace detail {

inline double checked_gap(const Spectrum& s, int j) {
    const double g = spectral_gap(s, j);
    const double scale = s.eigenvalues.cwiseAbs().maxCoeff();
    if (g <= 1e-12 * scale || g <= 0.0) {
        throw std::invalid_argument("degenerate spectral gap at index " + std::to_string(j));
    }
    return g;
}

}  // namespace detail

struct RelativeRank {
    double gap;   // g_j
    double rank;  // r_j = sum_{i != j} lambda_i / |lambda_i - lambda_j| + lambda_j / g_j
};

/// Relative rank r_j of the j-th eigenvector problem, together with the gap.
inline RelativeRank relative_rank(const Spectrum& s, int j) {
    const double g = detail::checked_gap(s, j);
    const Eigen::VectorXd& lam = s.eigenvalues;
    double r = lam[j] / g;
    for (int i = 0; i < s.dim(); ++i) {
        if (i == j) continue;
        r += lam[i] / std::abs(lam[i] - lam[j]);
    }
    return RelativeRank{g, r};
}

/// The resolvent-like operator
///   T_j = sum_{i != j} |lambda_i - lambda_j|^{-1/2} u_i u_i^T + g_j^{-1/2} u_j u_j^T.
/// Satisfies trace(T_j S T_j) = r_j(S) and
/// ||T_j S T_j|| = (max_{i != j} lambda_i/|lambda_i - lambda_j|) v lambda_j/g_j.
inline SymMatrix tj_operator(const Spectrum& s, int j) {
    const double g = detail::checked_gap(s, j);
    const Eigen::VectorXd& lam = s.eigenvalues;
    const int d = s.dim();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const double w = (i == j) ? 1.0 / std::sqrt(g)
                                  : 1.0 / std::sqrt(std::abs(lam[i] - lam[j]));
        const Eigen::VectorXd u = s.eigenvectors.col(i);
        t.noalias() += w * (u * u.transpose());
    }
    return SymMatrix(std::move(t));
}

namespace detail {

inline void check_unit(const Eigen::VectorXd& u, const char* name) {
    if (std::abs(u.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument(std::string(name) + " is not a unit vector");
    }
}

}  // namespace detail

/// Frobenius distance between the rank-one projectors of two unit vectors:
/// ||uu^T - vv^T||_F = sqrt(2 (1 - <u,v>^2)).
inline double projector_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    detail::check_unit(u, "u");
    detail::check_unit(v, "v");
    const double c = u.dot(v);
    return std::sqrt(2.0 * std::max(0.0, 1.0 - c * c));
}

/// Sign-aligned vector distance ||u - v sign<u,v>||_2; never exceeds the
/// projector distance.
inline double aligned_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    detail::check_unit(u, "u");
    detail::check_unit(v, "v");
    const double sign = (u.dot(v) >= 0.0) ? 1.0 : -1.0;
    return (u - sign * v).norm();
}

}  // namespace matconc
