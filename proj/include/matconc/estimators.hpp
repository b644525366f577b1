#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "matconc/matcore.hpp"
#include "matconc/rng.hpp"
#include "matconc/sym_matrix.hpp"

namespace matconc {

/// Clipping map: identity on [-1,1], sign outside.
inline double psi_trunc(double x) {
    if (x > 1.0) return 1.0;
    if (x < -1.0) return -1.0;
    return x;
}

/// Ramp indicator surrogate: 0 below 1/2, linear on (1/2,1], 1 above;
/// satisfies 1{x >= 1/2} >= rho(x) >= 1{x >= 1}.
inline double rho_trunc(double x) {
    if (x <= 0.5) return 0.0;
    if (x > 1.0) return 1.0;
    return 2.0 * x - 1.0;
}

/// Directional truncation scale lambda = (1 / (kappa^2 ||Sigma||)) sqrt(r(Sigma)/n).
inline double truncation_lambda(double kappa, double sigma_norm, double erank, long long n) {
    if (!(kappa > 0.0) || !(sigma_norm > 0.0) || !(erank > 0.0) || n < 1) {
        throw std::invalid_argument("truncation_lambda: all inputs must be positive");
    }
    return std::sqrt(erank / static_cast<double>(n)) / (kappa * kappa * sigma_norm);
}

/// Heuristic vector-norm threshold bridging the directional lambda to a
/// practical estimator: tau = sqrt(||Sigma_hat|| n / r_hat).
inline double default_tau(double sigma_norm_hat, double erank_hat, long long n) {
    if (!(sigma_norm_hat > 0.0) || !(erank_hat > 0.0) || n < 1) {
        throw std::invalid_argument("default_tau: all inputs must be positive");
    }
    return std::sqrt(sigma_norm_hat * static_cast<double>(n) / erank_hat);
}

/// Norm-truncated covariance (1/n) sum_j X_j X_j^T 1{||X_j||_2 <= tau}.
/// Equals the sample covariance once tau dominates every sample norm.
inline SymMatrix truncated_covariance(const Eigen::MatrixXd& x, double tau) {
    if (x.cols() < 1) throw std::invalid_argument("truncated_covariance: no samples");
    if (tau < 0.0) throw std::invalid_argument("truncated_covariance: tau must be >= 0");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).norm() <= tau) {
            cov.noalias() += x.col(j) * x.col(j).transpose();
        }
    }
    cov /= static_cast<double>(x.cols());
    cov = 0.5 * (cov + cov.transpose()).eval();
    return SymMatrix(std::move(cov));
}

/// Sample covariance (1/n) sum_j X_j X_j^T; samples are columns of x. Shares
/// the accumulation path of truncated_covariance so the tau = infinity case
/// coincides bit for bit.
inline SymMatrix sample_covariance(const Eigen::MatrixXd& x) {
    if (x.cols() < 1) throw std::invalid_argument("sample_covariance: no samples");
    return truncated_covariance(x, std::numeric_limits<double>::infinity());
}

/// Unit directions used to probe sphere suprema: m uniformly random
/// directions plus any caller-supplied eigenvector columns. Probing a finite
/// set yields lower bounds of the true suprema.
class DirectionSet {
public:
    DirectionSet(int dim, int m_random, const SeedSpec& seed) {
        if (dim < 1 || m_random < 0) throw std::invalid_argument("DirectionSet: bad sizes");
        dirs_.resize(dim, m_random);
        RandomStream rs(seed);
        for (int j = 0; j < m_random; ++j) {
            double norm2 = 0.0;
            do {
                for (int i = 0; i < dim; ++i) dirs_(i, j) = rs.normal();
                norm2 = dirs_.col(j).squaredNorm();
            } while (norm2 == 0.0);
            dirs_.col(j) /= std::sqrt(norm2);
        }
    }

    /// Probe set for sphere-supremum diagnostics: the eigenvectors of the
    /// population and empirical matrices plus m uniform directions.
    static DirectionSet probe(const Spectrum& population, const Spectrum& empirical,
                              const SeedSpec& seed, int m = 1024) {
        DirectionSet dirs(population.dim(), m, seed);
        dirs.add_eigenvectors(population);
        dirs.add_eigenvectors(empirical);
        return dirs;
    }

    void add_eigenvectors(const Spectrum& s) {
        if (s.eigenvectors.rows() != dirs_.rows()) {
            throw std::invalid_argument("DirectionSet: dimension mismatch");
        }
        const Eigen::Index old = dirs_.cols();
        dirs_.conservativeResize(Eigen::NoChange, old + s.eigenvectors.cols());
        dirs_.rightCols(s.eigenvectors.cols()) = s.eigenvectors;
    }

    void add_direction(const Eigen::VectorXd& v) {
        if (std::abs(v.norm() - 1.0) > 1e-10) {
            throw std::invalid_argument("DirectionSet: direction must be a unit vector");
        }
        dirs_.conservativeResize(Eigen::NoChange, dirs_.cols() + 1);
        dirs_.col(dirs_.cols() - 1) = v;
    }

    int size() const { return static_cast<int>(dirs_.cols()); }
    Eigen::VectorXd direction(int i) const { return dirs_.col(i); }
    const Eigen::MatrixXd& matrix() const { return dirs_; }

private:
    Eigen::MatrixXd dirs_;
};

struct TruncationParams {
    double lambda;     // directional truncation scale, > 0
    double kappa = 1.0;
    double tau = 0.0;  // vector-norm threshold (0 = unused)
};

/// Per-direction peaky/spread diagnostics of the covariance error.
struct DirectionRecord {
    double spread;      // |(1/(lambda n)) sum psi(lambda <X_j,v>^2) - <Sigma v, v>|
    double peaky;       // (1/n) sum <X_j,v>^2 1{lambda <X_j,v>^2 > 1}
    int peaky_count;    // |I_v|
    double quad_error;  // |(1/n) sum <X_j,v>^2 - <Sigma v, v>|; <= peaky + spread
};

/// Evaluate the peaky/spread decomposition of the quadratic-form error at
/// each probe direction, against the population form of sigma.
inline std::vector<DirectionRecord> spread_peaky_eval(const Eigen::MatrixXd& x,
                                                      const TruncationParams& params,
                                                      const DirectionSet& dirs,
                                                      const SymMatrix& sigma) {
    if (!(params.lambda > 0.0)) {
        throw std::invalid_argument("spread_peaky_eval: lambda must be positive");
    }
    const double lambda = params.lambda;
    const double n = static_cast<double>(x.cols());
    std::vector<DirectionRecord> records;
    records.reserve(dirs.size());
    for (int vi = 0; vi < dirs.size(); ++vi) {
        const Eigen::VectorXd v = dirs.direction(vi);
        const Eigen::VectorXd proj = x.transpose() * v;  // <X_j, v>
        const double target = v.dot(sigma.mat() * v);
        double psi_sum = 0.0, peaky = 0.0, quad = 0.0;
        int count = 0;
        for (Eigen::Index j = 0; j < proj.size(); ++j) {
            const double sq = proj[j] * proj[j];
            quad += sq;
            psi_sum += psi_trunc(lambda * sq);
            if (lambda * sq > 1.0) {
                peaky += sq;
                ++count;
            }
        }
        records.push_back(DirectionRecord{
            std::abs(psi_sum / (lambda * n) - target),
            peaky / n,
            count,
            std::abs(quad / n - target),
        });
    }
    return records;
}

/// Exact f(k,[n]) = sup over k-sparse unit combinations y of ||sum y_j X_j||^2,
/// by enumeration of all k-subsets: the max over |J| = k of the top
/// eigenvalue of the Gram matrix of {X_j}_{j in J}. Guarded to n <= 20.
inline double sparse_sup_f(const Eigen::MatrixXd& x, int k) {
    const int n = static_cast<int>(x.cols());
    if (n > 20) {
        throw std::invalid_argument("sparse_sup_f: enumeration is capped at n = 20 samples");
    }
    if (k < 1 || k > n) throw std::invalid_argument("sparse_sup_f: need 1 <= k <= n");

    const Eigen::MatrixXd gram_full = x.transpose() * x;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;

    double best = 0.0;
    for (;;) {
        Eigen::MatrixXd gram(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) gram(a, b) = gram_full(idx[a], idx[b]);
        gram = 0.5 * (gram + gram.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        best = std::max(best, es.eigenvalues().maxCoeff());

        // next k-combination in lexicographic order
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
    return best;
}

/// Hypercontractivity ratio kappa estimated over a probe set: the largest
/// empirical L_p/L_2 ratio of <X,v>. A lower bound of the sphere supremum.
inline double estimate_kappa(const Eigen::MatrixXd& x, const DirectionSet& dirs, double p) {
    if (!(p >= 2.0)) throw std::invalid_argument("estimate_kappa: p must be >= 2");
    if (x.cols() < 1) throw std::invalid_argument("estimate_kappa: no samples");
    const double n = static_cast<double>(x.cols());
    double best = 0.0;
    for (int vi = 0; vi < dirs.size(); ++vi) {
        const Eigen::VectorXd proj = x.transpose() * dirs.direction(vi);
        double lp = 0.0, l2 = 0.0;
        for (Eigen::Index j = 0; j < proj.size(); ++j) {
            lp += std::pow(std::abs(proj[j]), p);
            l2 += proj[j] * proj[j];
        }
        if (l2 == 0.0) continue;
        best = std::max(best, std::pow(lp / n, 1.0 / p) / std::sqrt(l2 / n));
    }
    return best;
}

/// Sign-aligned j-th eigenvectors of an estimate/population pair, with the
/// realized distances and the resolvent certificate 4 sqrt(2) ||T_j (S - Sigma) T_j||
/// that dominates both.
struct EigvecAlignment {
    Eigen::VectorXd u_hat;
    Eigen::VectorXd u;
    double projector_dist;  // ||u_hat u_hat^T - u u^T||_F
    double vector_dist;     // ||u_hat - u||_2 after sign alignment
    double certificate;     // 4 sqrt(2) ||T_j (Sigma_hat - Sigma) T_j||
};

inline EigvecAlignment aligned_eigvec(const SymMatrix& sigma_hat, const SymMatrix& sigma,
                                      int j) {
    if (sigma_hat.dim() != sigma.dim()) {
        throw std::invalid_argument("aligned_eigvec: dimension mismatch");
    }
    const Spectrum pop = eig(sigma);
    const Spectrum emp = eig(sigma_hat);
    const SymMatrix tj = tj_operator(pop, j);  // validates the gap

    Eigen::VectorXd u = pop.eigenvectors.col(j);
    Eigen::VectorXd u_hat = emp.eigenvectors.col(j);
    if (u_hat.dot(u) < 0.0) u_hat = -u_hat;

    Eigen::MatrixXd mid = tj.mat() * (sigma_hat.mat() - sigma.mat()) * tj.mat();
    mid = 0.5 * (mid + mid.transpose()).eval();
    const double certificate = 4.0 * std::sqrt(2.0) * op_norm(SymMatrix(std::move(mid)));

    return EigvecAlignment{u_hat, u, projector_distance(u_hat, u), (u_hat - u).norm(),
                           certificate};
}

}  // namespace matconc
