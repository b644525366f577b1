#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "matconc/matcore.hpp"
#include "matconc/rng.hpp"
#include "matconc/sym_matrix.hpp"

namespace matconc {

/// Centered scalar law normalized to unit variance. Used for the scalar
/// factors of ScalarHeavy ensembles and for Karhunen-Loeve coefficients.
class ScalarLaw {
public:
    enum class Kind { gaussian, student_t, pareto_symmetric, rademacher };

    static ScalarLaw gaussian() { return ScalarLaw(Kind::gaussian, 0.0); }
    static ScalarLaw student_t(double dof) {
        if (!(dof > 2.0)) throw std::invalid_argument("student_t law requires dof > 2");
        return ScalarLaw(Kind::student_t, dof);
    }
    static ScalarLaw pareto_symmetric(double alpha) {
        if (!(alpha > 2.0)) throw std::invalid_argument("pareto law requires alpha > 2");
        return ScalarLaw(Kind::pareto_symmetric, alpha);
    }
    static ScalarLaw rademacher() { return ScalarLaw(Kind::rademacher, 0.0); }

    Kind kind() const { return kind_; }
    double param() const { return param_; }

    double sample(RandomStream& rs) const {
        switch (kind_) {
            case Kind::gaussian:
                return rs.normal();
            case Kind::student_t:
                // rescaled so that the variance equals 1
                return rs.student_t(param_) * std::sqrt((param_ - 2.0) / param_);
            case Kind::pareto_symmetric:
                return rs.pareto_symmetric(param_);
            case Kind::rademacher:
                return rs.rademacher();
        }
        return 0.0;
    }

    /// E|xi|^p of the normalized law; +inf when the moment does not exist.
    double abs_moment(double p) const {
        const double inf = std::numeric_limits<double>::infinity();
        switch (kind_) {
            case Kind::gaussian:
                return std::exp(0.5 * p * std::log(2.0) + std::lgamma((p + 1.0) / 2.0) -
                                0.5 * std::log(M_PI));
            case Kind::student_t: {
                const double nu = param_;
                if (p >= nu) return inf;
                const double raw = std::exp(0.5 * p * std::log(nu) +
                                            std::lgamma((p + 1.0) / 2.0) +
                                            std::lgamma((nu - p) / 2.0) -
                                            0.5 * std::log(M_PI) - std::lgamma(nu / 2.0));
                return raw * std::pow((nu - 2.0) / nu, p / 2.0);
            }
            case Kind::pareto_symmetric: {
                const double a = param_;
                if (p >= a) return inf;
                const double scale = std::sqrt((a - 2.0) / a);
                return std::pow(scale, p) * a / (a - p);
            }
            case Kind::rademacher:
                return 1.0;
        }
        return inf;
    }

    /// L_p/L_2 ratio of the law; the hypercontractivity constant of the
    /// scalar marginal.
    double kappa(double p) const { return std::pow(abs_moment(p), 1.0 / p); }

private:
    ScalarLaw(Kind k, double param) : kind_(k), param_(param) {}
    Kind kind_;
    double param_;
};

/// Covariance matrix with a prescribed spectrum, diagonal in a random
/// orthonormal basis derived from the seed (QR of a Gaussian matrix with the
/// R-diagonal sign fix).
inline SymMatrix build_covariance(const Eigen::VectorXd& eigenvalues, const SeedSpec& seed) {
    const int d = static_cast<int>(eigenvalues.size());
    if (d < 1) throw std::invalid_argument("build_covariance: empty spectrum");
    double maxval = 0.0;
    for (int i = 0; i < d; ++i) {
        if (eigenvalues[i] < 0.0) {
            throw std::invalid_argument("build_covariance: eigenvalues must be >= 0");
        }
        maxval = std::max(maxval, eigenvalues[i]);
    }
    if (maxval == 0.0) throw std::invalid_argument("build_covariance: all-zero spectrum");

    RandomStream rs(seed);
    Eigen::MatrixXd g(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) g(i, j) = rs.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    Eigen::MatrixXd sigma = q * eigenvalues.asDiagonal() * q.transpose();
    // exact symmetry for the SymMatrix invariant
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    return SymMatrix(std::move(sigma));
}

/// Eigenvalue list (1, ratio, ratio^2, ...) of length dim.
inline Eigen::VectorXd spectrum_geometric(double ratio, int dim) {
    if (!(ratio > 0.0 && ratio <= 1.0) || dim < 1) {
        throw std::invalid_argument("spectrum_geometric: need ratio in (0,1], dim >= 1");
    }
    Eigen::VectorXd v(dim);
    double x = 1.0;
    for (int i = 0; i < dim; ++i, x *= ratio) v[i] = x;
    return v;
}

/// Spectrum (1, 2^-a, 3^-a, ...) of length dim.
inline Eigen::VectorXd spectrum_polynomial(double exponent, int dim) {
    if (dim < 1) throw std::invalid_argument("spectrum_polynomial: dim >= 1");
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = std::pow(static_cast<double>(i + 1), -exponent);
    return v;
}

/// Law of a centered random vector with covariance Sigma.
class VectorModel {
public:
    enum class Kind { gaussian, student_t, pareto_symmetric, kl };

    static VectorModel gaussian(SymMatrix sigma) {
        return VectorModel(Kind::gaussian, std::move(sigma), 0.0, std::nullopt);
    }
    /// Elliptical multivariate t with dof > 2, rescaled so E XX^T = Sigma.
    static VectorModel student_t(SymMatrix sigma, double dof) {
        if (!(dof > 2.0)) throw std::invalid_argument("student_t model requires dof > 2");
        return VectorModel(Kind::student_t, std::move(sigma), dof, std::nullopt);
    }
    /// i.i.d. unit-variance symmetric-Pareto coordinates mixed by Sigma^{1/2}.
    static VectorModel pareto_symmetric(SymMatrix sigma, double alpha) {
        if (!(alpha > 2.0)) throw std::invalid_argument("pareto model requires alpha > 2");
        return VectorModel(Kind::pareto_symmetric, std::move(sigma), alpha, std::nullopt);
    }
    /// Karhunen-Loeve model: X = sum_i sqrt(lambda_i) eta_i u_i with i.i.d.
    /// coefficients eta_i drawn from the given law.
    static VectorModel kl(SymMatrix sigma, ScalarLaw coefficient_law) {
        return VectorModel(Kind::kl, std::move(sigma), 0.0, coefficient_law);
    }

    Kind kind() const { return kind_; }
    int dim() const { return sigma_.dim(); }
    const SymMatrix& sigma() const { return sigma_; }
    const SymMatrix& sigma_root() const { return root_; }
    const Spectrum& sigma_spectrum() const { return spectrum_; }
    double sigma_norm() const { return spectrum_.eigenvalues[0]; }
    double sigma_trace() const { return sigma_.trace(); }
    double sigma_erank() const { return sigma_.trace() / spectrum_.eigenvalues[0]; }

    void sample(RandomStream& rs, Eigen::VectorXd& out) const {
        const int d = dim();
        Eigen::VectorXd coeffs(d);
        switch (kind_) {
            case Kind::gaussian:
                for (int i = 0; i < d; ++i) coeffs[i] = rs.normal();
                out.noalias() = root_.mat() * coeffs;
                return;
            case Kind::student_t: {
                for (int i = 0; i < d; ++i) coeffs[i] = rs.normal();
                const double v = rs.chi_squared(param_);
                out.noalias() = root_.mat() * coeffs;
                out *= std::sqrt((param_ - 2.0) / v);
                return;
            }
            case Kind::pareto_symmetric:
                for (int i = 0; i < d; ++i) coeffs[i] = rs.pareto_symmetric(param_);
                out.noalias() = root_.mat() * coeffs;
                return;
            case Kind::kl:
                for (int i = 0; i < d; ++i) {
                    // eigensolver round-off can leave tiny negatives
                    const double lam = std::max(0.0, spectrum_.eigenvalues[i]);
                    coeffs[i] = coef_law_->sample(rs) * std::sqrt(lam);
                }
                out.noalias() = spectrum_.eigenvectors * coeffs;
                return;
        }
    }

    Eigen::VectorXd sample(RandomStream& rs) const {
        Eigen::VectorXd out(dim());
        sample(rs, out);
        return out;
    }

    /// Analytic hypercontractivity ratio sup_v L_p/L_2 of <X,v>, available
    /// for the elliptical models (every direction has the same marginal law).
    /// Empty for the coordinate-mixture models; estimate it by Monte Carlo.
    std::optional<double> kappa_analytic(double p) const {
        switch (kind_) {
            case Kind::gaussian:
                return ScalarLaw::gaussian().kappa(p);
            case Kind::student_t:
                return ScalarLaw::student_t(param_).kappa(p);
            default:
                return std::nullopt;
        }
    }

private:
    VectorModel(Kind k, SymMatrix sigma, double param, std::optional<ScalarLaw> law)
        : kind_(k), sigma_(std::move(sigma)), param_(param), coef_law_(law),
          spectrum_(eig(sigma_)), root_(make_root(spectrum_)) {
        const double top = spectrum_.eigenvalues[0];
        if (top <= 0.0) throw std::invalid_argument("VectorModel: Sigma must be nonzero PSD");
        if (spectrum_.eigenvalues.minCoeff() < -1e-10 * top) {
            throw std::invalid_argument("VectorModel: Sigma must be positive semidefinite");
        }
    }

    static SymMatrix make_root(const Spectrum& s) {
        Eigen::VectorXd sq(s.dim());
        for (int i = 0; i < s.dim(); ++i) sq[i] = std::sqrt(std::max(0.0, s.eigenvalues[i]));
        Eigen::MatrixXd r = s.eigenvectors * sq.asDiagonal() * s.eigenvectors.transpose();
        r = 0.5 * (r + r.transpose()).eval();
        return SymMatrix(std::move(r));
    }

    Kind kind_;
    SymMatrix sigma_;
    double param_;
    std::optional<ScalarLaw> coef_law_;
    Spectrum spectrum_;
    SymMatrix root_;
};

/// i.i.d. samples from the model, one per column.
inline Eigen::MatrixXd sample_vectors(const VectorModel& model, int n, const SeedSpec& seed) {
    if (n < 1) throw std::invalid_argument("sample_vectors: n must be >= 1");
    RandomStream rs(seed);
    Eigen::MatrixXd x(model.dim(), n);
    Eigen::VectorXd col(model.dim());
    for (int j = 0; j < n; ++j) {
        model.sample(rs, col);
        x.col(j) = col;
    }
    return x;
}

/// Law of the independent matrix sequence (W_1, ..., W_n).
class Ensemble {
public:
    enum class Kind { sign_fixed, scalar_heavy, centered_rank_one, psd_rank_one };

    /// W_k = eps_k A_k with independent random signs.
    static Ensemble sign_fixed(std::vector<SymMatrix> a) {
        check_fixed(a);
        return Ensemble(Kind::sign_fixed, std::move(a), std::nullopt, std::nullopt, 0);
    }
    /// W_k = xi_k A_k with i.i.d. unit-variance scalars xi.
    static Ensemble scalar_heavy(std::vector<SymMatrix> a, ScalarLaw xi) {
        check_fixed(a);
        return Ensemble(Kind::scalar_heavy, std::move(a), xi, std::nullopt, 0);
    }
    /// W_k = X_k X_k^T - Sigma (centered).
    static Ensemble centered_rank_one(VectorModel model, int n) {
        if (n < 1) throw std::invalid_argument("Ensemble: n must be >= 1");
        return Ensemble(Kind::centered_rank_one, {}, std::nullopt, std::move(model), n);
    }
    /// W_k = X_k X_k^T (nonnegative definite).
    static Ensemble psd_rank_one(VectorModel model, int n) {
        if (n < 1) throw std::invalid_argument("Ensemble: n must be >= 1");
        return Ensemble(Kind::psd_rank_one, {}, std::nullopt, std::move(model), n);
    }

    Kind kind() const { return kind_; }
    int n() const { return n_; }
    int dim() const { return dim_; }

    const std::vector<SymMatrix>& fixed_matrices() const { return a_; }
    const std::vector<double>& fixed_norms() const { return a_norms_; }
    const VectorModel& model() const { return *model_; }
    const std::optional<ScalarLaw>& scalar_law() const { return xi_; }

    /// Column-stacked fixed matrices (d*d x n); column k is vec(A_k).
    const Eigen::MatrixXd& fixed_stack() const { return a_stack_; }

    /// Whether W_k and -W_k are equidistributed (Levy / Hoffmann-Jorgensen
    /// audits require this).
    bool symmetric_distribution() const {
        return kind_ == Kind::sign_fixed || kind_ == Kind::scalar_heavy;
    }

    /// sum_k E W_k^2 where it is available in closed form: both linear kinds
    /// have unit-variance coefficients, so it equals sum_k A_k^2.
    std::optional<SymMatrix> population_vn2() const {
        if (kind_ != Kind::sign_fixed && kind_ != Kind::scalar_heavy) return std::nullopt;
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim_, dim_);
        for (const auto& a : a_) v.noalias() += a.mat() * a.mat();
        v = 0.5 * (v + v.transpose()).eval();
        return SymMatrix(std::move(v));
    }

    /// sum_k E W_k for the PSD kind: n * Sigma.
    std::optional<SymMatrix> population_an() const {
        if (kind_ != Kind::psd_rank_one) return std::nullopt;
        return model_->sigma().scaled(static_cast<double>(n_));
    }

    /// One draw of (W_1, ..., W_n), materialized.
    std::vector<SymMatrix> draw(const SeedSpec& trial) const {
        RandomStream rs(trial);
        std::vector<SymMatrix> w;
        w.reserve(n_);
        switch (kind_) {
            case Kind::sign_fixed:
                for (int k = 0; k < n_; ++k) w.push_back(a_[k].scaled(rs.rademacher()));
                break;
            case Kind::scalar_heavy:
                for (int k = 0; k < n_; ++k) w.push_back(a_[k].scaled(xi_->sample(rs)));
                break;
            case Kind::centered_rank_one: {
                Eigen::VectorXd x(dim_);
                for (int k = 0; k < n_; ++k) {
                    model_->sample(rs, x);
                    Eigen::MatrixXd m = x * x.transpose() - model_->sigma().mat();
                    m = 0.5 * (m + m.transpose()).eval();
                    w.push_back(SymMatrix(std::move(m)));
                }
                break;
            }
            case Kind::psd_rank_one: {
                Eigen::VectorXd x(dim_);
                for (int k = 0; k < n_; ++k) {
                    model_->sample(rs, x);
                    Eigen::MatrixXd m = x * x.transpose();
                    m = 0.5 * (m + m.transpose()).eval();
                    w.push_back(SymMatrix(std::move(m)));
                }
                break;
            }
        }
        return w;
    }

private:
    Ensemble(Kind k, std::vector<SymMatrix> a, std::optional<ScalarLaw> xi,
             std::optional<VectorModel> model, int n)
        : kind_(k), a_(std::move(a)), xi_(xi), model_(std::move(model)) {
        if (kind_ == Kind::sign_fixed || kind_ == Kind::scalar_heavy) {
            n_ = static_cast<int>(a_.size());
            dim_ = a_.front().dim();
            a_norms_.reserve(a_.size());
            for (const auto& m : a_) a_norms_.push_back(op_norm(m));
            a_stack_.resize(static_cast<Eigen::Index>(dim_) * dim_, n_);
            for (int k = 0; k < n_; ++k) {
                a_stack_.col(k) =
                    Eigen::Map<const Eigen::VectorXd>(a_[k].mat().data(),
                                                      static_cast<Eigen::Index>(dim_) * dim_);
            }
        } else {
            n_ = n;
            dim_ = model_->dim();
        }
    }

    static void check_fixed(const std::vector<SymMatrix>& a) {
        if (a.empty()) throw std::invalid_argument("Ensemble: need at least one matrix");
        for (const auto& m : a) {
            if (m.dim() != a.front().dim()) {
                throw std::invalid_argument("Ensemble: mixed matrix dimensions");
            }
        }
    }

    Kind kind_;
    std::vector<SymMatrix> a_;
    std::optional<ScalarLaw> xi_;
    std::optional<VectorModel> model_;
    int n_ = 0;
    int dim_ = 0;
    std::vector<double> a_norms_;
    Eigen::MatrixXd a_stack_;
};

/// Random fixed symmetric matrices for SignFixed benchmarks: Gaussian
/// symmetric matrices rescaled to operator norms drawn uniformly from
/// [max_norm/2, max_norm].
inline std::vector<SymMatrix> random_sym_matrices(int n, int d, const SeedSpec& seed,
                                                  double max_norm = 1.0) {
    if (n < 1 || d < 1 || !(max_norm > 0.0)) {
        throw std::invalid_argument("random_sym_matrices: bad arguments");
    }
    RandomStream rs(seed);
    std::vector<SymMatrix> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        Eigen::MatrixXd g(d, d);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) g(i, j) = rs.normal();
        Eigen::MatrixXd s = 0.5 * (g + g.transpose());
        SymMatrix a(std::move(s));
        const double target = max_norm * rs.uniform(0.5, 1.0);
        out.push_back(a.scaled(target / op_norm(a)));
    }
    return out;
}

/// The U-truncation split of a realized sequence:
///   kept_k = eps_k W_k 1{||W_k|| <= U},  remainder_k = eps_k W_k 1{||W_k|| > U}.
/// kept + remainder = eps .* W, ||kept_k|| <= U, and each remainder is either
/// zero or has norm > U.
inline std::pair<std::vector<SymMatrix>, std::vector<SymMatrix>> truncate_split(
    const std::vector<SymMatrix>& w, double u_level, const std::vector<double>& signs) {
    if (u_level < 0.0) throw std::invalid_argument("truncate_split: U must be >= 0");
    if (signs.size() != w.size()) {
        throw std::invalid_argument("truncate_split: signs length mismatch");
    }
    std::vector<SymMatrix> kept, remainder;
    kept.reserve(w.size());
    remainder.reserve(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double norm = op_norm(w[k]);
        if (norm <= u_level) {
            kept.push_back(w[k].scaled(signs[k]));
            remainder.push_back(SymMatrix::zero(w[k].dim()));
        } else {
            kept.push_back(SymMatrix::zero(w[k].dim()));
            remainder.push_back(w[k].scaled(signs[k]));
        }
    }
    return {std::move(kept), std::move(remainder)};
}

}  // namespace matconc
