#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace matconc::bounds {

/// A tail bound value before and after clamping to [0,1]. Fitted-constant
/// audits consume raw; plots and probability comparisons consume clamped.
struct TailValue {
    double raw;
    double clamped;
};

inline TailValue make_tail(double raw) { return {raw, std::min(1.0, raw)}; }

/// Scalar inputs shared by the matrix-sum bound evaluators. Absolute
/// constants proved to exist but left unspecified enter through K (default 1);
/// published constants are hard-coded in the evaluators.
struct BoundInput {
    double sigma2 = 0.0;    // ||V_n^2|| for the untruncated second moment
    double sigma_u2 = 0.0;  // ||V_n^2|| for the U-truncated second moment
    double U = 0.0;         // truncation level
    double erank = 1.0;     // r(V_n^2), or r(A_n) for the PSD corollary
    double p = 1.0;         // moment order
    double EM = 0.0;        // E max_k ||W_k||
    double EMp = 0.0;       // E max_k ||W_k||^p
    double psi1M = 0.0;     // || max_k ||W_k|| ||_{psi_1}
    double anorm = 0.0;     // ||A_n|| = ||sum_k E W_k|| (PSD corollary)
    double K = 1.0;

    void validate() const {
        auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
        if (bad(sigma2) || bad(sigma_u2) || bad(U) || bad(EM) || bad(EMp) ||
            bad(psi1M) || bad(anorm)) {
            throw std::invalid_argument("BoundInput: fields must be finite and nonnegative");
        }
        if (!(p >= 1.0)) throw std::invalid_argument("BoundInput: p must be >= 1");
        if (!(erank >= 1.0)) throw std::invalid_argument("BoundInput: erank must be >= 1");
        if (!(K > 0.0) || !std::isfinite(K)) {
            throw std::invalid_argument("BoundInput: K must be positive");
        }
    }
};

/// Inputs for the empirical-process bounds.
struct EmpProcInput {
    double EZ = 0.0;          // E sup_f sum_k f(X_k)
    double sigma_star = 0.0;  // sigma_* with sigma_*^2 >= n sup_f E f^2(X)
    long long n = 1;
    double U = 0.0;
    double EM = 0.0;
    double EMp = 0.0;
    double p = 1.0;
    double K = 1.0;

    void validate() const {
        auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
        if (!std::isfinite(EZ) || bad(sigma_star) || bad(U) || bad(EM) || bad(EMp)) {
            throw std::invalid_argument("EmpProcInput: fields must be finite");
        }
        if (n < 1) throw std::invalid_argument("EmpProcInput: n must be positive");
        if (!(p >= 1.0)) throw std::invalid_argument("EmpProcInput: p must be >= 1");
        if (!(K > 0.0) || !std::isfinite(K)) {
            throw std::invalid_argument("EmpProcInput: K must be positive");
        }
    }
};

namespace detail {

/// p / log(ep) with natural log; equals 1 at p = 1.
inline double p_over_log_ep(double p) { return p / (1.0 + std::log(p)); }

inline void require_prob(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    }
}

}  // namespace detail

/// Matrix Bernstein tail with effective rank, for bounded summands:
///   P(||sum W_k|| > t) <= 4 r(V^2) exp[-(t^2/2) / (sigma^2 + tU/3)],
/// valid for t >= sigma + U/3. The published constant 4 is hard-coded; K
/// multiplies the whole expression.
inline TailValue bernstein_tail(const BoundInput& in, double t) {
    in.validate();
    const double sigma = std::sqrt(in.sigma2);
    if (t < sigma + in.U / 3.0) {
        throw std::domain_error("bernstein_tail: requires t >= sigma + U/3");
    }
    const double raw =
        in.K * 4.0 * in.erank * std::exp(-(t * t / 2.0) / (in.sigma2 + t * in.U / 3.0));
    return make_tail(raw);
}

/// Moment corollary of matrix Bernstein: K (sigma sqrt(q) + U q) with
/// q = log(e r(V^2)) v p.
inline double bernstein_moment(const BoundInput& in) {
    in.validate();
    const double q = std::max(1.0 + std::log(in.erank), in.p);
    return in.K * (std::sqrt(in.sigma2 * q) + in.U * q);
}

/// Right-hand side of the symmetrized truncation proposition. The component
/// tail probabilities are supplied by the caller (typically Monte Carlo
/// estimates):
///   p_delta = P(||sum eps_k W_k 1{||W_k|| > U}|| > t/2)
///   p_sum   = P(||sum eps_k W_k|| > t)
///   p_max   = P(M > t)
/// General case (LHS at 12t):    64 r exp[...] + 16 p_delta p_sum + 4 p_max.
/// Symmetric case (LHS at 3t):   16 r exp[...] +  4 p_delta p_sum +   p_max.
/// Valid for t/2 >= sigma_U v U/3; the general case additionally needs
/// t/2 >= sqrt(2) sigma to certify the directional-median condition.
inline TailValue prop_fuk_nagaev_rhs(const BoundInput& in, double t, double p_delta,
                                     double p_sum, double p_max, bool symmetric) {
    in.validate();
    detail::require_prob(p_delta, "p_delta");
    detail::require_prob(p_sum, "p_sum");
    detail::require_prob(p_max, "p_max");
    const double sigma_u = std::sqrt(in.sigma_u2);
    double threshold = std::max(sigma_u, in.U / 3.0);
    if (!symmetric) {
        threshold = std::max(threshold, std::sqrt(2.0 * in.sigma2));
    }
    if (t / 2.0 < threshold) {
        throw std::domain_error("prop_fuk_nagaev_rhs: t/2 below validity threshold");
    }
    const double expo = std::exp(-(t / 2.0) * (t / 2.0) / (in.sigma_u2 + t * in.U / 6.0));
    const double raw = symmetric
        ? in.K * (16.0 * in.erank * expo + 4.0 * p_delta * p_sum + p_max)
        : in.K * (64.0 * in.erank * expo + 16.0 * p_delta * p_sum + 4.0 * p_max);
    return make_tail(raw);
}

/// Fuk-Nagaev tail for heavy-tailed matrix sums (LHS at 12t):
///   K ( r exp[-(t/2)^2 / (sigma^2 + 4 t EM)] + p_max
///       + ((p/log(ep))^p EM^p / t^p)^2 ),
/// valid for t >= 2 (sigma v EM/3).
inline TailValue fuk_nagaev_tail(const BoundInput& in, double t, double p_max) {
    in.validate();
    detail::require_prob(p_max, "p_max");
    const double sigma = std::sqrt(in.sigma2);
    if (t < 2.0 * std::max(sigma, in.EM / 3.0)) {
        throw std::domain_error("fuk_nagaev_tail: requires t >= 2 (sigma v EM/3)");
    }
    const double expo = std::exp(-(t / 2.0) * (t / 2.0) / (in.sigma2 + 4.0 * t * in.EM));
    const double poly =
        std::pow(detail::p_over_log_ep(in.p), in.p) * in.EMp / std::pow(t, in.p);
    const double raw = in.K * (in.erank * expo + p_max + poly * poly);
    return make_tail(raw);
}

/// Rosenthal-type moment bound:
///   K ( sigma sqrt(q) + q EM + (p/log(ep)) (EM^p)^{1/p} ),  q = log r(V^2) v p.
inline double rosenthal_moment(const BoundInput& in) {
    in.validate();
    const double q = std::max(std::log(in.erank), in.p);
    return in.K * (std::sqrt(in.sigma2 * q) + q * in.EM +
                   detail::p_over_log_ep(in.p) * std::pow(in.EMp, 1.0 / in.p));
}

/// psi_1 variant: K ( sigma sqrt(q) + log(r(V^2)) EM + p ||M||_{psi_1} ).
inline double rosenthal_psi1(const BoundInput& in) {
    in.validate();
    const double q = std::max(std::log(in.erank), in.p);
    return in.K * (std::sqrt(in.sigma2 * q) + std::log(in.erank) * in.EM + in.p * in.psi1M);
}

enum class RosenthalVariant { moment, psi1 };

/// Corollary for sums of independent PSD matrices, with A_n = sum_k E W_k,
/// erank = r(A_n) and q = log r(A_n) v p:
///   moment: K ( ||A_n|| + q EM + (p/log(ep)) (EM^p)^{1/p} )
///   psi1:   K ( ||A_n|| + log(r(A_n)) EM + p ||M||_{psi_1} )
inline double rosenthal_psd(const BoundInput& in, RosenthalVariant variant) {
    in.validate();
    const double q = std::max(std::log(in.erank), in.p);
    if (variant == RosenthalVariant::moment) {
        return in.K * (in.anorm + q * in.EM +
                       detail::p_over_log_ep(in.p) * std::pow(in.EMp, 1.0 / in.p));
    }
    return in.K * (in.anorm + std::log(in.erank) * in.EM + in.p * in.psi1M);
}

/// Empirical-process tail (heavy-tailed extension of Adamczak's bound). The
/// returned value bounds P(Z > 24 (EZ + t)); lhs_threshold reports that level.
struct EmpProcTail {
    double raw;
    double clamped;
    double lhs_threshold;  // 24 (EZ + t)
};

/// K ( exp(-t^2 / (2 sigma_*^2 + 64 t EM)) + p_max
///     + (p/log(ep))^{2p} (EM^p / t^p)^2 ), valid for t >= sqrt(2) sigma_*.
inline EmpProcTail empproc_tail(const EmpProcInput& in, double t, double p_max) {
    in.validate();
    detail::require_prob(p_max, "p_max");
    if (t < std::sqrt(2.0) * in.sigma_star) {
        throw std::domain_error("empproc_tail: requires t >= sqrt(2) sigma_*");
    }
    const double expo =
        std::exp(-t * t / (2.0 * in.sigma_star * in.sigma_star + 64.0 * t * in.EM));
    const double ratio = in.EMp / std::pow(t, in.p);
    const double poly = std::pow(detail::p_over_log_ep(in.p), 2.0 * in.p) * ratio * ratio;
    const double raw = in.K * (expo + p_max + poly);
    return {raw, std::min(1.0, raw), 24.0 * (in.EZ + t)};
}

/// Moment inequality for empirical processes:
///   K ( EZ + sigma_* sqrt(p) + p EM + (p/log(ep)) (EM^p)^{1/p} ).
inline double empproc_moment(const EmpProcInput& in) {
    in.validate();
    return in.K * (in.EZ + in.sigma_star * std::sqrt(in.p) + in.p * in.EM +
                   detail::p_over_log_ep(in.p) * std::pow(in.EMp, 1.0 / in.p));
}

struct BousquetLevel {
    double threshold;             // EZ + sqrt(2 t v) + t U / 3, with v = sigma_*^2 + 2 EZ
    double prob;                  // e^{-t}
    double simplified_threshold;  // 2 EZ + sigma_* sqrt(2t) + 4 t U / 3
};

/// Bousquet's concentration level: P(Z >= threshold) <= prob for all t >= 0.
inline BousquetLevel bousquet_threshold(const EmpProcInput& in, double t) {
    in.validate();
    if (t < 0.0) throw std::domain_error("bousquet_threshold: t must be >= 0");
    const double v = in.sigma_star * in.sigma_star + 2.0 * in.EZ;
    const double threshold = in.EZ + std::sqrt(2.0 * t * v) + t * in.U / 3.0;
    const double simplified =
        2.0 * in.EZ + in.sigma_star * std::sqrt(2.0 * t) + 4.0 * t * in.U / 3.0;
    return {threshold, std::exp(-t), simplified};
}

}  // namespace matconc::bounds
