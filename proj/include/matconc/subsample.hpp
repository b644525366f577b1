#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "matconc/matcore.hpp"
#include "matconc/rng.hpp"
#include "matconc/sym_matrix.hpp"

namespace matconc::subsample {

struct SubsampleInput {
    RectMatrix B;
    double delta;
    SeedSpec seed;

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) {
            throw std::invalid_argument("SubsampleInput: delta must lie strictly in (0,1)");
        }
        if (B.cols() < 1 || B.rows() < 1) {
            throw std::invalid_argument("SubsampleInput: empty matrix");
        }
    }
};

/// i.i.d. Bernoulli(delta) column-keep mask.
inline std::vector<int> sample_mask(int d, double delta, const SeedSpec& seed) {
    if (d < 1) throw std::invalid_argument("sample_mask: d must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("sample_mask: delta must lie strictly in (0,1)");
    }
    RandomStream rs(seed);
    std::vector<int> mask(d);
    for (int i = 0; i < d; ++i) mask[i] = rs.bernoulli(delta) ? 1 : 0;
    return mask;
}

namespace detail {

/// ||sum_k w_k B_k B_k^T|| for nonnegative column weights, via the Gram matrix
/// of the weighted columns.
inline double weighted_gram_norm(const RectMatrix& b, const std::vector<double>& w) {
    std::vector<int> active;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] != 0.0) active.push_back(static_cast<int>(k));
    }
    if (active.empty()) return 0.0;
    Eigen::MatrixXd cols(b.rows(), active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
        cols.col(static_cast<Eigen::Index>(i)) = std::sqrt(w[active[i]]) * b.col(active[i]);
    }
    Eigen::MatrixXd gram = cols.transpose() * cols;
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("weighted_gram_norm: eigensolver failed");
    }
    return std::max(0.0, es.eigenvalues().maxCoeff());
}

}  // namespace detail

struct SubsampledNorms {
    double norm2;           // ||B R||^2 = ||sum_k delta_k B_k B_k^T||
    double centered_norm2;  // ||B R - delta B||^2 = ||sum_k (delta_k - delta)^2 B_k B_k^T||
};

/// Realized squared norms for one mask.
inline SubsampledNorms subsampled_norms(const SubsampleInput& in, const std::vector<int>& mask) {
    in.validate();
    if (static_cast<Eigen::Index>(mask.size()) != in.B.cols()) {
        throw std::invalid_argument("subsampled_norms: mask length must match columns");
    }
    std::vector<double> w_plain(mask.size()), w_centered(mask.size());
    for (std::size_t k = 0; k < mask.size(); ++k) {
        w_plain[k] = mask[k] ? 1.0 : 0.0;
        const double c = (mask[k] ? 1.0 : 0.0) - in.delta;
        w_centered[k] = c * c;
    }
    return {detail::weighted_gram_norm(in.B, w_plain),
            detail::weighted_gram_norm(in.B, w_centered)};
}

struct SubsampleMoments {
    double mean_norm2;           // E ||B R||^2
    double mean_centered_norm2;  // E ||B R - delta B||^2
};

/// Exact expectations by enumerating all 2^d masks (d <= 15).
inline SubsampleMoments exact_subsample_moments(const SubsampleInput& in) {
    in.validate();
    const int d = static_cast<int>(in.B.cols());
    if (d > 15) {
        throw std::invalid_argument("exact_subsample_moments: enumeration capped at 15 columns");
    }
    double e_plain = 0.0, e_centered = 0.0;
    std::vector<int> mask(d);
    for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
        int ones = 0;
        for (int k = 0; k < d; ++k) {
            mask[k] = (bits >> k) & 1u;
            ones += mask[k];
        }
        const double prob =
            std::pow(in.delta, ones) * std::pow(1.0 - in.delta, d - ones);
        const SubsampledNorms norms = subsampled_norms(in, mask);
        e_plain += prob * norms.norm2;
        e_centered += prob * norms.centered_norm2;
    }
    return {e_plain, e_centered};
}

struct SubsampleMcEstimate {
    double mean_norm2, se_norm2;
    double mean_centered_norm2, se_centered_norm2;
    double mean_max_column, se_max_column;  // E max_k delta_k ||B_k||^2
    long long trials;
};

/// Monte Carlo estimates of the subsampling moments, with standard errors.
inline SubsampleMcEstimate mc_subsample_moments(const SubsampleInput& in, long long trials) {
    in.validate();
    if (trials < 2) throw std::invalid_argument("mc_subsample_moments: trials must be >= 2");
    const int d = static_cast<int>(in.B.cols());
    std::vector<double> col_norm2(d);
    for (int k = 0; k < d; ++k) col_norm2[k] = in.B.col(k).squaredNorm();

    double s1 = 0, s1sq = 0, s2 = 0, s2sq = 0, s3 = 0, s3sq = 0;
    for (long long t = 0; t < trials; ++t) {
        const auto mask = sample_mask(d, in.delta, in.seed.with_stream(static_cast<std::uint64_t>(t)));
        const SubsampledNorms norms = subsampled_norms(in, mask);
        double max_col = 0.0;
        for (int k = 0; k < d; ++k) {
            if (mask[k]) max_col = std::max(max_col, col_norm2[k]);
        }
        s1 += norms.norm2;
        s1sq += norms.norm2 * norms.norm2;
        s2 += norms.centered_norm2;
        s2sq += norms.centered_norm2 * norms.centered_norm2;
        s3 += max_col;
        s3sq += max_col * max_col;
    }
    const double n = static_cast<double>(trials);
    auto se = [&](double sum, double sumsq) {
        const double mean = sum / n;
        const double var = std::max(0.0, sumsq / n - mean * mean);
        return std::sqrt(var / n);
    };
    return {s1 / n, se(s1, s1sq), s2 / n, se(s2, s2sq), s3 / n, se(s3, s3sq), trials};
}

struct ColumnOrderStats {
    std::vector<double> sorted_norm2;  // ||B_(k)||^2 descending
    int head_count;                    // floor(1/delta)
    double tail_average;               // (1/head_count) sum_{k <= head_count} ||B_(k)||^2
};

/// Column squared norms in decreasing order, and the average of the
/// floor(1/delta) largest (the Lemma-5.1 control of E max_k delta_k ||B_k||^2).
inline ColumnOrderStats column_order_stats(const RectMatrix& b, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("column_order_stats: delta must lie strictly in (0,1)");
    }
    std::vector<double> norms(static_cast<std::size_t>(b.cols()));
    for (Eigen::Index k = 0; k < b.cols(); ++k) norms[k] = b.col(k).squaredNorm();
    std::sort(norms.begin(), norms.end(), std::greater<double>());
    const int head = std::min<int>(static_cast<int>(std::floor(1.0 / delta)),
                                   static_cast<int>(norms.size()));
    double avg = 0.0;
    for (int k = 0; k < head; ++k) avg += norms[k];
    avg /= head;
    return {std::move(norms), head, avg};
}

enum class BoundVariant { plain, centered };

/// Corollary bound K (delta ||B||^2 + log(srank(B)) * tail_average); the
/// centered variant carries the extra (1 - delta) factor. For a rank-one B
/// the log factor is floored at zero and the bound degenerates to
/// K delta ||B||^2, which matches the exact behavior.
inline double subsample_bound(const SubsampleInput& in, double k_const, BoundVariant variant) {
    in.validate();
    if (!(k_const > 0.0)) throw std::invalid_argument("subsample_bound: K must be positive");
    const double norm2 = std::pow(op_norm(in.B), 2.0);
    if (norm2 == 0.0) throw std::invalid_argument("subsample_bound: zero matrix");
    const double log_srank = std::max(0.0, std::log(in.B.squaredNorm() / norm2));
    const double avg = column_order_stats(in.B, in.delta).tail_average;
    double value = k_const * (in.delta * norm2 + log_srank * avg);
    if (variant == BoundVariant::centered) value *= (1.0 - in.delta);
    return value;
}

}  // namespace matconc::subsample
