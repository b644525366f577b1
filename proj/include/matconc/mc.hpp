#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "matconc/estimators.hpp"
#include "matconc/matcore.hpp"
#include "matconc/rng.hpp"
#include "matconc/samplers.hpp"

namespace matconc::mc {

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

/// Run fn(trial) for every trial index. Each worker gets its own callable
/// from make_worker(), so per-worker scratch is private. Trials must write
/// only to their own output slots; with that contract the results are
/// identical for any thread count.
template <typename MakeWorker>
void parallel_trials(long long trials, unsigned threads, MakeWorker&& make_worker) {
    if (trials <= 0) return;
    const unsigned nthreads =
        static_cast<unsigned>(std::min<long long>(resolve_threads(threads), trials));
    if (nthreads <= 1) {
        auto worker = make_worker();
        for (long long i = 0; i < trials; ++i) worker(i);
        return;
    }
    std::atomic<long long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    constexpr long long chunk = 32;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&]() {
            try {
                auto worker = make_worker();
                for (;;) {
                    const long long start = next.fetch_add(chunk);
                    if (start >= trials) break;
                    const long long end = std::min(start + chunk, trials);
                    for (long long i = start; i < end; ++i) worker(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Deterministic tree reduction; the result does not depend on how trials
/// were scheduled and drifts less than sequential accumulation.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("pairwise_mean: empty input");
    return pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

/// Type-1 (order statistic) quantile of a sorted ascending vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_sorted: q in [0,1]");
    const auto n = static_cast<double>(sorted.size());
    const auto idx =
        static_cast<std::size_t>(std::max<double>(1.0, std::ceil(q * n))) - 1;
    return sorted[std::min(idx, sorted.size() - 1)];
}

/// What to evaluate per trial. Requesting only what is needed keeps the
/// heavy paths (per-summand norms of rank-one ensembles) optional.
struct TrialRequest {
    double p = 1.0;                            // moment order for max_norm_p
    std::vector<double> u_levels;              // truncation split levels
    bool symmetrized_sum = false;              // ||sum eps_k W_k|| with fresh signs
    bool fresh_signs_for_split = true;         // eps inside the split (off: signs = +1)
    const DirectionSet* directions = nullptr;  // <S v, v> probes
};

/// Trial-indexed raw statistics of an ensemble.
struct EnsembleSamples {
    long long trials = 0;
    double p = 1.0;
    std::vector<double> u_levels;
    std::vector<double> sum_norm;                 // ||sum W_k||
    std::vector<double> max_norm;                 // M
    std::vector<double> max_norm_p;               // M^p
    std::vector<double> sym_sum_norm;             // if requested
    std::vector<std::vector<double>> delta_norm;  // [u][trial] ||sum of > U part||
    std::vector<std::vector<double>> kept_norm;   // [u][trial] ||sum of <= U part||
    Eigen::MatrixXd dir_quads;                    // (directions x trials)
};

namespace detail {

inline double sym_norm(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("sym_norm: eigensolver failed to converge");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Per-worker evaluator with reusable scratch buffers.
class TrialEvaluator {
public:
    TrialEvaluator(const Ensemble& e, const TrialRequest& req, const SeedSpec& run_seed,
                   EnsembleSamples& out)
        : e_(e), req_(req), run_seed_(run_seed), out_(out), d_(e.dim()) {
        const int n = e_.n();
        coeffs_.resize(n);
        signs_.resize(n);
        delta_coeffs_.resize(n);
        kept_coeffs_.resize(n);
        sum_.resize(d_, d_);
        work_.resize(d_, d_);
        x_.resize(d_);
        accum_.resize(req_.u_levels.size() * 2 + 1);
        for (auto& m : accum_) m.resize(d_, d_);
    }

    void operator()(long long trial) {
        const SeedSpec trial_seed = substream(run_seed_, static_cast<std::uint64_t>(trial));
        RandomStream draw_stream(substream(trial_seed, 0));
        RandomStream sign_stream(substream(trial_seed, 1));
        if (e_.kind() == Ensemble::Kind::sign_fixed ||
            e_.kind() == Ensemble::Kind::scalar_heavy) {
            run_linear(trial, draw_stream, sign_stream);
        } else {
            run_rank_one(trial, draw_stream, sign_stream);
        }
    }

private:
    void write_common(long long trial, double max_norm) {
        out_.max_norm[trial] = max_norm;
        out_.max_norm_p[trial] = std::pow(max_norm, req_.p);
    }

    void write_dir_quads(long long trial) {
        if (!req_.directions) return;
        for (int v = 0; v < req_.directions->size(); ++v) {
            const Eigen::VectorXd dir = req_.directions->direction(v);
            out_.dir_quads(v, trial) = dir.dot(sum_ * dir);
        }
    }

    void run_linear(long long trial, RandomStream& draw_stream, RandomStream& sign_stream) {
        const int n = e_.n();
        const std::size_t nu = req_.u_levels.size();
        const auto& norms = e_.fixed_norms();
        const bool sign_fixed = e_.kind() == Ensemble::Kind::sign_fixed;

        for (int k = 0; k < n; ++k) {
            coeffs_[k] = sign_fixed ? draw_stream.rademacher()
                                    : e_.scalar_law()->sample(draw_stream);
        }
        double max_norm = 0.0;
        for (int k = 0; k < n; ++k) {
            max_norm = std::max(max_norm, std::abs(coeffs_[k]) * norms[k]);
        }

        Eigen::Map<Eigen::VectorXd> sum_vec(sum_.data(), sum_.size());
        sum_vec.noalias() = e_.fixed_stack() * coeffs_;
        out_.sum_norm[trial] = sym_norm(sum_);
        write_dir_quads(trial);
        write_common(trial, max_norm);

        const bool need_signs =
            req_.symmetrized_sum || (nu > 0 && req_.fresh_signs_for_split);
        if (need_signs) {
            for (int k = 0; k < n; ++k) signs_[k] = sign_stream.rademacher();
        }

        if (req_.symmetrized_sum) {
            delta_coeffs_ = coeffs_.cwiseProduct(signs_);
            sum_vec.noalias() = e_.fixed_stack() * delta_coeffs_;
            out_.sym_sum_norm[trial] = sym_norm(sum_);
        }
        for (std::size_t u = 0; u < nu; ++u) {
            const double level = req_.u_levels[u];
            for (int k = 0; k < n; ++k) {
                const double wnorm = std::abs(coeffs_[k]) * norms[k];
                const double s = req_.fresh_signs_for_split ? signs_[k] : 1.0;
                delta_coeffs_[k] = (wnorm > level) ? s * coeffs_[k] : 0.0;
                kept_coeffs_[k] = (wnorm <= level) ? s * coeffs_[k] : 0.0;
            }
            sum_vec.noalias() = e_.fixed_stack() * delta_coeffs_;
            out_.delta_norm[u][trial] = sym_norm(sum_);
            sum_vec.noalias() = e_.fixed_stack() * kept_coeffs_;
            out_.kept_norm[u][trial] = sym_norm(sum_);
        }
    }

    void run_rank_one(long long trial, RandomStream& draw_stream, RandomStream& sign_stream) {
        const int n = e_.n();
        const std::size_t nu = req_.u_levels.size();
        const bool centered = e_.kind() == Ensemble::Kind::centered_rank_one;
        const Eigen::MatrixXd& sigma = e_.model().sigma().mat();
        const bool need_per_summand = req_.symmetrized_sum || nu > 0;

        sum_.setZero();
        for (auto& m : accum_) m.setZero();
        double max_norm = 0.0;

        for (int k = 0; k < n; ++k) {
            e_.model().sample(draw_stream, x_);
            sum_.noalias() += x_ * x_.transpose();
            double wnorm;
            if (centered) {
                work_.noalias() = x_ * x_.transpose();
                work_ -= sigma;
                wnorm = sym_norm(work_);
            } else {
                wnorm = x_.squaredNorm();
            }
            max_norm = std::max(max_norm, wnorm);
            if (need_per_summand) {
                if (!centered) work_.noalias() = x_ * x_.transpose();
                const double eps = sign_stream.rademacher();
                if (req_.symmetrized_sum) accum_[0].noalias() += eps * work_;
                const double split_sign = req_.fresh_signs_for_split ? eps : 1.0;
                for (std::size_t u = 0; u < nu; ++u) {
                    auto& target = (wnorm > req_.u_levels[u]) ? accum_[1 + 2 * u]
                                                              : accum_[2 + 2 * u];
                    target.noalias() += split_sign * work_;
                }
            }
        }
        if (centered) sum_ -= static_cast<double>(n) * sigma;
        out_.sum_norm[trial] = sym_norm(sum_);
        write_dir_quads(trial);
        write_common(trial, max_norm);
        if (req_.symmetrized_sum) out_.sym_sum_norm[trial] = sym_norm(accum_[0]);
        for (std::size_t u = 0; u < nu; ++u) {
            out_.delta_norm[u][trial] = sym_norm(accum_[1 + 2 * u]);
            out_.kept_norm[u][trial] = sym_norm(accum_[2 + 2 * u]);
        }
    }

    const Ensemble& e_;
    const TrialRequest& req_;
    SeedSpec run_seed_;
    EnsembleSamples& out_;
    int d_;
    Eigen::VectorXd coeffs_, signs_, delta_coeffs_, kept_coeffs_, x_;
    Eigen::MatrixXd sum_, work_;
    std::vector<Eigen::MatrixXd> accum_;
};

}  // namespace detail

/// Evaluate the requested statistics over all trials. Deterministic for a
/// given seed and independent of the thread count.
inline EnsembleSamples collect_samples(const Ensemble& e, const TrialRequest& req,
                                       long long trials, const SeedSpec& seed,
                                       unsigned threads = 0) {
    if (trials < 1) throw std::invalid_argument("collect_samples: trials must be >= 1");
    EnsembleSamples out;
    out.trials = trials;
    out.p = req.p;
    out.u_levels = req.u_levels;
    out.sum_norm.resize(trials);
    out.max_norm.resize(trials);
    out.max_norm_p.resize(trials);
    if (req.symmetrized_sum) out.sym_sum_norm.resize(trials);
    out.delta_norm.assign(req.u_levels.size(), std::vector<double>(trials));
    out.kept_norm.assign(req.u_levels.size(), std::vector<double>(trials));
    if (req.directions) out.dir_quads.resize(req.directions->size(), trials);

    parallel_trials(trials, threads, [&]() {
        return detail::TrialEvaluator(e, req, seed, out);
    });
    return out;
}

/// Empirical tail curve with binomial standard errors; theoretical bound
/// columns are attached by the caller.
struct TailCurve {
    std::vector<double> t_grid;
    std::vector<double> empirical;
    std::vector<double> std_err;
    std::vector<double> bound_raw;      // empty until attached
    std::vector<double> bound_clamped;  // empty until attached
    long long trials = 0;
};

/// Exceedance frequencies of precomputed values over a grid.
inline TailCurve tail_from_values(const std::vector<double>& values,
                                  const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("tail_from_values: empty grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) {
            throw std::invalid_argument("tail_from_values: grid must be strictly ascending");
        }
    }
    if (values.empty()) throw std::invalid_argument("tail_from_values: no values");
    TailCurve curve;
    curve.t_grid = t_grid;
    curve.trials = static_cast<long long>(values.size());
    const double n = static_cast<double>(values.size());
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    for (double t : t_grid) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
        const double phat = static_cast<double>(above) / n;
        curve.empirical.push_back(phat);
        curve.std_err.push_back(std::sqrt(phat * (1.0 - phat) / n));
    }
    return curve;
}

/// P(||sum_k W_k|| > t) over a grid.
inline TailCurve estimate_tail(const Ensemble& e, const std::vector<double>& t_grid,
                               long long trials, const SeedSpec& seed,
                               unsigned threads = 0) {
    if (trials < 100) throw std::invalid_argument("estimate_tail: trials must be >= 100");
    TrialRequest req;
    const EnsembleSamples samples = collect_samples(e, req, trials, seed, threads);
    return tail_from_values(samples.sum_norm, t_grid);
}

/// Plug-in estimate of (E ||sum W_k||^p)^{1/p} with a delta-method standard
/// error, plus the companion max statistics from the same trials.
struct MomentEstimate {
    double p = 1.0;
    double value = 0.0;
    double std_err = 0.0;
    long long trials = 0;
    double mean_max = 0.0;    // E M
    double mean_max_p = 0.0;  // E M^p
    double median_sum = 0.0;  // median of ||sum W_k||
};

inline MomentEstimate moment_from_samples(const EnsembleSamples& samples, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("moment_from_samples: p must be >= 1");
    const double n = static_cast<double>(samples.trials);
    std::vector<double> powers(samples.sum_norm.size());
    for (std::size_t i = 0; i < powers.size(); ++i) powers[i] = std::pow(samples.sum_norm[i], p);
    const double mean_pow = pairwise_mean(powers);
    double var = 0.0;
    for (double v : powers) var += (v - mean_pow) * (v - mean_pow);
    var /= n;
    const double se_mean = std::sqrt(var / n);
    const double value = std::pow(mean_pow, 1.0 / p);
    const double se = (mean_pow > 0.0)
                          ? value / (p * mean_pow) * se_mean
                          : 0.0;  // d/dm m^{1/p} = m^{1/p - 1} / p

    std::vector<double> sorted(samples.sum_norm);
    std::sort(sorted.begin(), sorted.end());

    MomentEstimate est;
    est.p = p;
    est.value = value;
    est.std_err = se;
    est.trials = samples.trials;
    est.mean_max = pairwise_mean(samples.max_norm);
    est.mean_max_p = pairwise_mean(samples.max_norm_p);
    est.median_sum = quantile_sorted(sorted, 0.5);
    return est;
}

inline MomentEstimate estimate_moment(const Ensemble& e, double p, long long trials,
                                      const SeedSpec& seed, unsigned threads = 0) {
    if (!(p >= 1.0)) throw std::invalid_argument("estimate_moment: p must be >= 1");
    TrialRequest req;
    req.p = p;
    const EnsembleSamples samples = collect_samples(e, req, trials, seed, threads);
    return moment_from_samples(samples, p);
}

/// Empirical psi_1 norm: the root of (1/n) sum exp(|x_i| / r) = 2, located by
/// bisection to 1e-9 relative tolerance. Returns 0 for all-zero data and
/// +infinity if no finite root exists on the search range.
inline double estimate_psi1(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("estimate_psi1: no samples");
    double max_abs = 0.0;
    for (double v : samples) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) return 0.0;

    const double n = static_cast<double>(samples.size());
    auto mean_exp = [&](double r) {
        double s = 0.0;
        for (double v : samples) {
            const double e = std::abs(v) / r;
            s += (e > 700.0) ? std::numeric_limits<double>::infinity() : std::exp(e);
            if (std::isinf(s)) return s;
        }
        return s / n;
    };

    double lo = max_abs / 1400.0;  // mean_exp(lo) certainly overflows past 2
    double hi = max_abs;
    while (mean_exp(hi) > 2.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mean_exp(mid) > 2.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if ((hi - lo) <= 1e-9 * hi) break;
    }
    return 0.5 * (lo + hi);
}

/// Empirical Q_p: twice the (1 - (1/8) 3^{-p}) order-statistic quantile of
/// ||sum_k Delta_k|| with the split taken at U. Demands enough trials to
/// resolve the quantile level.
inline double estimate_qp(const Ensemble& e, double u_level, double p, long long trials,
                          const SeedSpec& seed, unsigned threads = 0) {
    if (!(p >= 1.0)) throw std::invalid_argument("estimate_qp: p must be >= 1");
    if (u_level < 0.0) throw std::invalid_argument("estimate_qp: U must be >= 0");
    const double eps = (1.0 / 8.0) * std::pow(3.0, -p);
    const double required = 100.0 / eps;  // 100 * 8 * 3^p
    if (static_cast<double>(trials) < required) {
        throw std::invalid_argument(
            "estimate_qp: need at least " + std::to_string(static_cast<long long>(required)) +
            " trials to resolve the quantile at p = " + std::to_string(p));
    }
    TrialRequest req;
    req.p = p;
    req.u_levels = {u_level};
    const EnsembleSamples samples = collect_samples(e, req, trials, seed, threads);
    std::vector<double> sorted(samples.delta_norm[0]);
    std::sort(sorted.begin(), sorted.end());
    return 2.0 * quantile_sorted(sorted, 1.0 - eps);
}

/// Smallest constant making the bound dominate the empirical curve:
/// K* = max over grid points of empirical / bound_raw. An infinite K* (zero
/// bound against positive empirical mass) is reported, not thrown.
struct FitResult {
    double k_star = 0.0;
    std::size_t argmax_index = 0;
    double argmax_point = 0.0;
    std::vector<double> ratios;
};

inline FitResult fit_constant(const std::vector<double>& grid,
                              const std::vector<double>& empirical,
                              const std::vector<double>& bound_raw) {
    if (empirical.size() != bound_raw.size() || empirical.empty() ||
        grid.size() != empirical.size()) {
        throw std::invalid_argument("fit_constant: size mismatch");
    }
    FitResult fit;
    fit.ratios.reserve(empirical.size());
    for (std::size_t i = 0; i < empirical.size(); ++i) {
        double ratio = 0.0;
        if (empirical[i] > 0.0) {
            ratio = (bound_raw[i] > 0.0) ? empirical[i] / bound_raw[i]
                                         : std::numeric_limits<double>::infinity();
        }
        fit.ratios.push_back(ratio);
        if (ratio > fit.k_star) {
            fit.k_star = ratio;
            fit.argmax_index = i;
            fit.argmax_point = grid[i];
        }
    }
    return fit;
}

inline FitResult fit_constant(const TailCurve& curve) {
    return fit_constant(curve.t_grid, curve.empirical, curve.bound_raw);
}

/// Least-squares slope on the log-log scale with its standard error.
struct ScalingFit {
    double slope = 0.0;
    double slope_std_err = 0.0;
    double intercept = 0.0;
};

inline ScalingFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 4) {
        throw std::invalid_argument("fit_loglog: need at least 4 sweep points");
    }
    const std::size_t m = x.size();
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("fit_loglog: points must be positive");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = pairwise_mean(lx);
    const double my = pairwise_mean(ly);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_loglog: degenerate abscissae");
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        rss += r * r;
    }
    fit.slope_std_err = (m > 2) ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
    return fit;
}

/// One audited inequality: its name, verdict, and the worst margin observed
/// (positive margins mean the inequality held with room to spare).
struct AuditCheck {
    std::string name;
    bool pass = false;
    double worst_margin = 0.0;
    std::vector<std::string> notes;
};

struct AuditReport {
    std::vector<AuditCheck> checks;
    long long trials = 0;

    bool all_pass() const {
        for (const auto& c : checks) {
            if (!c.pass) return false;
        }
        return true;
    }
};

struct AuditOptions {
    double p = 2.0;           // moment order for the symmetrization check
    int n_directions = 16;    // probes for the directional median check
    unsigned threads = 0;
    double sigma2 = -1.0;     // population ||sum E W_k^2||; < 0 = derive/require
};

/// Monte Carlo audit of the structural inequalities: Hoffmann-Jorgensen and
/// Levy (symmetric ensembles), the symmetrization moment bound, and the
/// sqrt(2) sigma directional median bound. All comparisons carry a
/// 3-standard-error slack; exact probability claims are never asserted.
inline AuditReport inequality_audit(const Ensemble& e, long long trials, const SeedSpec& seed,
                                    const AuditOptions& opts = {}) {
    if (trials < 100) throw std::invalid_argument("inequality_audit: trials must be >= 100");
    if (!e.symmetric_distribution()) {
        throw std::invalid_argument(
            "inequality_audit: Hoffmann-Jorgensen and Levy checks require a symmetrically "
            "distributed ensemble");
    }

    double sigma2 = opts.sigma2;
    if (sigma2 < 0.0) {
        const auto vn2 = e.population_vn2();
        if (!vn2) {
            throw std::invalid_argument(
                "inequality_audit: supply sigma2 for ensembles without a closed-form V_n^2");
        }
        sigma2 = op_norm(*vn2);
    }

    DirectionSet dirs(e.dim(), opts.n_directions, substream(seed, 1));
    TrialRequest req;
    req.p = opts.p;
    req.symmetrized_sum = true;
    req.directions = &dirs;
    const EnsembleSamples samples = collect_samples(e, req, trials, substream(seed, 0),
                                                    opts.threads);
    const double n = static_cast<double>(trials);

    std::vector<double> sorted_sum(samples.sum_norm);
    std::sort(sorted_sum.begin(), sorted_sum.end());
    std::vector<double> sorted_max(samples.max_norm);
    std::sort(sorted_max.begin(), sorted_max.end());

    auto tail_prob = [&](const std::vector<double>& sorted, double t) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
        return static_cast<double>(above) / n;
    };
    auto se_of = [&](double phat) { return std::sqrt(phat * (1.0 - phat) / n); };

    AuditReport report;
    report.trials = trials;

    // Hoffmann-Jorgensen: P(||S|| > 2t + s) <= 4 P(||S|| > t)^2 + P(M > s)
    {
        AuditCheck check;
        check.name = "hoffmann_jorgensen";
        check.pass = true;
        check.worst_margin = std::numeric_limits<double>::infinity();
        for (double tq : {0.5, 0.7, 0.85}) {
            for (double sq : {0.5, 0.8}) {
                const double t = quantile_sorted(sorted_sum, tq);
                const double s = quantile_sorted(sorted_max, sq);
                const double lhs = tail_prob(sorted_sum, 2.0 * t + s);
                const double pt = tail_prob(sorted_sum, t);
                const double pm = tail_prob(sorted_max, s);
                const double rhs = 4.0 * pt * pt + pm;
                const double slack = 3.0 * std::sqrt(se_of(lhs) * se_of(lhs) +
                                                     std::pow(8.0 * pt * se_of(pt), 2) +
                                                     se_of(pm) * se_of(pm));
                const double margin = rhs + slack - lhs;
                check.worst_margin = std::min(check.worst_margin, margin);
                if (margin < 0.0) check.pass = false;
            }
        }
        report.checks.push_back(std::move(check));
    }

    // Levy: P(||S|| > t) >= (1/2) P(M > t)
    {
        AuditCheck check;
        check.name = "levy";
        check.pass = true;
        check.worst_margin = std::numeric_limits<double>::infinity();
        for (double tq : {0.25, 0.5, 0.75, 0.9}) {
            const double t = quantile_sorted(sorted_max, tq);
            const double ps = tail_prob(sorted_sum, t);
            const double pm = tail_prob(sorted_max, t);
            const double slack =
                3.0 * std::sqrt(se_of(ps) * se_of(ps) + 0.25 * se_of(pm) * se_of(pm));
            const double margin = ps + slack - 0.5 * pm;
            check.worst_margin = std::min(check.worst_margin, margin);
            if (margin < 0.0) check.pass = false;
        }
        report.checks.push_back(std::move(check));
    }

    // Symmetrization: E ||sum W_k||^p <= 2^p E ||sum eps_k W_k||^p
    {
        AuditCheck check;
        check.name = "symmetrization";
        const double p = opts.p;
        std::vector<double> plain(samples.sum_norm.size()), symm(samples.sum_norm.size());
        for (std::size_t i = 0; i < plain.size(); ++i) {
            plain[i] = std::pow(samples.sum_norm[i], p);
            symm[i] = std::pow(samples.sym_sum_norm[i], p);
        }
        const double lhs = pairwise_mean(plain);
        const double rhs = std::pow(2.0, p) * pairwise_mean(symm);
        double var_l = 0.0, var_r = 0.0;
        for (std::size_t i = 0; i < plain.size(); ++i) {
            var_l += (plain[i] - lhs) * (plain[i] - lhs);
            var_r += (symm[i] - rhs / std::pow(2.0, p)) * (symm[i] - rhs / std::pow(2.0, p));
        }
        const double se_l = std::sqrt(var_l / n / n);
        const double se_r = std::pow(2.0, p) * std::sqrt(var_r / n / n);
        const double slack = 3.0 * std::sqrt(se_l * se_l + se_r * se_r);
        check.worst_margin = rhs + slack - lhs;
        check.pass = check.worst_margin >= 0.0;
        report.checks.push_back(std::move(check));
    }

    // Directional median: sup_v median <S v, v> <= sigma sqrt(2), audited as
    // P(<S v, v> > sigma sqrt(2)) <= 1/2 per probe direction.
    {
        AuditCheck check;
        check.name = "median_sigma_sqrt2";
        check.pass = true;
        check.worst_margin = std::numeric_limits<double>::infinity();
        const double level = std::sqrt(2.0 * sigma2);
        for (int v = 0; v < dirs.size(); ++v) {
            long long above = 0;
            for (long long i = 0; i < trials; ++i) {
                if (samples.dir_quads(v, i) > level) ++above;
            }
            const double phat = static_cast<double>(above) / n;
            const double margin = 0.5 + 3.0 * se_of(phat) - phat;
            check.worst_margin = std::min(check.worst_margin, margin);
            if (margin < 0.0) check.pass = false;
        }
        report.checks.push_back(std::move(check));
    }

    return report;
}

}  // namespace matconc::mc
