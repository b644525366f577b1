#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "matconc/matcore.hpp"
#include "matconc/samplers.hpp"

using namespace matconc;

TEST_CASE("random streams are reproducible and order independent") {
    RandomStream a(SeedSpec{42, 3});
    RandomStream b(SeedSpec{42, 3});
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RandomStream c(SeedSpec{42, 4});
    bool differs = false;
    RandomStream a2(SeedSpec{42, 3});
    for (int i = 0; i < 10; ++i) differs |= (a2.next_u64() != c.next_u64());
    REQUIRE(differs);
}

TEST_CASE("distinct streams pass a pairwise correlation sanity check") {
    const int trials = 20000;
    RandomStream s1(SeedSpec{99, 0});
    RandomStream s2(SeedSpec{99, 1});
    double sum1 = 0, sum2 = 0, sum11 = 0, sum22 = 0, sum12 = 0;
    for (int i = 0; i < trials; ++i) {
        const double x = s1.uniform01() - 0.5;
        const double y = s2.uniform01() - 0.5;
        sum1 += x;
        sum2 += y;
        sum11 += x * x;
        sum22 += y * y;
        sum12 += x * y;
    }
    const double n = trials;
    const double cov = sum12 / n - (sum1 / n) * (sum2 / n);
    const double rho = cov / std::sqrt((sum11 / n - sum1 * sum1 / (n * n)) *
                                       (sum22 / n - sum2 * sum2 / (n * n)));
    REQUIRE(std::abs(rho) < 4.0 / std::sqrt(n));
}

TEST_CASE("scalar laws are centered with unit variance") {
    const int n = 200000;
    std::vector<ScalarLaw> laws = {ScalarLaw::gaussian(), ScalarLaw::student_t(5.0),
                                   ScalarLaw::pareto_symmetric(6.0), ScalarLaw::rademacher()};
    for (std::size_t li = 0; li < laws.size(); ++li) {
        RandomStream rs(SeedSpec{1234, li});
        double sum = 0, sum2 = 0, sum4 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = laws[li].sample(rs);
            sum += x;
            sum2 += x * x;
            sum4 += x * x * x * x;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        // 3 standard errors via the empirical fourth moment
        const double se_mean = std::sqrt(var / n);
        const double se_var = std::sqrt((sum4 / n - var * var) / n);
        INFO("law " << li);
        REQUIRE(std::abs(mean) <= 3.0 * se_mean + 1e-12);
        REQUIRE(std::abs(var - 1.0) <= 3.0 * se_var + 1e-12);
    }
}

TEST_CASE("scalar law analytic absolute moments match Monte Carlo") {
    const int n = 400000;
    RandomStream rs(SeedSpec{77, 0});
    ScalarLaw t5 = ScalarLaw::student_t(5.0);
    double sum3 = 0;
    for (int i = 0; i < n; ++i) sum3 += std::pow(std::abs(t5.sample(rs)), 3.0);
    const double analytic = t5.abs_moment(3.0);
    REQUIRE(sum3 / n == Catch::Approx(analytic).epsilon(0.05));

    // nonexistent moments are infinite
    REQUIRE(std::isinf(t5.abs_moment(5.0)));
    REQUIRE(std::isinf(ScalarLaw::pareto_symmetric(4.0).abs_moment(4.0)));
    REQUIRE(ScalarLaw::rademacher().abs_moment(7.0) == 1.0);
}

TEST_CASE("build_covariance hits the prescribed effective rank") {
    Eigen::VectorXd flat = Eigen::VectorXd::Ones(4);
    const SymMatrix s1 = build_covariance(flat, SeedSpec{5, 0});
    REQUIRE(effective_rank(s1) == Catch::Approx(4.0).epsilon(1e-10));

    Eigen::VectorXd spec(3);
    spec << 2.0, 1.0, 1.0;
    const SymMatrix s2 = build_covariance(spec, SeedSpec{5, 1});
    REQUIRE(effective_rank(s2) == Catch::Approx(2.0).epsilon(1e-10));

    const Eigen::VectorXd geo = spectrum_geometric(0.5, 10);
    const SymMatrix s3 = build_covariance(geo, SeedSpec{5, 2});
    const double analytic = geo.sum() / geo.maxCoeff();
    REQUIRE(effective_rank(s3) == Catch::Approx(analytic).epsilon(1e-10));
    REQUIRE(analytic == Catch::Approx(2.0 * (1.0 - std::pow(2.0, -10.0))));

    REQUIRE_THROWS_AS(build_covariance(Eigen::VectorXd::Zero(3), SeedSpec{5, 3}),
                      std::invalid_argument);
    Eigen::VectorXd neg(2);
    neg << 1.0, -0.1;
    REQUIRE_THROWS_AS(build_covariance(neg, SeedSpec{5, 4}), std::invalid_argument);
}

TEST_CASE("sample_vectors: gaussian empirical covariance approaches Sigma") {
    const int n = 100000;
    const VectorModel model = VectorModel::gaussian(SymMatrix::identity(2));
    const Eigen::MatrixXd x = sample_vectors(model, n, SeedSpec{301, 0});
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == n);

    const Eigen::MatrixXd cov = x * x.transpose() / static_cast<double>(n);
    // diagonal entries: Var(x^2) = 2, off-diagonal: Var(xy) = 1
    REQUIRE(std::abs(cov(0, 0) - 1.0) <= 3.0 * std::sqrt(2.0 / n));
    REQUIRE(std::abs(cov(1, 1) - 1.0) <= 3.0 * std::sqrt(2.0 / n));
    REQUIRE(std::abs(cov(0, 1)) <= 3.0 * std::sqrt(1.0 / n));

    const Eigen::VectorXd mean = x.rowwise().mean();
    REQUIRE(mean.cwiseAbs().maxCoeff() <= 3.0 / std::sqrt(n));
}

TEST_CASE("sample_vectors: rescaled student-t has unit per-axis variance") {
    const int n = 100000;
    const VectorModel model = VectorModel::student_t(SymMatrix::identity(2), 5.0);
    const Eigen::MatrixXd x = sample_vectors(model, n, SeedSpec{302, 0});
    const double var0 = x.row(0).squaredNorm() / n;
    // Var(x^2) = E x^4 - 1 = 9 - 1 = 8 for normalized t(5)
    REQUIRE(std::abs(var0 - 1.0) <= 3.0 * std::sqrt(8.0 / n));
}

TEST_CASE("sample_vectors is deterministic under the seed") {
    const VectorModel model =
        VectorModel::pareto_symmetric(build_covariance(spectrum_geometric(0.7, 4), SeedSpec{9, 9}), 4.5);
    const Eigen::MatrixXd x1 = sample_vectors(model, 50, SeedSpec{303, 7});
    const Eigen::MatrixXd x2 = sample_vectors(model, 50, SeedSpec{303, 7});
    REQUIRE((x1 - x2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model constructors reject undefined covariances") {
    REQUIRE_THROWS_AS(VectorModel::student_t(SymMatrix::identity(2), 2.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(VectorModel::pareto_symmetric(SymMatrix::identity(2), 1.5),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(ScalarLaw::student_t(2.0), std::invalid_argument);
}

TEST_CASE("kl model matches the prescribed covariance") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.5, 3), SeedSpec{21, 0});
    const VectorModel model = VectorModel::kl(sigma, ScalarLaw::rademacher());
    const int n = 200000;
    const Eigen::MatrixXd x = sample_vectors(model, n, SeedSpec{304, 0});
    const Eigen::MatrixXd cov = x * x.transpose() / static_cast<double>(n);
    // bounded coefficients: entrywise error is O(1/sqrt(n)) with constants ~ ||Sigma||
    REQUIRE((cov - sigma.mat()).cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(n));
}

TEST_CASE("sign_fixed ensemble draws are sign flips of the fixed matrix") {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 0.5, 0.5, -2.0;
    const Ensemble e = Ensemble::sign_fixed({SymMatrix(a)});
    int plus = 0, minus = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto w = e.draw(SeedSpec{400, static_cast<std::uint64_t>(trial)});
        REQUIRE(w.size() == 1);
        const double diff_plus = (w[0].mat() - a).cwiseAbs().maxCoeff();
        const double diff_minus = (w[0].mat() + a).cwiseAbs().maxCoeff();
        if (diff_plus == 0.0) ++plus;
        if (diff_minus == 0.0) ++minus;
    }
    REQUIRE(plus + minus == 50);
    REQUIRE(plus > 0);
    REQUIRE(minus > 0);
}

TEST_CASE("centered rank-one draws average to zero") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.6, 3), SeedSpec{31, 0});
    const Ensemble e = Ensemble::centered_rank_one(VectorModel::gaussian(sigma), 2);
    const int trials = 20000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd meansq = Eigen::MatrixXd::Zero(3, 3);
    for (int trial = 0; trial < trials; ++trial) {
        const auto w = e.draw(SeedSpec{401, static_cast<std::uint64_t>(trial)});
        for (const auto& m : w) {
            mean += m.mat();
            meansq += m.mat().cwiseProduct(m.mat());
        }
    }
    const double count = 2.0 * trials;
    mean /= count;
    meansq /= count;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double se = std::sqrt((meansq(i, j) - mean(i, j) * mean(i, j)) / count);
            REQUIRE(std::abs(mean(i, j)) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("psd rank-one draws are nonnegative definite") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.5, 4), SeedSpec{33, 0});
    const Ensemble e = Ensemble::psd_rank_one(VectorModel::student_t(sigma, 5.0), 3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto w = e.draw(SeedSpec{402, static_cast<std::uint64_t>(trial)});
        for (const auto& m : w) {
            const Spectrum s = eig(m);
            REQUIRE(s.eigenvalues.minCoeff() >= -1e-10 * std::max(1.0, s.eigenvalues[0]));
        }
    }
}

TEST_CASE("population quantities of linear ensembles") {
    const auto mats = random_sym_matrices(5, 3, SeedSpec{55, 0});
    for (const auto& m : mats) REQUIRE(op_norm(m) <= 1.0 + 1e-12);

    const Ensemble e = Ensemble::sign_fixed(mats);
    const auto vn2 = e.population_vn2();
    REQUIRE(vn2.has_value());
    Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& m : mats) direct += m.mat() * m.mat();
    REQUIRE((vn2->mat() - direct).cwiseAbs().maxCoeff() <= 1e-12);

    // M = max_k ||A_k|| exactly for sign_fixed draws
    double max_fixed = 0.0;
    for (double v : e.fixed_norms()) max_fixed = std::max(max_fixed, v);
    const auto w = e.draw(SeedSpec{56, 0});
    double max_drawn = 0.0;
    for (const auto& m : w) max_drawn = std::max(max_drawn, op_norm(m));
    REQUIRE(max_drawn == Catch::Approx(max_fixed).epsilon(1e-12));
}

TEST_CASE("truncate_split obeys the defining identities") {
    Eigen::MatrixXd base(2, 2);
    base << 3.0, 0.0, 0.0, 1.0;  // norm 3
    const SymMatrix w(base);

    auto [kept1, rem1] = truncate_split({w}, 2.0, {1.0});
    REQUIRE(op_norm(kept1[0]) == 0.0);
    REQUIRE((rem1[0].mat() - base).cwiseAbs().maxCoeff() == 0.0);

    auto [kept2, rem2] = truncate_split({w.scaled(1.0 / 3.0)}, 2.0, {-1.0});
    REQUIRE((kept2[0].mat() + base / 3.0).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(op_norm(rem2[0]) == 0.0);

    auto [kept3, rem3] = truncate_split({w}, 0.0, {1.0});
    REQUIRE(op_norm(kept3[0]) == 0.0);
    REQUIRE(op_norm(rem3[0]) == Catch::Approx(3.0));

    // random reconstruction property
    const auto mats = random_sym_matrices(8, 3, SeedSpec{57, 0}, 2.0);
    const Ensemble e = Ensemble::scalar_heavy(mats, ScalarLaw::student_t(5.0));
    const auto draw = e.draw(SeedSpec{58, 0});
    RandomStream rs(SeedSpec{58, 1});
    std::vector<double> signs;
    for (std::size_t i = 0; i < draw.size(); ++i) signs.push_back(rs.rademacher());
    const double u_level = 1.0;
    auto [kept, rem] = truncate_split(draw, u_level, signs);
    for (std::size_t k = 0; k < draw.size(); ++k) {
        const Eigen::MatrixXd recon = kept[k].mat() + rem[k].mat();
        REQUIRE((recon - signs[k] * draw[k].mat()).cwiseAbs().maxCoeff() <= 1e-14);
        REQUIRE(op_norm(kept[k]) <= u_level + 1e-12);
        const double rnorm = op_norm(rem[k]);
        REQUIRE((rnorm == 0.0 || rnorm > u_level));
    }
}

TEST_CASE("psd rank-one population mean is n Sigma") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.6, 3), SeedSpec{35, 0});
    const int n = 4;
    const Ensemble e = Ensemble::psd_rank_one(VectorModel::gaussian(sigma), n);
    const auto an = e.population_an();
    REQUIRE(an.has_value());
    REQUIRE((an->mat() - n * sigma.mat()).cwiseAbs().maxCoeff() <= 1e-12);

    const int trials = 20000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
    for (int t = 0; t < trials; ++t) {
        const auto w = e.draw(SeedSpec{36, static_cast<std::uint64_t>(t)});
        for (const auto& m : w) mean += m.mat();
    }
    mean /= static_cast<double>(trials);
    // entrywise Monte Carlo envelope (gaussian fourth moments are mild here)
    REQUIRE((mean - an->mat()).cwiseAbs().maxCoeff() <= 0.15);
}

TEST_CASE("student-t scalar law has the closed-form L4/L2 ratio") {
    // E|T_5|^4 = 3 nu^2 / ((nu-2)(nu-4)) = 25; normalized fourth moment 9
    const ScalarLaw t5 = ScalarLaw::student_t(5.0);
    REQUIRE(t5.abs_moment(4.0) == Catch::Approx(9.0).epsilon(1e-10));
    REQUIRE(t5.kappa(4.0) == Catch::Approx(std::sqrt(3.0)).epsilon(1e-10));

    const VectorModel model = VectorModel::student_t(SymMatrix::identity(3), 5.0);
    REQUIRE(*model.kappa_analytic(4.0) == Catch::Approx(std::sqrt(3.0)).epsilon(1e-10));
}

TEST_CASE("chi-squared sampler mean matches its degrees of freedom") {
    RandomStream rs(SeedSpec{37, 0});
    const int n = 100000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = rs.chi_squared(5.0);
        REQUIRE(v > 0.0);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    REQUIRE(std::abs(mean - 5.0) <= 3.0 * se);
}

TEST_CASE("kl model with a rank-deficient covariance stays finite") {
    // one zero eigenvalue: samples must stay inside the top eigenspace
    Eigen::VectorXd lam(3);
    lam << 2.0, 1.0, 0.0;
    const SymMatrix sigma = build_covariance(lam, SeedSpec{38, 0});
    const VectorModel model = VectorModel::kl(sigma, ScalarLaw::gaussian());
    const Eigen::MatrixXd x = sample_vectors(model, 500, SeedSpec{38, 1});
    REQUIRE(x.allFinite());
    // projections onto the null eigenvector sit at eigensolver round-off
    // scale, far below the O(1) coordinates of the live directions
    const Eigen::VectorXd null_dir = eig(sigma).eigenvectors.col(2);
    REQUIRE((x.transpose() * null_dir).cwiseAbs().maxCoeff() <= 1e-6);
}
