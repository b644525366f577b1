#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "matconc/estimators.hpp"
#include "matconc/samplers.hpp"

using namespace matconc;

TEST_CASE("psi and rho pointwise values") {
    CHECK(psi_trunc(0.5) == 0.5);
    CHECK(psi_trunc(-3.0) == -1.0);
    CHECK(psi_trunc(1.0) == 1.0);
    CHECK(psi_trunc(-1.0) == -1.0);

    CHECK(rho_trunc(0.25) == 0.0);
    CHECK(rho_trunc(0.75) == 0.5);
    CHECK(rho_trunc(2.0) == 1.0);
    CHECK(rho_trunc(0.5) == 0.0);
    CHECK(rho_trunc(1.0) == 1.0);
}

TEST_CASE("rho is sandwiched between the half and unit indicators") {
    for (double x = -2.0; x <= 3.0; x += 0.001) {
        const double upper = (x >= 0.5) ? 1.0 : 0.0;
        const double lower = (x >= 1.0) ? 1.0 : 0.0;
        REQUIRE(rho_trunc(x) <= upper + 1e-15);
        REQUIRE(rho_trunc(x) >= lower - 1e-15);
    }
}

TEST_CASE("psi is 1-Lipschitz and rho is 2-Lipschitz") {
    const double h = 1e-6;
    for (double x = -2.0; x <= 2.0; x += 0.01) {
        REQUIRE(std::abs(psi_trunc(x + h) - psi_trunc(x)) <= 1.0 * h + 1e-15);
        REQUIRE(std::abs(rho_trunc(x + h) - rho_trunc(x)) <= 2.0 * h + 1e-15);
    }
}

TEST_CASE("truncation_lambda hand values") {
    CHECK(truncation_lambda(1.0, 2.0, 4.0, 100) == Catch::Approx(0.1));
    CHECK(truncation_lambda(2.0, 1.0, 1.0, 1) == Catch::Approx(0.25));
    // r = n collapses the square root
    CHECK(truncation_lambda(3.0, 2.0, 50.0, 50) == Catch::Approx(1.0 / (9.0 * 2.0)));
    REQUIRE_THROWS_AS(truncation_lambda(0.0, 1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("sample_covariance basics") {
    Eigen::MatrixXd single(2, 1);
    single << 1.0, 2.0;
    const SymMatrix c1 = sample_covariance(single);
    REQUIRE((c1.mat() - single * single.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(2, 2);
    const SymMatrix c2 = sample_covariance(basis);
    CHECK(c2(0, 0) == Catch::Approx(0.5));
    CHECK(c2(1, 1) == Catch::Approx(0.5));
    CHECK(c2(0, 1) == 0.0);

    const SymMatrix c3 = sample_covariance(Eigen::MatrixXd::Zero(3, 4));
    REQUIRE(op_norm(c3) == 0.0);

    REQUIRE_THROWS_AS(sample_covariance(Eigen::MatrixXd(2, 0)), std::invalid_argument);
}

TEST_CASE("truncated_covariance basics") {
    Eigen::MatrixXd x(2, 2);
    x << 1.0, 3.0, 0.0, 0.0;  // norms 1 and 3

    // high tau keeps everything and reproduces the sample covariance exactly
    const SymMatrix full = truncated_covariance(x, 3.0);
    REQUIRE((full.mat() - sample_covariance(x).mat()).cwiseAbs().maxCoeff() == 0.0);

    // dropping the large sample keeps half of the small Gram term
    const SymMatrix half = truncated_covariance(x, 2.0);
    CHECK(half(0, 0) == Catch::Approx(0.5));
    CHECK(half(1, 1) == 0.0);

    const SymMatrix none = truncated_covariance(x, 0.0);
    REQUIRE(op_norm(none) == 0.0);
}

TEST_CASE("truncated_covariance at tau = infinity is the sample covariance") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.7, 5), SeedSpec{61, 0});
    const Eigen::MatrixXd x =
        sample_vectors(VectorModel::student_t(sigma, 5.0), 200, SeedSpec{61, 1});
    const SymMatrix a = truncated_covariance(x, std::numeric_limits<double>::infinity());
    const SymMatrix b = sample_covariance(x);
    REQUIRE((a.mat() - b.mat()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spread_peaky_eval single-sample cases") {
    // single sample with lambda <X,v>^2 = 4
    Eigen::MatrixXd x(2, 1);
    x << 2.0, 0.0;
    TruncationParams params{1.0, 1.0, 0.0};
    DirectionSet dirs(2, 0, SeedSpec{62, 0});
    Eigen::VectorXd e1(2);
    e1 << 1.0, 0.0;
    dirs.add_direction(e1);

    const auto recs = spread_peaky_eval(x, params, dirs, SymMatrix::identity(2));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].peaky == Catch::Approx(4.0));
    CHECK(recs[0].peaky_count == 1);
    // psi saturates at 1, so the truncated average is 1/lambda = 1 and the
    // population form is 1: spread vanishes
    CHECK(recs[0].spread == Catch::Approx(0.0).margin(1e-15));
    CHECK(recs[0].quad_error == Catch::Approx(3.0));
    CHECK(recs[0].quad_error <= recs[0].peaky + recs[0].spread + 1e-12);
}

TEST_CASE("spread_peaky_eval small-sample regime keeps psi linear") {
    Eigen::MatrixXd x(2, 2);
    x << 0.5, -0.25, 0.0, 0.1;
    TruncationParams params{1.0, 1.0, 0.0};
    DirectionSet dirs(2, 8, SeedSpec{63, 0});
    const auto recs = spread_peaky_eval(x, params, dirs, SymMatrix::identity(2));
    for (const auto& r : recs) {
        CHECK(r.peaky == 0.0);
        CHECK(r.peaky_count == 0);
        // psi acting as identity makes spread equal the raw quadratic error
        CHECK(r.spread == Catch::Approx(r.quad_error).margin(1e-14));
    }
}

TEST_CASE("spread_peaky_eval zero data reports the population form") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 5);
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.5, 3), SeedSpec{64, 0});
    TruncationParams params{0.7, 1.0, 0.0};
    DirectionSet dirs(3, 6, SeedSpec{64, 1});
    const auto recs = spread_peaky_eval(x, params, dirs, sigma);
    for (int i = 0; i < dirs.size(); ++i) {
        const Eigen::VectorXd v = dirs.direction(i);
        CHECK(recs[i].peaky == 0.0);
        CHECK(recs[i].spread == Catch::Approx(v.dot(sigma.mat() * v)));
    }
}

TEST_CASE("peaky/spread decomposition inequality on heavy-tailed data") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.6, 4), SeedSpec{65, 0});
    const VectorModel model = VectorModel::pareto_symmetric(sigma, 4.0);
    const Eigen::MatrixXd x = sample_vectors(model, 300, SeedSpec{65, 1});

    const double lambda = truncation_lambda(1.5, op_norm(sigma), effective_rank(sigma), 300);
    TruncationParams params{lambda, 1.5, 0.0};
    const DirectionSet dirs =
        DirectionSet::probe(eig(sigma), eig(sample_covariance(x)), SeedSpec{65, 2}, 64);

    const auto recs = spread_peaky_eval(x, params, dirs, sigma);
    for (const auto& r : recs) {
        REQUIRE(r.quad_error <= r.peaky + r.spread + 1e-10);
        REQUIRE(r.peaky_count <= x.cols());
        if (r.peaky_count > 0) {
            // each counted term exceeds 1/lambda
            REQUIRE(params.lambda * r.peaky >=
                    static_cast<double>(r.peaky_count) / x.cols() - 1e-12);
        }
    }
}

TEST_CASE("sparse_sup_f hand cases") {
    Eigen::MatrixXd twin(2, 2);
    twin << 1.0, 1.0, 0.0, 0.0;  // X1 = X2 = e1
    CHECK(sparse_sup_f(twin, 2) == Catch::Approx(2.0));

    Eigen::MatrixXd two(2, 2);
    two << 2.0, 0.0, 0.0, 3.0;  // norms 2 and 3
    CHECK(sparse_sup_f(two, 1) == Catch::Approx(9.0));

    const Eigen::MatrixXd ortho = Eigen::MatrixXd::Identity(4, 4);
    CHECK(sparse_sup_f(ortho, 4) == Catch::Approx(1.0));

    Eigen::MatrixXd big(2, 21);
    big.setOnes();
    REQUIRE_THROWS_AS(sparse_sup_f(big, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(sparse_sup_f(two, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(sparse_sup_f(two, 3), std::invalid_argument);
}

TEST_CASE("sparse_sup_f is nondecreasing in k and exact at k = n") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.8, 3), SeedSpec{66, 0});
    const Eigen::MatrixXd x =
        sample_vectors(VectorModel::gaussian(sigma), 8, SeedSpec{66, 1});
    double prev = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const double f = sparse_sup_f(x, k);
        REQUIRE(f >= prev - 1e-12);
        prev = f;
    }
    // f(n,[n]) equals ||sum_j X_j X_j^T||
    const double full = op_norm(SymMatrix(Eigen::MatrixXd(x * x.transpose())));
    REQUIRE(sparse_sup_f(x, 8) == Catch::Approx(full).epsilon(1e-10));
}

TEST_CASE("estimate_kappa approaches the analytic gaussian ratio") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.5, 3), SeedSpec{67, 0});
    const VectorModel model = VectorModel::gaussian(sigma);
    const Eigen::MatrixXd x = sample_vectors(model, 20000, SeedSpec{67, 1});
    DirectionSet dirs(3, 32, SeedSpec{67, 2});
    const double est = estimate_kappa(x, dirs, 4.0);
    const double analytic = *model.kappa_analytic(4.0);  // 3^{1/4}
    REQUIRE(analytic == Catch::Approx(std::pow(3.0, 0.25)));
    REQUIRE(est == Catch::Approx(analytic).margin(0.12));
}

TEST_CASE("aligned_eigvec identical matrices give zero error") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.5, 4), SeedSpec{68, 0});
    const auto rec = aligned_eigvec(sigma, sigma, 1);
    CHECK(rec.projector_dist == Catch::Approx(0.0).margin(1e-12));
    CHECK(rec.vector_dist == Catch::Approx(0.0).margin(1e-12));
    CHECK(rec.certificate == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("aligned_eigvec detects swapped eigenvectors") {
    const SymMatrix sigma = SymMatrix::diagonal(Eigen::Vector2d(4.0, 1.0));
    const SymMatrix swapped = SymMatrix::diagonal(Eigen::Vector2d(1.0, 4.0));
    const auto rec = aligned_eigvec(swapped, sigma, 0);
    REQUIRE(rec.projector_dist == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("aligned_eigvec tiny perturbation scales linearly and is certified") {
    const SymMatrix sigma = SymMatrix::diagonal(Eigen::Vector3d(4.0, 2.0, 1.0));
    const double eps = 1e-6;
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 3);
    e(0, 1) = e(1, 0) = 1.0;
    e(2, 2) = 0.5;
    const SymMatrix perturbed(Eigen::MatrixXd(sigma.mat() + eps * e));
    const auto rec = aligned_eigvec(perturbed, sigma, 0);
    REQUIRE(rec.projector_dist > 0.0);
    REQUIRE(rec.projector_dist < 10.0 * eps);
    REQUIRE(rec.vector_dist <= rec.projector_dist + 1e-15);
    REQUIRE(rec.projector_dist <= rec.certificate + 1e-15);
}

TEST_CASE("davis-kahan chain holds on random perturbation pairs") {
    RandomStream rs(SeedSpec{69, 0});
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 3 + static_cast<int>(rs.next_u64() % 4);
        Eigen::VectorXd lam(d);
        lam[d - 1] = rs.uniform(0.5, 1.5);
        for (int i = d - 2; i >= 0; --i) lam[i] = lam[i + 1] + rs.uniform(0.6, 2.0);
        const SymMatrix sigma =
            build_covariance(lam, SeedSpec{69, 1000 + static_cast<std::uint64_t>(rep)});

        Eigen::MatrixXd g(d, d);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) g(i, j) = rs.normal();
        const double scale = rs.uniform(0.0, 0.2);
        Eigen::MatrixXd noise = scale * 0.5 * (g + g.transpose());
        const SymMatrix sigma_hat(Eigen::MatrixXd(sigma.mat() + noise));

        const int j = static_cast<int>(rs.next_u64() % d);
        const auto rec = aligned_eigvec(sigma_hat, sigma, j);
        REQUIRE(rec.vector_dist <= rec.projector_dist + 1e-12);
        REQUIRE(rec.projector_dist <= rec.certificate + 1e-12);
    }
}

TEST_CASE("direction sets are unit-norm and reproducible") {
    DirectionSet a(5, 16, SeedSpec{70, 0});
    DirectionSet b(5, 16, SeedSpec{70, 0});
    REQUIRE((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < a.size(); ++i) {
        REQUIRE(a.direction(i).norm() == Catch::Approx(1.0).epsilon(1e-12));
    }
    DirectionSet c(5, 2, SeedSpec{70, 1});
    REQUIRE_THROWS_AS(c.add_eigenvectors(eig(SymMatrix::identity(3))), std::invalid_argument);
}

TEST_CASE("default_tau bridges the directional scale to a vector threshold") {
    REQUIRE(default_tau(2.0, 8.0, 100) == Catch::Approx(std::sqrt(2.0 * 100.0 / 8.0)));
    REQUIRE_THROWS_AS(default_tau(0.0, 1.0, 10), std::invalid_argument);
    REQUIRE_THROWS_AS(default_tau(1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("estimate_kappa agrees with the elliptical student-t ratio") {
    const SymMatrix sigma = build_covariance(spectrum_geometric(0.6, 3), SeedSpec{71, 0});
    const VectorModel model = VectorModel::student_t(sigma, 5.0);
    const Eigen::MatrixXd x = sample_vectors(model, 40000, SeedSpec{71, 1});
    DirectionSet dirs(3, 24, SeedSpec{71, 2});
    const double est = estimate_kappa(x, dirs, 4.0);
    // every direction of an elliptical law shares the same marginal ratio
    REQUIRE(est == Catch::Approx(std::sqrt(3.0)).margin(0.25));
}
