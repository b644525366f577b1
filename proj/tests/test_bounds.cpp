#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "matconc/bounds.hpp"

using namespace matconc::bounds;

TEST_CASE("bernstein_tail hand values") {
    BoundInput in;
    in.erank = 10.0;
    in.sigma2 = 1.0;
    in.U = 1.0;
    CHECK(bernstein_tail(in, 5.0).raw == Catch::Approx(0.368).margin(0.001));
    CHECK(bernstein_tail(in, 10.0).raw == Catch::Approx(3.90e-4).epsilon(0.01));
    // below threshold t = sigma + U/3
    REQUIRE_THROWS_AS(bernstein_tail(in, 1.0 + 1.0 / 3.0 - 1e-9), std::domain_error);
}

TEST_CASE("bernstein_moment hand values") {
    BoundInput in;
    in.sigma2 = 1.0;
    in.U = 1.0;
    in.erank = 1.0;
    in.p = 2.0;
    CHECK(bernstein_moment(in) == Catch::Approx(std::sqrt(2.0) + 2.0));

    in.sigma2 = 0.0;
    in.p = 1.0;
    CHECK(bernstein_moment(in) == Catch::Approx(1.0));

    in.sigma2 = 1.0;
    in.p = 2.0;
    const double base = bernstein_moment(in);
    in.K = 2.0;
    CHECK(bernstein_moment(in) == Catch::Approx(2.0 * base));
}

TEST_CASE("prop_fuk_nagaev_rhs hand values") {
    BoundInput in;
    in.erank = 1.0;
    in.sigma_u2 = 1.0;
    in.U = 0.0;
    CHECK(prop_fuk_nagaev_rhs(in, 4.0, 0.0, 0.0, 0.0, false).raw ==
          Catch::Approx(64.0 * std::exp(-4.0)).epsilon(1e-12));
    CHECK(prop_fuk_nagaev_rhs(in, 4.0, 0.0, 0.0, 0.0, true).raw ==
          Catch::Approx(16.0 * std::exp(-4.0)).epsilon(1e-12));

    // decreases to zero as t grows
    double prev = prop_fuk_nagaev_rhs(in, 4.0, 0.0, 0.0, 0.0, true).raw;
    for (double t = 6.0; t <= 40.0; t += 2.0) {
        const double cur = prop_fuk_nagaev_rhs(in, t, 0.0, 0.0, 0.0, true).raw;
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(prev < 1e-40);

    REQUIRE_THROWS_AS(prop_fuk_nagaev_rhs(in, 1.9, 0.0, 0.0, 0.0, true), std::domain_error);
    REQUIRE_THROWS_AS(prop_fuk_nagaev_rhs(in, 4.0, -0.1, 0.0, 0.0, true),
                      std::invalid_argument);
}

TEST_CASE("fuk_nagaev_tail hand values") {
    BoundInput in;
    in.erank = 4.0;
    in.sigma2 = 1.0;
    in.EM = 0.5;
    in.p = 2.0;
    in.EMp = 1.0;
    CHECK(fuk_nagaev_tail(in, 20.0, 1e-3).raw == Catch::Approx(0.350).margin(0.001));

    // the additive p_max term alone forces raw >= 1
    CHECK(fuk_nagaev_tail(in, 20.0, 1.0).raw >= 1.0);
    CHECK(fuk_nagaev_tail(in, 20.0, 1.0).clamped == 1.0);

    // strict decrease of the t-dependent terms
    const double a = fuk_nagaev_tail(in, 20.0, 0.0).raw;
    const double b = fuk_nagaev_tail(in, 40.0, 0.0).raw;
    CHECK(b < a);

    REQUIRE_THROWS_AS(fuk_nagaev_tail(in, 1.9, 0.0), std::domain_error);
}

TEST_CASE("rosenthal_moment hand values") {
    BoundInput in;
    in.sigma2 = 1.0;
    in.erank = std::exp(1.0);
    in.p = 2.0;
    in.EM = 1.0;
    in.EMp = 2.0;
    CHECK(rosenthal_moment(in) == Catch::Approx(5.085).margin(0.002));

    // log(1) = 0 so q falls back to p
    BoundInput in2;
    in2.erank = 1.0;
    in2.p = 3.0;
    in2.EM = 1.0;
    CHECK(rosenthal_moment(in2) == Catch::Approx(3.0));

    // p = 1 makes the maximal-term coefficient equal to 1
    BoundInput in3;
    in3.erank = 1.0;
    in3.p = 1.0;
    in3.EMp = 7.0;
    CHECK(rosenthal_moment(in3) == Catch::Approx(1.0 * 7.0 + 1.0 * 0.0 + 0.0).margin(1e-12));
}

TEST_CASE("rosenthal_psi1 hand values") {
    BoundInput in;
    in.sigma2 = 0.0;
    in.erank = 1.0;
    in.p = 2.0;
    in.psi1M = 3.0;
    CHECK(rosenthal_psi1(in) == Catch::Approx(6.0));

    BoundInput in2;
    in2.sigma2 = 1.0;
    in2.erank = std::exp(1.0);
    in2.p = 1.0;
    in2.EM = 1.0;
    CHECK(rosenthal_psi1(in2) == Catch::Approx(2.0));

    // adding psi1 mass contributes p * psi1M
    BoundInput in3 = in2;
    in3.psi1M = 5.0;
    CHECK(rosenthal_psi1(in3) == Catch::Approx(rosenthal_psi1(in2) + in3.p * 5.0));
}

TEST_CASE("rosenthal_psd hand values") {
    BoundInput in;
    in.anorm = 2.0;
    in.erank = std::exp(2.0);
    in.p = 1.0;
    in.EM = 1.0;
    in.EMp = 1.0;
    CHECK(rosenthal_psd(in, RosenthalVariant::moment) == Catch::Approx(5.0));

    BoundInput zero;
    CHECK(rosenthal_psd(zero, RosenthalVariant::moment) == Catch::Approx(0.0).margin(1e-15));

    BoundInput in2;
    in2.anorm = 1.0;
    in2.erank = std::exp(1.0);
    in2.EM = 1.0;
    in2.p = 2.0;
    in2.psi1M = 1.0;
    CHECK(rosenthal_psd(in2, RosenthalVariant::psi1) == Catch::Approx(4.0));
}

TEST_CASE("empproc_tail hand values") {
    EmpProcInput in;
    in.sigma_star = 1.0;
    in.p = 2.0;
    CHECK(empproc_tail(in, 2.0, 0.0).raw == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(empproc_tail(in, 2.0, 1.0).raw >= 1.0);
    CHECK(empproc_tail(in, 2.0, 0.0).lhs_threshold == Catch::Approx(48.0));
    REQUIRE_THROWS_AS(empproc_tail(in, 1.0, 0.0), std::domain_error);
}

TEST_CASE("empproc_moment hand values") {
    EmpProcInput in;
    in.EZ = 10.0;
    in.sigma_star = 2.0;
    in.p = 4.0;
    in.EM = 1.0;
    in.EMp = 16.0;
    CHECK(empproc_moment(in) == Catch::Approx(21.352).margin(0.002));

    EmpProcInput in2;
    in2.EZ = 5.0;
    CHECK(empproc_moment(in2) == Catch::Approx(5.0));

    EmpProcInput in3;
    in3.EZ = 1.0;
    in3.sigma_star = 2.0;
    in3.p = 1.0;
    in3.EM = 3.0;
    in3.EMp = 4.0;
    CHECK(empproc_moment(in3) == Catch::Approx(1.0 + 2.0 + 3.0 + 4.0));
}

TEST_CASE("bousquet_threshold hand values") {
    EmpProcInput in;
    in.sigma_star = 2.0;
    in.EZ = 3.0;
    in.U = 1.0;
    const auto lvl = bousquet_threshold(in, 2.0);
    CHECK(lvl.threshold == Catch::Approx(3.0 + std::sqrt(40.0) + 2.0 / 3.0));
    CHECK(lvl.prob == Catch::Approx(std::exp(-2.0)));

    const auto at0 = bousquet_threshold(in, 0.0);
    CHECK(at0.threshold == Catch::Approx(3.0));
    CHECK(at0.prob == Catch::Approx(1.0));

    EmpProcInput in2;
    in2.sigma_star = 2.0;
    const auto simple = bousquet_threshold(in2, 3.0);
    CHECK(simple.threshold == Catch::Approx(2.0 * std::sqrt(2.0 * 3.0)));
    CHECK(simple.simplified_threshold == Catch::Approx(2.0 * std::sqrt(6.0)));
}

TEST_CASE("tail evaluators decrease strictly in t over a grid") {
    BoundInput in;
    in.erank = 5.0;
    in.sigma2 = 2.0;
    in.sigma_u2 = 1.5;
    in.U = 1.0;
    in.EM = 0.7;
    in.p = 3.0;
    in.EMp = 2.0;
    EmpProcInput ein;
    ein.sigma_star = 1.2;
    ein.EM = 0.3;
    ein.p = 2.0;
    ein.EMp = 1.0;

    // start above every evaluator's validity threshold; the binding one is
    // the proposition's median certificate t/2 >= sqrt(2) sigma
    const double t0 = 2.0 * std::sqrt(2.0 * in.sigma2) + 0.01;
    std::vector<double> fn, bt, pt, et;
    for (int i = 0; i < 100; ++i) {
        const double t = t0 + 0.25 * i;
        fn.push_back(fuk_nagaev_tail(in, t, 0.01).raw);
        bt.push_back(bernstein_tail(in, t).raw);
        pt.push_back(prop_fuk_nagaev_rhs(in, t, 0.05, 0.05, 0.01, false).raw);
        et.push_back(empproc_tail(ein, t, 0.01).raw);
    }
    for (std::size_t i = 1; i < fn.size(); ++i) {
        REQUIRE(fn[i] < fn[i - 1]);
        REQUIRE(bt[i] < bt[i - 1]);
        REQUIRE(pt[i] < pt[i - 1]);
        REQUIRE(et[i] < et[i - 1]);
    }
}

TEST_CASE("evaluators scale linearly in K and monotonically in inputs") {
    BoundInput base;
    base.sigma2 = 1.0;
    base.sigma_u2 = 1.0;
    base.U = 0.5;
    base.erank = 3.0;
    base.p = 2.5;
    base.EM = 0.4;
    base.EMp = 1.5;
    base.psi1M = 0.8;
    base.anorm = 2.0;

    const double t = 10.0;
    auto all_values = [&](const BoundInput& in) {
        return std::vector<double>{
            bernstein_tail(in, t).raw,          bernstein_moment(in),
            fuk_nagaev_tail(in, t, 0.01).raw,   rosenthal_moment(in),
            rosenthal_psi1(in),                 rosenthal_psd(in, RosenthalVariant::moment),
            rosenthal_psd(in, RosenthalVariant::psi1),
            prop_fuk_nagaev_rhs(in, t, 0.1, 0.1, 0.1, true).raw,
        };
    };

    const auto v1 = all_values(base);
    BoundInput doubled = base;
    doubled.K = 2.0;
    const auto v2 = all_values(doubled);
    for (std::size_t i = 0; i < v1.size(); ++i) {
        REQUIRE(v2[i] == Catch::Approx(2.0 * v1[i]).epsilon(1e-12));
    }

    // finite-difference monotonicity sweep over each scalar field
    auto bump = [&](auto setter) {
        BoundInput b = base;
        setter(b);
        return b;
    };
    std::vector<BoundInput> bumped = {
        bump([](BoundInput& b) { b.sigma2 += 0.3; }),
        bump([](BoundInput& b) { b.U += 0.3; }),
        bump([](BoundInput& b) { b.EM += 0.3; }),
        bump([](BoundInput& b) { b.EMp += 0.3; }),
        bump([](BoundInput& b) { b.erank += 1.0; }),
    };
    for (const auto& b : bumped) {
        const auto vb = all_values(b);
        for (std::size_t i = 0; i < v1.size(); ++i) {
            REQUIRE(vb[i] >= v1[i] - 1e-12);
        }
    }
}

TEST_CASE("clamped values lie in [0,1] and never exceed raw") {
    BoundInput in;
    in.erank = 100.0;
    in.sigma2 = 4.0;
    in.U = 2.0;
    in.EM = 1.0;
    in.p = 2.0;
    in.EMp = 3.0;
    for (double t = 4.1; t < 60.0; t += 1.7) {
        const auto v = fuk_nagaev_tail(in, t, 0.02);
        REQUIRE(v.clamped >= 0.0);
        REQUIRE(v.clamped <= 1.0);
        REQUIRE(v.raw >= v.clamped);
    }
}

TEST_CASE("rosenthal_moment with erank 1 equals the q = p formula") {
    BoundInput in;
    in.sigma2 = 2.0;
    in.erank = 1.0;
    in.p = 3.0;
    in.EM = 0.5;
    in.EMp = 4.0;
    const double q = in.p;
    const double expected = std::sqrt(in.sigma2 * q) + q * in.EM +
                            (in.p / (1.0 + std::log(in.p))) * std::pow(in.EMp, 1.0 / in.p);
    REQUIRE(rosenthal_moment(in) == expected);
}

TEST_CASE("input validation rejects bad fields") {
    BoundInput neg;
    neg.sigma2 = -1.0;
    REQUIRE_THROWS_AS(bernstein_moment(neg), std::invalid_argument);

    BoundInput badp;
    badp.p = 0.5;
    REQUIRE_THROWS_AS(rosenthal_moment(badp), std::invalid_argument);

    BoundInput badrank;
    badrank.erank = 0.5;
    REQUIRE_THROWS_AS(rosenthal_moment(badrank), std::invalid_argument);

    EmpProcInput badn;
    badn.n = 0;
    REQUIRE_THROWS_AS(empproc_moment(badn), std::invalid_argument);
}
