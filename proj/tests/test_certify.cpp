#include <cmath>
#include <vector>

#include "doctest.h"
#include "rsmdp/certify.hpp"
#include "rsmdp/chain_analysis.hpp"
#include "rsmdp/errors.hpp"
#include "rsmdp/evaluation.hpp"
#include "rsmdp/example22.hpp"
#include "rsmdp/optimal.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rsmdp;

namespace {

StationaryPolicy pol(std::vector<int> choice) { return StationaryPolicy{std::move(choice)}; }

void check_certified_invariants(const Mdp& m, const Certificate& cert) {
    REQUIRE(cert.status == CertStatus::certified);
    CHECK(cert.minmax_ok);
    REQUIRE(cert.restriction.size() == static_cast<std::size_t>(m.num_states()));
    for (int x = 0; x < m.num_states(); ++x) CHECK(!cert.restriction[x].empty());
    REQUIRE(cert.residuals.size() == static_cast<std::size_t>(m.num_states()));
    for (double r : cert.residuals) CHECK(r >= -1e-9);
    for (double h : cert.h) CHECK(std::isfinite(h));
}

} // namespace

TEST_CASE("action restriction keeps exactly the level-nonincreasing actions") {
    Mdp ex = example22_model(0.5);
    ValueFunction jstar = example22_jstar(0.5, RiskCoefficient(1.0));
    ActionRestriction b = action_restriction(ex, jstar);
    CHECK(b[0] == std::vector<int>{0});
    CHECK(b[1] == std::vector<int>{0}); // the jump action climbs to the top level
    CHECK(b[2] == std::vector<int>{0});

    // constant g: every action is level-nonincreasing
    ActionRestriction all = action_restriction(ex, {1.0, 1.0, 1.0});
    CHECK(all[0] == std::vector<int>{0});
    CHECK(all[1] == std::vector<int>{0, 1});
    CHECK(all[2] == std::vector<int>{0});

    // a candidate violating the min-max equation is rejected by name
    try {
        action_restriction(ex, {0.0, 1.0, 0.0});
        FAIL("expected ContradictionError");
    } catch (const ContradictionError& e) {
        CHECK(std::string(e.what()).find("'1'") != std::string::npos);
    }
}

TEST_CASE("membership: the sup-norm certificate g = cnorm certifies immediately") {
    for (const Mdp& m : {example22_model(0.5), fixtures::random_doeblin(2),
                         fixtures::random_doeblin(17), fixtures::single_state(-0.5)}) {
        double cnorm = m.max_cost_norm();
        ValueFunction g(m.num_states(), cnorm);
        Certificate cert = check_membership(m, RiskCoefficient(1.0), g, 0);
        check_certified_invariants(m, cert);
        // the witness found from u = 0 is the zero function itself
        for (double h : cert.h) CHECK(h == 0.0);
        CHECK(cert.report.iterations == 1);
    }
}

TEST_CASE("membership: affine certificates certify, the optimum itself does not") {
    Mdp ex = example22_model(0.5);
    RiskCoefficient one(1.0);
    ValueFunction jstar = example22_jstar(0.5, one);

    Certificate mid = check_membership(ex, one, construct_g_alpha(jstar, 2.0, 0.5), 0);
    check_certified_invariants(ex, mid);
    CHECK(mid.report.iterations < 50);

    // supercritical regime: no finite witness exists for jstar; the search
    // exhausts its budget and reports inconclusive without refuting
    IterationConfig quick;
    quick.max_iter = 5000;
    Certificate probe = check_membership(ex, one, jstar, 0, quick);
    CHECK(probe.status == CertStatus::inconclusive);
    CHECK(probe.minmax_ok);
    CHECK_FALSE(probe.report.converged);
    CHECK(probe.report.iterations == 5000);

    // subcritical regime: jstar itself is certifiable (the relative value
    // function is a finite witness)
    ValueFunction zero_j(3, 0.0);
    Certificate sub = check_membership(ex, RiskCoefficient(0.5), zero_j, 0);
    check_certified_invariants(ex, sub);

    // knife-edge regime: jstar = 0 is correct but has no finite witness
    // (the fixed-point inequality at state 1 degenerates to V >= 1 + V)
    Certificate edge = check_membership(ex, RiskCoefficient(std::log(2.0)), zero_j, 0, quick);
    CHECK(edge.status == CertStatus::inconclusive);
    CHECK(edge.minmax_ok);
}

TEST_CASE("membership: a min-max violation is reported, not refuted") {
    Mdp ex = example22_model(0.5);
    Certificate cert = check_membership(ex, RiskCoefficient(1.0), {0.0, 1.0, 0.0}, 0);
    CHECK(cert.status == CertStatus::inconclusive);
    CHECK_FALSE(cert.minmax_ok);
    CHECK(cert.h.empty());
    CHECK(cert.report.iterations == 0);
}

TEST_CASE("g_alpha construction is the pointwise affine combination") {
    ValueFunction jstar = {0.0, 1.0 + std::log(0.5), 2.0 + 2.0 * std::log(0.5)};
    ValueFunction g = construct_g_alpha(jstar, 2.0, 0.5);
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(1.1534264).epsilon(1e-7));
    CHECK(g[2] == doctest::Approx(1.3068528).epsilon(1e-7));

    // alpha -> 1 collapses onto jstar
    ValueFunction near = construct_g_alpha(jstar, 2.0, 1.0 - 1e-9);
    for (int x = 0; x < 3; ++x) CHECK(std::abs(near[x] - jstar[x]) <= 1e-8);

    // constant jstar: constant result
    ValueFunction flat = construct_g_alpha({0.3, 0.3}, 1.0, 0.25);
    for (double v : flat) CHECK(v == doctest::Approx(0.25 * 0.3 + 0.75).epsilon(1e-12));
}

TEST_CASE("deviation function matches the geometric closed forms") {
    Mdp ex = example22_model(0.5);
    RiskCoefficient one(1.0);
    ValueFunction jstar = example22_jstar(0.5, one);

    DeviationResult dev = deviation_function(ex, one, 0.5, jstar, 0);
    CHECK(dev.report.converged);
    CHECK(dev.h[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(dev.h[1] == doctest::Approx(2.0 * std::log(std::sqrt(2.0) + 1.0)).epsilon(1e-6));
    CHECK(dev.h[1] == doctest::Approx(1.7627472).epsilon(1e-6));
    CHECK(dev.h[2] == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-6));
    CHECK(dev.h[2] == doctest::Approx(2.1972246).epsilon(1e-6));
    // the raw normalization is alpha times the cost-units form
    for (int x = 0; x < 3; ++x)
        CHECK(dev.h_raw[x] == doctest::Approx(0.5 * dev.h[x]).epsilon(1e-12));

    // independent truncated-path enumeration over the restricted chain
    for (int x = 0; x < 3; ++x) {
        double want = oracles::truncated_deviation(ex, pol({0, 0, 0}), 1.0, 0.5, jstar, 0, x, 60);
        CHECK(dev.h[x] == doctest::Approx(want).epsilon(1e-6));
    }

    // heavier damping: still finite (the sticky factor is rho^{2(1-alpha)} < 1)
    DeviationResult heavy = deviation_function(ex, one, 0.999, jstar, 0);
    CHECK(heavy.report.converged);
    double rho2 = 0.25;
    double mass = (1.0 - rho2) * std::pow(rho2, -0.999) / (1.0 - std::pow(rho2, 1.0 - 0.999));
    CHECK(heavy.h[2] == doctest::Approx(std::log(mass) / 0.999).epsilon(1e-6));
    for (double v : heavy.h) CHECK(std::isfinite(v));
}

TEST_CASE("deviation function is pointwise nondecreasing in alpha on the fixture") {
    Mdp ex = example22_model(0.5);
    RiskCoefficient one(1.0);
    ValueFunction jstar = example22_jstar(0.5, one);
    ValueFunction prev(3, -1e300);
    for (double alpha : {0.3, 0.5, 0.7, 0.9, 0.99}) {
        DeviationResult dev = deviation_function(ex, one, alpha, jstar, 0);
        REQUIRE(dev.report.converged);
        for (int x = 0; x < 3; ++x) CHECK(dev.h[x] >= prev[x] - 1e-9);
        prev = dev.h;
    }
}

TEST_CASE("deviation function trivia and error paths") {
    // constant-cost model whose optimum equals the cost: zero excursion excess
    Mdp flat({"z", "s"}, {"a"}, {{0}, {0}}, {{0.4}, {0.4}}, {{{1, 0}}, {{0.7, 0.3}}});
    DeviationResult none = deviation_function(flat, RiskCoefficient(1.0), 0.5, {0.4, 0.4}, 0);
    CHECK(none.report.converged);
    for (double v : none.h) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    Mdp ex = example22_model(0.5);
    ValueFunction jstar = example22_jstar(0.5, RiskCoefficient(1.0));
    CHECK_THROWS_AS(deviation_function(ex, RiskCoefficient(1.0), 0.0, jstar, 0),
                    PreconditionError);
    CHECK_THROWS_AS(deviation_function(ex, RiskCoefficient(1.0), 1.0, jstar, 0),
                    PreconditionError);

    // an understated optimum inflates the excursion until the budget runs
    // out: reported, not thrown, and no post-check fires
    ValueFunction half = jstar;
    for (double& v : half) v *= 0.5;
    IterationConfig quick;
    quick.max_iter = 3000;
    DeviationResult stuck = deviation_function(ex, RiskCoefficient(1.0), 0.95, half, 0, quick);
    CHECK_FALSE(stuck.report.converged);

    // a converged run violating h(z) <= 0 contradicts the theory and throws:
    // understating the optimum at the reference state forces h(z) = 1
    Mdp single = fixtures::single_state(1.0);
    CHECK_THROWS_AS(deviation_function(single, RiskCoefficient(1.0), 0.5, {0.0}, 0),
                    ContradictionError);
}

TEST_CASE("policy extraction recovers the optimal action and verified bound") {
    Mdp ex = example22_model(0.5);
    RiskCoefficient one(1.0);
    ValueFunction jstar = example22_jstar(0.5, one);

    Certificate cert = check_membership(ex, one, construct_g_alpha(jstar, 2.0, 0.5), 0);
    REQUIRE(cert.status == CertStatus::certified);
    PolicyExtraction pe = extract_policy(ex, one, cert);
    CHECK(pe.policy.choice == std::vector<int>{0, 0, 0});
    // bound_check here is exactly the optimal long-run value
    for (int x = 0; x < 3; ++x) {
        CHECK(pe.bound_check[x] == doctest::Approx(jstar[x]).epsilon(1e-9));
        CHECK(pe.bound_check[x] <= cert.g[x] + 1e-8);
    }

    // sup-norm certificate: any extraction stays below cnorm
    ValueFunction top(3, 2.0);
    Certificate sup = check_membership(ex, one, top, 0);
    PolicyExtraction wide = extract_policy(ex, one, sup);
    for (int x = 0; x < 3; ++x) {
        CHECK(ex.is_admissible(x, wide.policy.choice[x]));
        CHECK(wide.bound_check[x] <= 2.0 + 1e-8);
    }

    // single-action model: the unique policy
    Mdp single = fixtures::single_state(0.3);
    Certificate sc = check_membership(single, one, {0.3}, 0);
    REQUIRE(sc.status == CertStatus::certified);
    CHECK(extract_policy(single, one, sc).policy.choice == std::vector<int>{0});

    // extraction demands a certified input
    IterationConfig quick;
    quick.max_iter = 200;
    Certificate probe = check_membership(ex, one, jstar, 0, quick);
    REQUIRE(probe.status == CertStatus::inconclusive);
    CHECK_THROWS_AS(extract_policy(ex, one, probe), PreconditionError);
}

TEST_CASE("monotone trajectory check accepts restricted and flags violating policies") {
    Mdp ex = example22_model(0.5);
    ValueFunction jstar = example22_jstar(0.5, RiskCoefficient(1.0));

    for (int x = 0; x < 3; ++x)
        CHECK(monotone_trajectory_check(ex, jstar, pol({0, 0, 0}), x, 50, 200, 11));

    // constant candidate: trivially nonincreasing under any policy
    CHECK(monotone_trajectory_check(ex, {1.0, 1.0, 1.0}, pol({0, 1, 0}), 1, 50, 200, 11));

    // the jump action leaves the middle level immediately: detected
    CHECK_FALSE(monotone_trajectory_check(ex, jstar, pol({0, 1, 0}), 1, 50, 200, 11));
}

TEST_CASE("certificate family experiment: gaps follow the affine identity") {
    Mdp ex = example22_model(0.5);

    for (double lam : {1.0, 0.5}) {
        RiskCoefficient rc(lam);
        Theorem35Report rep = verify_theorem35(ex, rc, 0, {0.5, 0.9, 0.99});
        CHECK(rep.all_certified);
        CHECK(rep.gaps_monotone);
        CHECK(rep.cnorm == 2.0);
        REQUIRE(rep.certificates.size() == 3);
        double worst = 0.0;
        for (int x = 0; x < 3; ++x) worst = std::max(worst, 2.0 - rep.jstar[x]);
        for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
            double alpha = rep.alphas[i];
            CHECK(rep.max_gaps[i] == doctest::Approx((1.0 - alpha) * worst).epsilon(1e-9));
            // pointwise identity, tight
            for (int x = 0; x < 3; ++x) {
                double gap = rep.certificates[i].g[x] - rep.jstar[x];
                CHECK(gap == doctest::Approx((1.0 - alpha) * (2.0 - rep.jstar[x])).epsilon(1e-12));
            }
            check_certified_invariants(ex, rep.certificates[i]);
        }
    }

    // supercritical gaps are (1 - alpha) * 2 exactly
    Theorem35Report sup = verify_theorem35(ex, RiskCoefficient(1.0), 0, {0.5, 0.9, 0.99});
    CHECK(sup.max_gaps[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sup.max_gaps[1] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(sup.max_gaps[2] == doctest::Approx(0.02).epsilon(1e-9));

    // a constant-cost model certifies with zero gap at every alpha
    Mdp flat({"z", "s"}, {"a"}, {{0}, {0}}, {{1.0}, {1.0}}, {{{1, 0}}, {{0.6, 0.4}}});
    Theorem35Report zero = verify_theorem35(flat, RiskCoefficient(1.0), 0);
    CHECK(zero.all_certified);
    for (double gap : zero.max_gaps) CHECK(std::abs(gap) <= 1e-9);

    // the grid may arrive unsorted; monotonicity is judged along alpha
    Theorem35Report shuffled = verify_theorem35(ex, RiskCoefficient(1.0), 0, {0.9, 0.5, 0.99});
    CHECK(shuffled.gaps_monotone);

    CHECK_THROWS_AS(verify_theorem35(ex, RiskCoefficient(1.0), 0, {0.5, 1.5}),
                    PreconditionError);
}
