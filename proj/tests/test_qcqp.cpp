#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fdisac/qcqp.hpp"
#include "oracles.hpp"

using namespace fdisac;

namespace {

QcqpProblem::Constraint ball(Eigen::Index n, const VecC& center, double radius) {
    QcqpProblem::Constraint c;
    c.P = MatC::Identity(n, n);
    c.r = center;
    c.s = center.squaredNorm() - radius * radius;
    return c;
}

}  // namespace

TEST_CASE("unconstrained quadratic") {
    QcqpProblem prob;
    prob.A = MatC::Identity(3, 3);
    prob.b = VecC::Unit(3, 0);
    prob.c = 0.0;
    const QcqpSolution sol = solve(prob);
    CHECK(sol.status == QcqpStatus::optimal);
    CHECK((sol.w - VecC::Unit(3, 0)).norm() <= 1e-8);
    CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("ball-constrained quadratic projects radially") {
    QcqpProblem prob;
    prob.A = MatC::Identity(3, 3);
    prob.b = VecC::Unit(3, 0);
    prob.constraints.push_back(ball(3, VecC::Zero(3), 0.5));
    const QcqpSolution sol = solve(prob);
    CHECK(sol.status == QcqpStatus::optimal);
    CHECK((sol.w - 0.5 * VecC::Unit(3, 0)).norm() <= 1e-7);
    CHECK(sol.objective == doctest::Approx(-0.75).epsilon(1e-8));
    CHECK(sol.duals[0] >= 0.0);
    CHECK(sol.kkt_residual <= prob.tolerance);
}

TEST_CASE("matches independent oracles on random instances") {
    Rng rng(42);
    for (int inst = 0; inst < 15; ++inst) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 7);
        QcqpProblem prob;
        prob.A = oracles::random_psd(rng, n, 0.05);
        prob.b = oracles::random_vec(rng, n);
        prob.c = rng.uniform() - 0.5;

        if (inst % 2 == 0) {
            const double radius = 0.3 + rng.uniform();
            prob.constraints.push_back(ball(n, VecC::Zero(n), radius));
            const QcqpSolution sol = solve(prob);
            REQUIRE(sol.status == QcqpStatus::optimal);
            const double pg =
                oracles::projected_gradient_ball(prob.A, prob.b, prob.c, VecC::Zero(n), radius,
                                                 200000);
            const double db =
                oracles::dual_bisection_ball(prob.A, prob.b, prob.c, VecC::Zero(n), radius);
            CHECK(sol.objective ==
                  doctest::Approx(pg).epsilon(1e-4));
            CHECK(sol.objective == doctest::Approx(db).epsilon(1e-6));
        } else {
            oracles::TwoConstraintDual oracle;
            oracle.A = prob.A;
            oracle.b = prob.b;
            oracle.c = prob.c;
            oracle.P1 = MatC::Identity(n, n);
            oracle.r1 = VecC::Zero(n);
            oracle.s1 = -(0.5 + rng.uniform());
            oracle.P2 = oracles::random_psd(rng, n, 0.02);
            oracle.r2 = oracles::random_vec(rng, n) * 0.1;
            oracle.s2 = -(0.5 + rng.uniform());
            QcqpProblem::Constraint c1{oracle.P1, oracle.r1, oracle.s1};
            QcqpProblem::Constraint c2{oracle.P2, oracle.r2, oracle.s2};
            prob.constraints = {c1, c2};
            const QcqpSolution sol = solve(prob);
            REQUIRE(sol.status == QcqpStatus::optimal);
            const double dual = oracle.solve();
            CHECK(sol.objective == doctest::Approx(dual).epsilon(1e-4));
        }
    }
}

TEST_CASE("KKT certificate fields") {
    Rng rng(7);
    const Eigen::Index n = 6;
    QcqpProblem prob;
    prob.A = oracles::random_psd(rng, n, 0.1);
    prob.b = oracles::random_vec(rng, n);
    prob.constraints.push_back(ball(n, VecC::Zero(n), 0.4));
    prob.constraints.push_back(ball(n, 0.1 * VecC::Ones(n), 1.0));
    const QcqpSolution sol = solve(prob);
    REQUIRE(sol.status == QcqpStatus::optimal);

    // stationarity
    VecC stat = prob.A * sol.w - prob.b;
    for (std::size_t i = 0; i < prob.constraints.size(); ++i)
        stat += sol.duals[static_cast<Eigen::Index>(i)] *
                (prob.constraints[i].P * sol.w - prob.constraints[i].r);
    CHECK(stat.norm() <= prob.tolerance * (1.0 + prob.b.norm()));
    for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
        const double g = prob.constraint_at(static_cast<int>(i), sol.w);
        CHECK(g <= prob.tolerance);
        CHECK(sol.duals[static_cast<Eigen::Index>(i)] >= 0.0);
        CHECK(std::abs(sol.duals[static_cast<Eigen::Index>(i)] * g) <= prob.tolerance);
    }
}

TEST_CASE("feasible warm start never worsens the objective") {
    Rng rng(8);
    for (int inst = 0; inst < 10; ++inst) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.uniform() * 5);
        QcqpProblem prob;
        prob.A = oracles::random_psd(rng, n, 0.01);
        prob.b = oracles::random_vec(rng, n);
        const double radius = 0.5 + rng.uniform();
        prob.constraints.push_back(ball(n, VecC::Zero(n), radius));
        VecC warm = oracles::random_vec(rng, n);
        warm *= 0.9 * radius / warm.norm();
        const QcqpSolution sol = solve(prob, warm);
        REQUIRE(sol.status == QcqpStatus::optimal);
        CHECK(sol.objective <= prob.objective_at(warm) + 1e-9 * (1.0 + std::abs(sol.objective)));
    }
}

TEST_CASE("solution is invariant to unitary reparameterization") {
    Rng rng(9);
    const Eigen::Index n = 5;
    QcqpProblem prob;
    prob.A = oracles::random_psd(rng, n, 0.05);
    prob.b = oracles::random_vec(rng, n);
    prob.constraints.push_back(ball(n, VecC::Zero(n), 0.8));
    const QcqpSolution base = solve(prob);

    Eigen::HouseholderQR<MatC> qr(rng.complex_gaussian_matrix(n, n));
    const MatC U = qr.householderQ();
    QcqpProblem rotated = prob;
    rotated.A = U * prob.A * U.adjoint();
    rotated.b = U * prob.b;
    rotated.constraints[0].r = U * prob.constraints[0].r;
    const QcqpSolution rot = solve(rotated);
    REQUIRE(rot.status == QcqpStatus::optimal);
    CHECK(rot.objective == doctest::Approx(base.objective).epsilon(2e-8));
}

TEST_CASE("infeasibility is certified") {
    QcqpProblem prob;
    prob.A = MatC::Identity(2, 2);
    prob.b = VecC::Zero(2);
    QcqpProblem::Constraint impossible;  // ||w||^2 + 1 <= 0
    impossible.P = MatC::Identity(2, 2);
    impossible.r = VecC::Zero(2);
    impossible.s = 1.0;
    prob.constraints.push_back(impossible);
    CHECK(solve(prob).status == QcqpStatus::infeasible);

    QcqpProblem constant;
    constant.A = MatC::Identity(2, 2);
    constant.b = VecC::Zero(2);
    constant.constraints.push_back({MatC::Zero(2, 2), VecC::Zero(2), 0.5});
    CHECK(solve(constant).status == QcqpStatus::infeasible);

    constant.constraints[0].s = -0.5;  // vacuous constant constraint
    CHECK(solve(constant).status == QcqpStatus::optimal);
}

TEST_CASE("invalid data is rejected") {
    QcqpProblem prob;
    prob.A = MatC::Identity(2, 2);
    prob.A(0, 1) = cx(0.5, 0.0);  // not Hermitian
    prob.b = VecC::Zero(2);
    CHECK_THROWS_AS(solve(prob), InvalidInput);

    prob.A = -MatC::Identity(2, 2);  // negative definite
    CHECK_THROWS_AS(solve(prob), InvalidInput);

    prob.A = MatC::Identity(2, 2);
    prob.b = VecC::Zero(3);
    CHECK_THROWS_AS(solve(prob), InvalidInput);
}

TEST_CASE("solve is deterministic") {
    Rng rng(10);
    QcqpProblem prob;
    prob.A = oracles::random_psd(rng, 4, 0.05);
    prob.b = oracles::random_vec(rng, 4);
    prob.constraints.push_back(ball(4, VecC::Zero(4), 0.7));
    const QcqpSolution a = solve(prob);
    const QcqpSolution b = solve(prob);
    CHECK(a.w == b.w);
    CHECK(a.objective == b.objective);
    CHECK(a.duals == b.duals);
}
