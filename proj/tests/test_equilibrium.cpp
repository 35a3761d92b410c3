#include "tcc/equilibrium.hpp"
#include "tcc/dynamics.hpp"
#include "tcc/scenarios.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace tcc;
using Catch::Approx;

namespace {

// agent 0 hears -0.5 x_1 - 1, agent 1 hears -0.5 x_0 + 1
System opposed_pair() {
    return System::build(Digraph::build({{0, 1}, {1, 0}}),
                         {{1, 0, ConstraintFn::affine(-0.5, -1.0)}, {0, 1, ConstraintFn::affine(-0.5, 1.0)}});
}

}  // namespace

TEST_CASE("residual vanishes at known equilibria", "[equilibrium]") {
    const Eigen::Vector2d e = oracle::affine_equilibrium({{0, 1}, {1, 0}}, {{0, -0.5}, {-0.5, 0}}, {{0, -1}, {1, 0}});
    CHECK(e(0) == Approx(-2.0));
    CHECK(e(1) == Approx(2.0));
    CHECK(residual(opposed_pair(), std::vector<double>{-2.0, 2.0}) == 0.0);
    CHECK(residual(find_scenario("ex1").system, std::vector<double>(5, 0.0)) < 1e-15);

    const auto id = System::build(Digraph::build({{0, 1}, {1, 0}}),
                                  {{0, 1, ConstraintFn::identity()}, {1, 0, ConstraintFn::identity()}});
    CHECK(residual(id, std::vector<double>{3.25, 3.25}) == 0.0);
}

TEST_CASE("small solves", "[equilibrium]") {
    const auto pair = System::build(Digraph::build({{0, 1}, {1, 0}}),
                                    {{0, 1, ConstraintFn::affine(-0.5, 0.0)}, {1, 0, ConstraintFn::affine(-0.5, 0.0)}});
    const auto e = solve_equilibrium(pair, std::vector<double>{5.0, -3.0});
    CHECK(std::abs(e.point[0]) < 1e-9);
    CHECK(e.residual < 1e-10);

    for (double s : {-7.0, 0.0, 11.0}) {
        const auto o = solve_equilibrium(opposed_pair(), std::vector<double>{s, -s});
        CHECK(o.point[0] == Approx(-2.0).margin(1e-9));
        CHECK(o.point[1] == Approx(2.0).margin(1e-9));
    }
}

TEST_CASE("affine equilibria match a direct linear solve", "[equilibrium][oracle]") {
    SplitMix64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        auto s = oracle::random_affine(rng);
        const auto want = oracle::affine_equilibrium(s.a, s.k, s.m);
        std::vector<double> seed(s.a.size());
        for (auto& v : seed) v = rng.uniform(-5.0, 5.0);
        const auto got = solve_equilibrium(s.system, seed);
        for (std::size_t i = 0; i < seed.size(); ++i)
            CHECK(std::abs(got.point[i] - want(static_cast<Eigen::Index>(i))) <= 1e-9);
    }
}

TEST_CASE("silent agents are reported", "[equilibrium]") {
    const auto s = System::build(Digraph::build({{0, 0}, {1, 0}}), {{0, 1, ConstraintFn::identity()}});
    try {
        solve_equilibrium(s, std::vector<double>{0.0, 0.0});
        FAIL("expected NoInEdgeAgent");
    } catch (const EquilibriumError& e) {
        CHECK(e.kind() == EquilibriumError::Kind::NoInEdgeAgent);
    }
}

TEST_CASE("the third example has one equilibrium", "[equilibrium]") {
    const auto& s = find_scenario("ex3").system;
    const auto rep = uniqueness_probe(s, -5.0, 5.0, 50, 1e-10, 3);
    CHECK(rep.clusters() == 1);
    CHECK(rep.failures == 0);
    CHECK(residual(s, rep.representatives.at(0)) < 1e-8);
}

TEST_CASE("the fourth example has many equilibria inside its box", "[equilibrium]") {
    const auto& s = find_scenario("ex4").system;
    const auto box = invariant_box(s);
    REQUIRE(box);
    const auto rep = uniqueness_probe(s, box->lower, box->upper, 50, 1e-10, 4);
    CHECK(rep.clusters() >= 2);
    for (const auto& r : rep.representatives)
        for (double v : r) {
            CHECK(v >= box->lower - 1e-6);
            CHECK(v <= box->upper + 1e-6);
        }
}

TEST_CASE("identity edges have a continuum of equilibria", "[equilibrium]") {
    const auto s = System::build(Digraph::build({{0, 1}, {1, 0}}),
                                 {{0, 1, ConstraintFn::identity()}, {1, 0, ConstraintFn::identity()}});
    const auto rep = uniqueness_probe(s, -5.0, 5.0, 10, 1e-10, 1);
    CHECK(rep.clusters() >= 2);
    CHECK(rep.clusters() <= 10);
}

TEST_CASE("box from the fixed-point hull and the slope floor", "[equilibrium]") {
    // k x + (1 - k) X_m = -x + X_M + X_m, then y = -x + X_M + X_m
    auto oracle_box = [](double xm, double xM, double k) {
        Eigen::Matrix2d a;
        a << k + 1.0, 0.0, 1.0, 1.0;  // unknowns (x, y): (k + 1) x = X_M + X_m - (1 - k) X_m, y = -x + X_M + X_m
        Eigen::Vector2d b(xM + xm - (1.0 - k) * xm, xM + xm);
        const Eigen::Vector2d s = a.partialPivLu().solve(b);
        return std::pair{std::min(s(0), s(1)), std::max(s(0), s(1))};
    };
    const auto b = invariant_box_from(-1.0, 1.0, -0.5);
    const auto o = oracle_box(-1.0, 1.0, -0.5);
    CHECK(b.lo == Approx(o.first));
    CHECK(b.hi == Approx(o.second));
    CHECK(b.lo == Approx(-3.0));
    CHECK(b.hi == Approx(3.0));
    CHECK(invariant_box_from(0.0, 0.0, -0.5) == Interval{0.0, 0.0});
    const auto c = invariant_box_from(1.7, 1.7, -0.3);
    CHECK(c.lo == Approx(1.7));
    CHECK(c.hi == Approx(1.7));
}

TEST_CASE("the invariant box holds trajectories started on its boundary", "[equilibrium]") {
    for (const char* name : {"ex3", "ex4"}) {
        INFO(name);
        const auto& s = find_scenario(name).system;
        const auto box = invariant_box(s);
        REQUIRE(box);
        SplitMix64 rng(9);
        const double dt = 1e-3;
        const double tol = 10.0 * dt * row_stats(s.graph()).a_bar;
        for (int run = 0; run < 200; ++run) {
            std::vector<double> x(s.size());
            for (auto& v : x) v = rng.uniform(box->lower, box->upper);
            x[rng.next() % x.size()] = (rng.next() & 1) ? box->upper : box->lower;
            const auto traj = integrate(s, x, {dt, 2.0, Method::RK4, 10});
            for (std::size_t k = 0; k < traj.size(); ++k) {
                REQUIRE(traj.xM[k] <= box->upper + tol);
                REQUIRE(traj.xm[k] >= box->lower - tol);
            }
        }
    }
}
