#include "tcc/constraints.hpp"
#include "tcc/scenarios.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace tcc;
using Catch::Approx;

namespace {

bool rejects(auto make) {
    try {
        make();
    } catch (const ConstraintError& e) {
        return e.kind() == ConstraintError::Kind::InvalidParameters;
    }
    return false;
}

std::string constraint_summary(const ConstraintFn& f) {
    std::string out;
    for (double x : {-2.0, 0.0, 2.0}) out += std::to_string(evaluate(f, x)) + " ";
    return out;
}

}  // namespace

TEST_CASE("factories reject bad parameters", "[constraints]") {
    CHECK(rejects([] { ConstraintFn::saturation(1.0, -1.0); }));
    CHECK(rejects([] { ConstraintFn::interval_projection(0.0, 1.0, 1.0); }));
    CHECK(rejects([] { ConstraintFn::interval_projection(0.0, 1.0, 0.0); }));
    CHECK(rejects([] { ConstraintFn::scaled_sine(std::nan(""), 0.0); }));
    CHECK(rejects([] { ConstraintFn::piecewise_linear({}, 0.0, 0.0); }));
    CHECK(rejects([] { ConstraintFn::piecewise_linear({{1.0, 0.0}, {1.0, 1.0}}, 0.0, 0.0); }));
    CHECK(rejects([] { ConstraintFn::gated_identity(2.0, 1.0); }));
    CHECK(rejects([] { ConstraintFn::tabulated({0.0, 1.0}, {0.0}, fn::Interpolation::Linear); }));
    CHECK(rejects([] { ConstraintFn::mix(ConstraintFn::identity(), ConstraintFn::identity(), 1.5); }));
}

TEST_CASE("evaluation agrees with direct formulas", "[constraints]") {
    SplitMix64 rng(11);
    const auto sat = ConstraintFn::saturation(-1.0, 2.0);
    const auto proj = ConstraintFn::interval_projection(-0.5, 1.5, 0.3);
    const auto sine = ConstraintFn::scaled_sine(0.8, std::numbers::pi);
    const auto gate = ConstraintFn::gated_identity(-1.0, 2.0);
    const auto mix = ConstraintFn::mix(sat, sine, 0.25);
    for (int k = 0; k < 2000; ++k) {
        const double x = rng.uniform(-10.0, 10.0);
        CHECK(evaluate(sat, x) == oracle::clamp(x, -1.0, 2.0));
        CHECK(evaluate(proj, x) == Approx(oracle::projection(x, -0.5, 1.5, 0.3)).margin(1e-14));
        CHECK(evaluate(sine, x) == 0.8 * std::sin(x + std::numbers::pi));
        CHECK(evaluate(gate, x) == oracle::gated(x, -1.0, 2.0));
        CHECK(evaluate(mix, x) ==
              Approx(0.25 * oracle::clamp(x, -1.0, 2.0) + 0.75 * 0.8 * std::sin(x + std::numbers::pi)).margin(1e-14));
    }
    CHECK(is_gated(gate, 2.5));
    CHECK_FALSE(is_gated(gate, 2.0));
}

TEST_CASE("piecewise linear interpolates and extends with its tails", "[constraints]") {
    const auto f = catalog::boundary_ray_d();
    CHECK(evaluate(f, -1.0) == 0.5);
    CHECK(evaluate(f, -0.5) == 0.25);
    CHECK(evaluate(f, 3.0) == Approx(-0.5 - 0.8 * 2.0));
    CHECK(evaluate(f, -3.0) == Approx(0.5 + 2.0));
}

TEST_CASE("tabulated tables hold their ends", "[constraints]") {
    const auto lin = ConstraintFn::tabulated({0.0, 1.0}, {0.0, 2.0}, fn::Interpolation::Linear);
    const auto step = ConstraintFn::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 5.0}, fn::Interpolation::Step);
    CHECK(evaluate(lin, 0.25) == 0.5);
    CHECK(evaluate(lin, -4.0) == 0.0);
    CHECK(evaluate(lin, 9.0) == 2.0);
    CHECK(evaluate(step, 0.999) == 0.0);
    CHECK(evaluate(step, 1.0) == 2.0);
    CHECK(evaluate(step, 1.5) == 2.0);
    CHECK(evaluate(step, 7.0) == 5.0);
}

TEST_CASE("magnitude bounds and discontinuities", "[constraints]") {
    CHECK(*magnitude_bound(ConstraintFn::saturation(-1.0, 2.0)) == 2.0);
    CHECK(*magnitude_bound(ConstraintFn::scaled_sine(0.8, 1.0)) == Approx(0.8));
    CHECK_FALSE(magnitude_bound(ConstraintFn::affine(0.5, 0.0)).has_value());
    CHECK(*magnitude_bound(catalog::sawtooth_e()) == 3.0);

    CHECK(is_continuous(catalog::sawtooth_e()));
    CHECK(is_continuous(ConstraintFn::scaled_sine(1.0, 0.0)));
    const auto gate = discontinuities(ConstraintFn::gated_identity(-1.0, 2.0));
    CHECK(gate == std::vector<double>{-1.0, 2.0});
    // x = 0 is continuous for a gate whose interval contains the origin only at its end
    CHECK(discontinuities(ConstraintFn::gated_identity(0.0, 2.0)) == std::vector<double>{2.0});
    const auto step = discontinuities(ConstraintFn::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 5.0}, fn::Interpolation::Step));
    CHECK(step == std::vector<double>{1.0, 2.0});
}

TEST_CASE("fixed points of known shapes", "[constraints]") {
    CHECK(fixed_point_set(ConstraintFn::identity()).is_whole());
    CHECK(fixed_point_set(ConstraintFn::affine(-0.5, 0.0)) == IntervalSet::point(0.0));
    CHECK(fixed_point_set(ConstraintFn::affine(1.0, 0.5)).is_empty());
    CHECK(fixed_point_set(ConstraintFn::saturation(-1.0, 1.0)) == IntervalSet::closed(-1.0, 1.0));
    CHECK(fixed_point_set(ConstraintFn::saturation(-3.0, -1.0)) == IntervalSet::closed(-3.0, -1.0));
    CHECK(fixed_point_set(ConstraintFn::interval_projection(2.0, 3.0, 0.5)) == IntervalSet::closed(2.0, 3.0));
    CHECK(fixed_point_set(ConstraintFn::gated_identity(1.0, 2.0)) == IntervalSet({{0.0, 0.0}, {1.0, 2.0}}));
    const auto sine = fixed_point_set(catalog::sine_a());
    REQUIRE(sine.parts().size() == 1);
    CHECK(std::abs(sine.parts()[0].lo) < 1e-9);
}

TEST_CASE("fixed-point sets match a sign-change scan", "[constraints][oracle]") {
    for (const auto& f : oracle::catalog_zoo()) {
        const auto set = fixed_point_set(f);
        INFO(f.name() << ": " << constraint_summary(f));
        CHECK(oracle::fixed_point_mismatch(f, set) == "");
    }
}

TEST_CASE("difference quotients bound every chord", "[constraints][oracle]") {
    const Interval region{-5.0, 5.0};
    for (const auto& f : oracle::catalog_zoo()) {
        INFO(f.name() << ": " << constraint_summary(f));
        const auto q = difference_quotient_bounds(f, region);
        const auto c = oracle::chord_slopes([&](double x) { return evaluate(f, x); }, region.lo, region.hi, 2000);
        // sampled bounds are grid estimates, good to about one grid step of curvature
        const double eps = q.exact ? 1e-9 : 2e-3;
        CHECK(q.lo <= c.lo + eps);
        CHECK(c.hi <= q.hi + eps);
        if (q.exact && std::isfinite(q.lo) && std::isfinite(q.hi)) {
            // knots sit on the grid, so the extreme pieces are hit exactly
            CHECK(c.lo == Approx(q.lo).margin(1e-9));
            CHECK(c.hi == Approx(q.hi).margin(1e-9));
        }
        if (!q.exact) {
            CHECK(c.lo == Approx(q.lo).margin(eps));
            CHECK(c.hi == Approx(q.hi).margin(eps));
        }
        const auto env = slope_envelope(f);
        CHECK(env.lo <= q.lo + eps);
        CHECK(q.hi <= env.hi + eps);
    }
}

TEST_CASE("jumps make the quotient unbounded", "[constraints]") {
    // both gate edges drop toward 0 going right
    const auto q = difference_quotient_bounds(ConstraintFn::gated_identity(-1.0, 2.0), {-5.0, 5.0});
    CHECK(q.lo == -kInf);
    CHECK(q.hi == 1.0);
    const auto up = difference_quotient_bounds(ConstraintFn::gated_identity(1.0, 2.0), {-5.0, 5.0});
    CHECK(up.hi == kInf);
}

TEST_CASE("sampled quotients need a bounded window", "[constraints]") {
    try {
        difference_quotient_bounds(ConstraintFn::scaled_sine(1.0, 0.0), {-kInf, kInf});
        FAIL("expected an error");
    } catch (const ConstraintError& e) {
        CHECK(e.kind() == ConstraintError::Kind::UnboundedRegion);
    }
}

namespace {

struct SectorTruth {
    bool lower = true, box = true, upper = true;
};

// Conditions checked pointwise on a fine grid.
SectorTruth sector_by_grid(const ConstraintFn& f, const BoxRaySpec& s, double reach) {
    SectorTruth t;
    const double step = 1e-3;
    for (double x = s.lower - reach; x <= s.upper + reach; x += step) {
        const double y = evaluate(f, x);
        if (x < s.lower) {
            if (!(x <= y && y < s.ray_lower(x))) t.lower = false;
        } else if (x > s.upper) {
            if (!(s.ray_upper(x) < y && y <= x)) t.upper = false;
        } else if (!(s.lower <= y && y <= s.upper)) {
            t.box = false;
        }
    }
    return t;
}

}  // namespace

TEST_CASE("exact sector checks agree with a pointwise grid", "[constraints][oracle]") {
    SplitMix64 rng(5);
    int failures_seen = 0, passes_seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<fn::Knot> knots;
        double x = rng.uniform(-3.0, -1.0);
        for (int k = 0; k < 4; ++k) {
            knots.push_back({x, rng.uniform(-2.0, 2.0)});
            x += rng.uniform(0.3, 1.5);
        }
        const double left = rng.uniform(-1.5, 0.5), right = rng.uniform(-1.5, 0.5);
        const double lo = rng.uniform(-1.5, 0.0), hi = rng.uniform(0.0, 1.5);
        const double k1 = rng.uniform(-1.5, -0.5);
        BoxRaySpec spec{lo, hi, rng.uniform(lo, hi), k1, 1.0 / k1};
        // keep tails away from the rays so any crossing happens inside the grid
        if (std::abs(left - spec.k1) < 0.05 || std::abs(right - spec.k2) < 0.05) continue;
        const auto f = ConstraintFn::piecewise_linear(knots, left, right);
        const auto want = sector_by_grid(f, spec, 60.0);
        const auto got = sector_membership(f, spec, {}, 10.0);
        REQUIRE(got.exact);
        INFO("trial " << trial);
        CHECK(got.lower.pass == want.lower);
        CHECK(got.box.pass == want.box);
        CHECK(got.upper.pass == want.upper);
        (want.lower && want.box && want.upper) ? ++passes_seen : ++failures_seen;
    }
    CHECK(passes_seen > 0);
    CHECK(failures_seen > 0);
}

TEST_CASE("the unit-slope reference rays fail exactly on the boundary", "[constraints]") {
    // f(x) = -x + 2 anchor 1 above the box meets L2 everywhere: strict bound broken
    const BoxRaySpec spec{0.0, 1.0, 1.0, -1.0, -1.0};
    const auto on_ray = ConstraintFn::piecewise_linear({{0.0, 1.0}, {1.0, 1.0}}, 0.0, -1.0);
    auto r = sector_membership(on_ray, spec, {}, 10.0);
    CHECK_FALSE(r.upper.pass);
    const auto inside = ConstraintFn::piecewise_linear({{0.0, 1.0}, {1.0, 1.0}}, 0.0, -0.9);
    CHECK(sector_membership(inside, spec, {}, 10.0).upper.pass);
}

TEST_CASE("slope bounds toward an anchor", "[constraints]") {
    const auto a = sector_slope_bound(ConstraintFn::affine(-0.5, 0.0), 0.0, {0.0, kInf}, {}, 10.0);
    CHECK(a.value == Approx(-0.5));
    CHECK(a.attained);
    // sin(x + pi) / x stays above -1 and reaches it only in the limit
    const auto s = sector_slope_bound(ConstraintFn::scaled_sine(1.0, std::numbers::pi), 0.0, {0.0, kInf}, {}, 10.0);
    CHECK(s.value == Approx(-1.0).margin(1e-12));
    CHECK_FALSE(s.attained);
    const auto left = sector_slope_bound(catalog::boundary_ray_d(), 0.0, {-kInf, 0.0}, {}, 10.0);
    CHECK(left.value == Approx(-1.0));
    CHECK_FALSE(left.attained);
}
