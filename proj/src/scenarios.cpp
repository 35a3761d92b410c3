#include "tcc/scenarios.hpp"

#include "tcc/rng.hpp"

#include <cmath>
#include <numbers>

namespace tcc {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::ConsensusIn: return "consensus_in";
        case Outcome::UniqueEquilibrium: return "unique_equilibrium";
        case Outcome::MultipleEquilibria: return "multiple_equilibria";
        case Outcome::StaysOffBox: return "stays_off_box";
        case Outcome::NoConsensus: return "no_consensus";
    }
    return "?";
}

namespace catalog {

ConstraintFn sine_a() { return ConstraintFn::scaled_sine(0.8, std::numbers::pi); }
ConstraintFn saturation_b() { return ConstraintFn::saturation(-1.0, 1.0); }
ConstraintFn affine_c() { return ConstraintFn::affine(-0.5, 0.0); }

// Tails approach slopes -1 and -0.8 from inside the sectors.
ConstraintFn boundary_ray_d() {
    return ConstraintFn::piecewise_linear({{-1.0, 0.5}, {0.0, 0.0}, {1.0, -0.5}}, -1.0, -0.8);
}

ConstraintFn sawtooth_e() {
    return ConstraintFn::piecewise_linear(
        {{-6.0, 1.0}, {-4.0, 3.0}, {-2.0, 1.0}, {0.0, 0.0}, {2.0, -1.0}, {4.0, -3.0}, {6.0, -1.0}}, 0.0, 0.0);
}

}  // namespace catalog

namespace {

using M = std::vector<std::vector<double>>;

M complete(std::size_t n, double w = 1.0) {
    M a(n, std::vector<double>(n, w));
    for (std::size_t i = 0; i < n; ++i) a[i][i] = 0.0;
    return a;
}

M example1_matrix() {
    return {{0, 0, 3.6, 0, 0},
            {0, 0, 4.6, 1.3, 6.5},
            {3.6, 0, 0, 0, 7.6},
            {0.5, 1.4, 2.1, 0, 0},
            {2.9, 6.5, 0, 0, 0}};
}

// Every transmission from agent j uses per_sender[j].
System by_sender(const M& a, const std::vector<ConstraintFn>& per_sender) {
    auto g = Digraph::build(a);
    std::vector<EdgeConstraint> edges;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j : g.in_neighbors(i)) edges.push_back({j, i, per_sender[j]});
    return System::build(std::move(g), std::move(edges));
}

System uniform(const M& a, const ConstraintFn& f) {
    return by_sender(a, std::vector<ConstraintFn>(a.size(), f));
}

std::vector<Interval> cube(std::size_t n, double lo, double hi) { return std::vector<Interval>(n, {lo, hi}); }

IntegrationSpec fixed_step(double dt, double t_final, std::size_t stride) {
    return {dt, t_final, Method::RK4, stride};
}

Scenario ex1() {
    using namespace catalog;
    const auto a = sine_a(), b = saturation_b(), c = affine_c(), d = boundary_ray_d(), e = sawtooth_e();
    // Cell (i, j) of the configuration table acts on x_j inside agent i's sum.
    std::vector<EdgeConstraint> edges = {
        {2, 0, ConstraintFn::mix(b, d)},
        {2, 1, a},
        {3, 1, b},
        {4, 1, ConstraintFn::mix(e, a)},
        {0, 2, d},
        {4, 2, c},
        {0, 3, a},
        {1, 3, b},
        {2, 3, ConstraintFn::mix(c, d)},
        {0, 4, c},
        {1, 4, e},
    };
    Expectation x{Verdict::Consensus, Outcome::ConsensusIn, {-1e-3, 1e-3}};
    return {"ex1", "five agents, mixed catalog, consensus zone {0}",
            System::build(Digraph::build(example1_matrix()), std::move(edges)),
            {cube(5, -10.0, 10.0), 20}, fixed_step(1e-3, 50.0, 100), x, std::nullopt};
}

std::vector<ConstraintFn> example2_catalog() {
    return {
        ConstraintFn::saturation(-1.0, 1.0),
        ConstraintFn::piecewise_linear({{-1.0, -1.0}, {1.0, 1.0}}, -0.8, -0.8),
        ConstraintFn::interval_projection(-1.0, 1.0, 0.5),
        ConstraintFn::piecewise_linear({{-3.0, 0.0}, {-1.0, -1.0}, {1.0, 1.0}, {3.0, 0.0}}, 0.0, 0.0),
        ConstraintFn::piecewise_linear(
            {{-4.0, 0.0}, {-2.0, 1.2}, {-1.0, -1.0}, {1.0, 1.0}, {2.0, -1.2}, {4.0, 0.0}}, 0.0, 0.0),
    };
}

Scenario ex2() {
    Expectation x{Verdict::Consensus, Outcome::ConsensusIn, {-1.0 - 1e-3, 1.0 + 1e-3}};
    return {"ex2", "complete graph, consensus zone [-1, 1]", by_sender(complete(5), example2_catalog()),
            {cube(5, -5.0, 5.0), 20}, fixed_step(1e-3, 50.0, 100), x, std::nullopt};
}

Scenario ex3() {
    std::vector<ConstraintFn> fs = {
        ConstraintFn::affine(0.5, 1.0),
        ConstraintFn::affine(-0.5, -1.0),
        ConstraintFn::interval_projection(2.0, 3.0, 0.5),
        ConstraintFn::scaled_sine(0.5, 1.0),
        ConstraintFn::saturation(-3.0, -1.0),
    };
    Expectation x{Verdict::UniqueEquilibrium, Outcome::UniqueEquilibrium};
    return {"ex3", "complete graph, empty consensus zone, one stable equilibrium", by_sender(complete(5), fs),
            {cube(5, -5.0, 5.0), 10}, fixed_step(1e-3, 50.0, 100), x, std::nullopt};
}

// x + m on [-2, 2] with slope -0.5 outside, continuous.
ConstraintFn shifted_identity(double m) {
    return ConstraintFn::piecewise_linear({{-2.0, -2.0 + m}, {2.0, 2.0 + m}}, -0.5, -0.5);
}

Scenario ex4() {
    std::vector<ConstraintFn> fs;
    for (double m : {0.2, -0.1, 0.1, -0.3, 0.1}) fs.push_back(shifted_identity(m));
    Expectation x{Verdict::EquilibriumExists, Outcome::MultipleEquilibria};
    return {"ex4", "complete graph, unit-slope pieces with offsets, equilibria depend on x0",
            by_sender(complete(5), fs), {cube(5, -5.0, 5.0), 10}, fixed_step(1e-3, 50.0, 100), x, std::nullopt};
}

Scenario interval() {
    std::vector<ConstraintFn> fs = {
        ConstraintFn::interval_projection(-1.0, 1.0, 0.3),
        ConstraintFn::interval_projection(-0.5, 1.5, 0.5),
        ConstraintFn::interval_projection(-2.0, 0.5, 0.7),
        ConstraintFn::interval_projection(0.0, 2.0, 0.4),
        ConstraintFn::interval_projection(-1.5, 0.8, 0.6),
    };
    Expectation x{Verdict::Consensus, Outcome::ConsensusIn, {-1e-3, 0.5 + 1e-3}};
    return {"interval", "smooth interval consensus on the first example's graph", by_sender(example1_matrix(), fs),
            {cube(5, -10.0, 10.0), 5}, fixed_step(1e-3, 50.0, 100), x, std::nullopt};
}

Scenario discarded() {
    Expectation x{Verdict::Consensus, Outcome::ConsensusIn, {-1.0 - 1e-3, 2.0 + 1e-3}};
    return {"discarded", "states outside [-1, 2] are dropped by the receiver",
            uniform(complete(5), ConstraintFn::gated_identity(-1.0, 2.0)), {cube(5, -5.0, 5.0), 5},
            fixed_step(1e-3, 30.0, 100), x, std::nullopt};
}

Scenario sine() {
    Expectation x{Verdict::Consensus, Outcome::ConsensusIn, {-1e-3, 1e-3}};
    return {"sine", "sin(x + pi) on every edge", uniform(complete(5), ConstraintFn::scaled_sine(1.0, std::numbers::pi)),
            {cube(5, -3.0, 3.0), 5}, fixed_step(1e-3, 50.0, 100), x, std::nullopt};
}

// Agent 2 hears f(x_1) = 1.5 = upper + omega from agent 1 at rest at 0, and
// agent 1 hears 0 from everyone, so neither moves.
Scenario necessity() {
    M a = {{0.0, 1.0}, {1.0, 0.0}};
    std::vector<EdgeConstraint> edges = {
        {0, 1, ConstraintFn::piecewise_linear({{-1.0, -1.0}, {0.0, 1.5}, {1.0, 1.0}}, 1.0, 1.0)},
        {1, 0, ConstraintFn::affine(0.0, 0.0)},
    };
    Expectation x{Verdict::Inconclusive, Outcome::StaysOffBox};
    x.omega = 0.5;
    return {"necessity-2agent", "range condition broken by omega = 0.5 at one point",
            System::build(Digraph::build(a), std::move(edges)), {{{0.0, 0.0}, {1.5, 1.5}}, 1},
            fixed_step(1e-3, 20.0, 100), x, BoxRaySpec{-1.0, 1.0, 0.0, -1.0, -1.0}};
}

Scenario bipartite() {
    M a(5, std::vector<double>(5, 0.0));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            if ((i < 2) != (j < 2)) a[i][j] = 1.0;
    Expectation x{Verdict::Inconclusive, Outcome::NoConsensus};
    std::vector<Interval> boxes = {{2.0, 3.0}, {2.0, 3.0}, {-3.0, -2.0}, {-3.0, -2.0}, {-3.0, -2.0}};
    return {"bipartite", "sign-flipping edges across a two-block split", uniform(a, ConstraintFn::affine(-1.0, 0.0)),
            {boxes, 20}, fixed_step(1e-3, 30.0, 100), x, std::nullopt};
}

}  // namespace

const std::vector<Scenario>& builtin_scenarios() {
    static const std::vector<Scenario> all = [] {
        std::vector<Scenario> v;
        v.push_back(ex1());
        v.push_back(ex2());
        v.push_back(ex3());
        v.push_back(ex4());
        v.push_back(interval());
        v.push_back(discarded());
        v.push_back(sine());
        v.push_back(necessity());
        v.push_back(bipartite());
        return v;
    }();
    return all;
}

const Scenario& find_scenario(std::string_view name) {
    for (const auto& s : builtin_scenarios())
        if (s.name == name) return s;
    throw ScenarioError("unknown scenario '" + std::string(name) + "'");
}

std::vector<std::vector<double>> draw_x0(const X0Policy& policy, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < policy.runs; ++r) {
        std::vector<double> x;
        for (const auto& b : policy.boxes) x.push_back(b.is_point() ? b.lo : rng.uniform(b.lo, b.hi));
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace tcc
