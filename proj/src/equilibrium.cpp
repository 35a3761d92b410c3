#include "tcc/equilibrium.hpp"

#include "tcc/constraints.hpp"
#include "tcc/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace tcc {

const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::Picard: return "picard";
        case SolveMethod::Damped: return "damped";
        case SolveMethod::IntegrationTail: return "integration-tail";
    }
    return "?";
}

double residual(const System& system, std::span<const double> point) {
    std::vector<double> r(point.size());
    rhs_into(system, point, r);
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    return worst;
}

namespace {

struct Attempt {
    std::vector<double> point;
    double residual = kInf;
    std::size_t iterations = 0;
    bool converged = false;
};

// e <- (1 - relax) e + relax G(e), G(e)_i = (1/alpha_i) sum_j a_ij f(e_j).
Attempt relaxed_picard(const System& system, const std::vector<double>& alpha, std::vector<double> e, double relax,
                       double tol, std::size_t budget) {
    const std::size_t n = system.size();
    Attempt best{e, kInf, 0, false};
    std::vector<double> g(n);
    for (std::size_t it = 0; it <= budget; ++it) {
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (const auto& in : system.inputs(i)) sum += in.weight * evaluate(*in.f, e[in.from]);
            g[i] = sum / alpha[i];
            res = std::max(res, std::abs(sum - alpha[i] * e[i]));
        }
        if (!std::isfinite(res)) break;
        if (res < best.residual) best = {e, res, it, false};
        if (res <= tol) {
            best.converged = true;
            return best;
        }
        if (it == budget) break;
        for (std::size_t i = 0; i < n; ++i) e[i] = (1.0 - relax) * e[i] + relax * g[i];
    }
    return best;
}

}  // namespace

Equilibrium solve_equilibrium(const System& system, std::span<const double> seed, SolveOptions options) {
    const std::size_t n = system.size();
    if (seed.size() != n) {
        throw EquilibriumError(EquilibriumError::Kind::DimensionMismatch,
                               "seed has " + std::to_string(seed.size()) + " entries for " + std::to_string(n) +
                                   " agents");
    }
    const RowStats stats = row_stats(system.graph());
    for (std::size_t i = 0; i < n; ++i) {
        if (!(stats.alpha[i] > 0.0)) {
            throw EquilibriumError(EquilibriumError::Kind::NoInEdgeAgent,
                                   "agent " + std::to_string(i) + " has no incoming edge");
        }
    }

    Equilibrium out;
    std::vector<double> start(seed.begin(), seed.end());
    Attempt best;
    for (double relax : {1.0, 0.5, 0.25}) {
        auto a = relaxed_picard(system, stats.alpha, start, relax, options.tol, options.budget);
        if (a.converged) {
            out.point = std::move(a.point);
            out.residual = a.residual;
            out.method = relax == 1.0 ? SolveMethod::Picard : SolveMethod::Damped;
            out.relaxation = relax;
            out.iterations = a.iterations;
            return out;
        }
        out.failed_rungs.push_back(std::string(relax == 1.0 ? "picard" : "damped") + " relax " +
                                   std::to_string(relax) + " best residual " + std::to_string(a.residual));
        if (a.residual < best.residual) best = a;
    }

    // Integrate forward, then polish the endpoint with damped iteration.
    IntegrationSpec spec = default_integration(system, options.tail_horizon);
    if (options.tail_dt > 0.0) spec.dt = options.tail_dt;
    spec.record_stride = static_cast<std::size_t>(std::ceil(options.tail_horizon / spec.dt)) + 1;
    try {
        const Trajectory traj = integrate(system, start, spec);
        auto a = relaxed_picard(system, stats.alpha, traj.states.back(), 0.5, options.tol, options.budget);
        if (a.converged) {
            out.point = std::move(a.point);
            out.residual = a.residual;
            out.method = SolveMethod::IntegrationTail;
            out.relaxation = 0.5;
            out.iterations = a.iterations;
            return out;
        }
        if (a.residual < best.residual) best = a;
        out.failed_rungs.push_back("integration tail best residual " + std::to_string(a.residual));
    } catch (const DynamicsError& err) {
        out.failed_rungs.push_back(std::string("integration tail: ") + err.what());
    }
    throw EquilibriumError(EquilibriumError::Kind::Unconverged,
                           "no rung reached residual " + std::to_string(options.tol), best.point, best.residual);
}

UniquenessReport uniqueness_probe(const System& system, double lower, double upper, std::size_t n_starts, double tol,
                                  std::uint64_t seed) {
    UniquenessReport report;
    report.radius = 1e3 * tol;
    SplitMix64 rng(seed);
    SolveOptions opts;
    opts.tol = tol;
    for (std::size_t s = 0; s < n_starts; ++s) {
        StartOutcome outcome;
        outcome.seed.resize(system.size());
        for (auto& v : outcome.seed) v = rng.uniform(lower, upper);
        try {
            outcome.result = solve_equilibrium(system, outcome.seed, opts);
            const auto& e = outcome.result->point;
            std::size_t c = 0;
            for (; c < report.representatives.size(); ++c) {
                double d = 0.0;
                for (std::size_t i = 0; i < e.size(); ++i) d = std::max(d, std::abs(e[i] - report.representatives[c][i]));
                if (d <= report.radius) break;
            }
            if (c == report.representatives.size()) report.representatives.push_back(e);
            outcome.cluster = c;
        } catch (const EquilibriumError& err) {
            outcome.error = err.what();
            ++report.failures;
        }
        report.starts.push_back(std::move(outcome));
    }
    report.note = report.clusters() == 1 ? "one cluster: evidence of uniqueness, not a proof"
                                         : std::to_string(report.clusters()) + " clusters";
    return report;
}

Interval invariant_box_from(double theta_lo, double theta_hi, double k_star) {
    const double y_lo = (theta_lo + k_star * theta_hi) / (1.0 + k_star);
    return {y_lo, theta_hi + theta_lo - y_lo};
}

namespace {

bool maps_into(const System& system, Interval box) {
    const double mid = 0.5 * (box.lo + box.hi);
    const BoxRaySpec probe{box.lo, box.hi, mid, -1.0, -1.0};
    const double horizon = 0.5 * box.width() + 1.0;
    return std::all_of(system.edges().begin(), system.edges().end(), [&](const EdgeConstraint& e) {
        return sector_membership(e.f, probe, {}, horizon).box.pass;
    });
}

}  // namespace

std::optional<InvariantBox> invariant_box(const System& system) {
    if (system.edges().empty()) return std::nullopt;
    IntervalSet all;
    for (const auto& e : system.edges()) {
        const auto theta = fixed_point_set(e.f);
        if (theta.is_empty()) {
            throw EquilibriumError(EquilibriumError::Kind::EmptyFixedPointSet,
                                   "edge " + std::to_string(e.from) + "->" + std::to_string(e.to) + " fixes no point");
        }
        all = all.unite(theta);
    }
    const auto hull = *all.hull();
    if (!std::isfinite(hull.lo) || !std::isfinite(hull.hi)) return std::nullopt;

    InvariantBox box;
    box.theta_lo = hull.lo;
    box.theta_hi = hull.hi;
    const double c = 0.5 * (hull.lo + hull.hi);
    const double w = hull.width() > 0.0 ? 2.0 * hull.width() : 4.0;
    Interval region{c - w, c + w};

    // The slope floor must hold over the box it produces; widen until it does.
    for (int round = 0; round < 30; ++round) {
        double k_star = kInf, k_hi = -kInf;
        for (const auto& e : system.edges()) {
            const auto q = difference_quotient_bounds(e.f, region);
            k_star = std::min(k_star, q.lo);
            k_hi = std::max(k_hi, q.hi);
        }
        if (k_hi > 1.0 || !(k_star > -1.0 + 1e-9)) return std::nullopt;
        box.k_star = k_star;
        Interval candidate = hull;
        if (k_star >= 0.0) {
            box.hull_fallback = true;
        } else {
            candidate = invariant_box_from(hull.lo, hull.hi, k_star);
        }
        if (region.lo <= candidate.lo && candidate.hi <= region.hi) {
            if (!maps_into(system, candidate)) return std::nullopt;
            box.lower = candidate.lo;
            box.upper = candidate.hi;
            return box;
        }
        const double grow = 0.5 * std::max(candidate.width(), region.width());
        region = {std::min(region.lo, candidate.lo) - grow, std::max(region.hi, candidate.hi) + grow};
    }
    return std::nullopt;
}

}  // namespace tcc
