#include "tcc/analysis.hpp"

#include "tcc/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tcc {

bool BoxRaySpec::valid() const noexcept { return lower <= anchor && anchor <= upper; }

bool BoxRaySpec::unit_product() const noexcept {
    return k1 < 0.0 && k2 < 0.0 && std::abs(k1 * k2 - 1.0) <= 1e-12;
}

bool EquilibriumRaySpec::valid() const noexcept {
    return k1 < 0.0 && k2 < 0.0 && std::abs(k1 * k2 - 1.0) <= 1e-12;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double nudge(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

IntervalSet consensus_zone(const System& system) {
    IntervalSet zone = IntervalSet::whole();
    double tol = 0.0;
    for (const auto& e : system.edges()) {
        const auto theta = fixed_point_set(e.f);
        tol = std::max(tol, theta.tolerance());
        zone = zone.intersect(theta);
    }
    zone.set_tolerance(tol);
    return zone;
}

GeometryReport ray_geometry_check(const BoxRaySpec& spec) {
    GeometryReport r;
    r.diameter = spec.upper - spec.lower;
    const double upper_term = (1.0 - spec.k2) * (spec.upper - spec.anchor);
    const double lower_term = (1.0 - spec.k1) * (spec.anchor - spec.lower);
    r.min_branch = std::min(upper_term, lower_term);
    r.max_branch = std::max(upper_term, lower_term);
    const double slack = 1e-12 * std::max(1.0, std::abs(r.max_branch));
    r.meets_min = r.diameter >= r.min_branch - slack;
    r.meets_max = r.diameter >= r.max_branch - slack;
    return r;
}

bool exterior_condition_holds(const System& system, double lower, double upper) {
    // Points outside the box that every edge either fixes or jumps at.
    IntervalSet stuck = IntervalSet::whole();
    for (const auto& e : system.edges()) {
        std::vector<Interval> parts = fixed_point_set(e.f).parts();
        for (double d : discontinuities(e.f)) parts.push_back({d, d});
        stuck = stuck.intersect(IntervalSet(std::move(parts)));
        if (stuck.is_empty()) return true;
    }
    return std::none_of(stuck.parts().begin(), stuck.parts().end(),
                        [&](const Interval& p) { return p.lo < lower || p.hi > upper; });
}

// ---------------------------------------------------------------------------
// Ray search

namespace {

struct SideBound {
    double value = kInf;
    bool attained = false;
    bool exact = true;
};

struct Slopes {
    SideBound lower;  // inf of (f(x) - anchor)/(x - anchor) below the box
    SideBound upper;  // same above the box
};

// Largest |f| over sampled edges, used to size the window for them.
std::optional<double> sampled_bound(const System& system, bool& any_sampled) {
    double b = 0.0;
    any_sampled = false;
    for (const auto& e : system.edges()) {
        if (piecewise_form(e.f)) continue;
        any_sampled = true;
        const auto m = magnitude_bound(e.f);
        if (!m) return std::nullopt;
        b = std::max(b, *m);
    }
    return b;
}

// Beyond this distance from the anchor a bounded f sits inside both sectors
// automatically, so the grid only has to cover the window.
double horizon_for(double bound, double anchor, double width, double k1, double k2) {
    double stretch = 1.0;
    for (double k : {k1, k2})
        if (k < 0.0) stretch = std::max(stretch, 1.0 / std::abs(k));
    return 1.0 + std::max(width, (bound + std::abs(anchor)) * stretch + std::abs(anchor));
}

Slopes edge_slopes(const System& system, double lower, double upper, double anchor, SamplingGrid grid,
                   double horizon) {
    Slopes s;
    auto merge = [](SideBound& into, const SlopeBound& b, bool exact) {
        if (b.value < into.value) {
            into.value = b.value;
            into.attained = b.attained;
        } else if (b.value == into.value && b.attained) {
            into.attained = true;
        }
        into.exact = into.exact && exact;
    };
    for (const auto& e : system.edges()) {
        const bool exact = piecewise_form(e.f).has_value();
        merge(s.lower, sector_slope_bound(e.f, anchor, {-kInf, lower}, grid, horizon), exact);
        merge(s.upper, sector_slope_bound(e.f, anchor, {upper, kInf}, grid, horizon), exact);
    }
    return s;
}

bool all_sectors_pass(const System& system, const BoxRaySpec& spec, SamplingGrid grid, double horizon,
                      BoxRule rule) {
    return std::all_of(system.edges().begin(), system.edges().end(), [&](const EdgeConstraint& e) {
        return sector_membership(e.f, spec, grid, horizon, rule).all_pass();
    });
}

struct Candidate {
    BoxRaySpec spec;
    bool geometry_max = false;
    double score = kInf;  // lower is better
};

// Slope below every ratio on one side: the infimum itself when it is only a
// limit, slightly less when some point attains it.
double slope_under(const SideBound& b) { return b.attained ? b.value - nudge(b.value) : b.value; }

std::optional<std::pair<double, double>> consensus_slopes(const Slopes& s) {
    if (s.lower.value == -kInf || s.upper.value == -kInf) return std::nullopt;
    double k1 = slope_under(s.lower);
    double k2 = slope_under(s.upper);
    // A non-negative bound leaves room for any negative slope on that side.
    const bool free1 = !(k1 < 0.0), free2 = !(k2 < 0.0);
    if (free1 && free2) return std::make_pair(-0.5, -0.5);
    if (free1) k1 = -0.5 / std::max(1.0, std::abs(k2));
    if (free2) k2 = -0.5 / std::max(1.0, std::abs(k1));
    return std::make_pair(k1, k2);
}

struct Range {
    double lo = -kInf, hi = 0.0;
    bool lo_closed = false, hi_closed = false;

    bool holds(double x) const {
        return (lo_closed ? x >= lo : x > lo) && (hi_closed ? x <= hi : x < hi);
    }
};

// Feasible k1 for k1 k2 = 1 with k1 below every lower ratio and 1/k1 below
// every upper ratio.
std::optional<Range> unit_product_range(const Slopes& s) {
    if (s.lower.value == -kInf || s.upper.value == -kInf) return std::nullopt;
    Range r;
    if (s.lower.value < 0.0) {
        r.hi = s.lower.value;
        r.hi_closed = !s.lower.attained;
    }
    if (s.upper.value < 0.0) {
        r.lo = 1.0 / s.upper.value;
        r.lo_closed = !s.upper.attained;
    }
    if (r.lo > r.hi || (r.lo == r.hi && !(r.lo_closed && r.hi_closed))) return std::nullopt;
    return r;
}

std::optional<double> pick_in(const Range& r, double target) {
    if (r.holds(target)) return target;
    const double mid = std::isfinite(r.lo) ? 0.5 * (r.lo + r.hi) : r.hi - 1.0;
    double cand;
    if (target >= r.hi) cand = r.hi_closed ? r.hi : r.hi - nudge(r.hi);
    else cand = r.lo_closed ? r.lo : r.lo + nudge(r.lo);
    if (!r.holds(cand)) cand = mid;
    if (!r.holds(cand)) return std::nullopt;
    return cand;
}

std::vector<double> anchors_for(double lower, double upper, std::size_t count) {
    if (lower == upper || count < 2) return {0.5 * (lower + upper)};
    std::vector<double> out;
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(lower + (upper - lower) * static_cast<double>(k) / static_cast<double>(count - 1));
    out.back() = upper;
    return out;
}

std::vector<Interval> box_candidates(const System& system, const IntervalSet& zone) {
    std::vector<Interval> boxes;
    auto add = [&](Interval b) {
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi)) return;
        if (std::find(boxes.begin(), boxes.end(), b) == boxes.end()) boxes.push_back(b);
    };
    if (auto h = zone.hull()) add(*h);
    try {
        if (auto box = invariant_box(system)) add({box->lower, box->upper});
    } catch (const EquilibriumError&) {
    }
    IntervalSet all;
    for (const auto& e : system.edges()) all = all.unite(fixed_point_set(e.f));
    if (auto h = all.hull(); h && std::isfinite(h->lo) && std::isfinite(h->hi)) {
        const double c = 0.5 * (h->lo + h->hi);
        const double r = 0.5 * h->width();
        add(*h);
        for (int k = 1; k <= 8; ++k) {
            const double w = std::max(r, 1.0) * std::ldexp(1.0, k);
            add({c - w, c + w});
        }
    }
    return boxes;
}

}  // namespace

RaySearchResult find_admissible_rays(const System& system, RayMode mode, RaySearchOptions options) {
    RaySearchResult result;
    bool any_sampled = false;
    const auto bound = sampled_bound(system, any_sampled);
    result.exact = !any_sampled;
    if (any_sampled && !bound) {
        result.note = "a sampled constraint has no magnitude bound; window cannot be sized";
        return result;
    }
    const double b = bound.value_or(0.0);
    const IntervalSet zone = consensus_zone(system);

    std::vector<Interval> boxes;
    if (mode == RayMode::Consensus) {
        if (zone.is_whole()) {
            result.spec = BoxRaySpec{-kInf, kInf, 0.0, -1.0, -1.0};
            result.exterior_condition = true;
            result.geometry_max = true;
            result.note = "consensus zone is the whole line";
            return result;
        }
        for (const auto& p : zone.parts())
            if (std::isfinite(p.lo) && std::isfinite(p.hi)) boxes.push_back(p);
        if (boxes.empty()) {
            result.note = zone.is_empty() ? "consensus zone is empty" : "consensus zone has only unbounded parts";
            return result;
        }
    } else {
        boxes = box_candidates(system, zone);
    }

    std::optional<Candidate> best;
    for (const auto& box : boxes) {
        const double mid = 0.5 * (box.lo + box.hi);
        std::optional<Candidate> best_here;
        if (mode == RayMode::BoxConvergence) {
            // Range condition does not depend on the rays.
            const BoxRaySpec probe{box.lo, box.hi, mid, -1.0, -1.0};
            const double h = horizon_for(b, mid, box.width(), -1.0, -1.0);
            const bool range_ok = std::all_of(system.edges().begin(), system.edges().end(), [&](const auto& e) {
                return sector_membership(e.f, probe, options.grid, h).box.pass;
            });
            ++result.candidates;
            if (!range_ok) continue;
        }
        for (double anchor : anchors_for(box.lo, box.hi, options.anchors)) {
            ++result.candidates;
            const double h0 = horizon_for(b, anchor, box.width(), -0.5, -0.5);
            const Slopes slopes = edge_slopes(system, box.lo, box.hi, anchor, options.grid, h0);
            Candidate c;
            c.spec = {box.lo, box.hi, anchor, -1.0, -1.0};
            if (mode == RayMode::Consensus) {
                const auto k = consensus_slopes(slopes);
                if (!k || k->first * k->second > 1.0) continue;
                c.spec.k1 = k->first;
                c.spec.k2 = k->second;
                c.geometry_max = ray_geometry_check(c.spec).meets_max;
                c.score = c.spec.k1 * c.spec.k2 + 1e-6 * std::abs(anchor - mid) / std::max(1.0, box.width());
            } else {
                const auto range = unit_product_range(slopes);
                if (!range) continue;
                const double a = anchor - box.lo, bb = box.hi - anchor;
                std::optional<double> k1;
                if (a == 0.0 && bb == 0.0) {
                    k1 = pick_in(*range, -1.0);
                    c.geometry_max = k1.has_value();
                } else if (a > 0.0 && bb > 0.0 && range->holds(-bb / a)) {
                    k1 = -bb / a;
                    c.geometry_max = true;
                } else {
                    k1 = pick_in(*range, -1.0);
                }
                if (!k1) continue;
                c.spec.k1 = *k1;
                c.spec.k2 = 1.0 / *k1;
                c.geometry_max = c.geometry_max && ray_geometry_check(c.spec).meets_max;
                c.score = (c.geometry_max ? 0.0 : 1.0) + std::abs(anchor - mid) / std::max(1.0, box.width());
            }
            const double h = horizon_for(b, anchor, box.width(), c.spec.k1, c.spec.k2);
            const BoxRule rule = mode == RayMode::Consensus ? BoxRule::Identity : BoxRule::Range;
            if (!all_sectors_pass(system, c.spec, options.grid, h, rule)) continue;
            if (!best_here || c.score < best_here->score) best_here = c;
        }
        if (!best_here) continue;
        if (!best || best_here->score < best->score) best = best_here;
        // Earlier boxes are smaller; stop at the first one meeting the max branch.
        if (mode == RayMode::BoxConvergence && best->geometry_max) break;
    }

    if (!best) {
        result.note = "no admissible rays among " + std::to_string(result.candidates) +
                      " candidates; this does not show that none exist";
        return result;
    }
    result.spec = best->spec;
    result.geometry_max = best->geometry_max;
    result.horizon = horizon_for(b, best->spec.anchor, best->spec.width(), best->spec.k1, best->spec.k2);
    result.exterior_condition = exterior_condition_holds(system, best->spec.lower, best->spec.upper);
    result.note = "k1 k2 = " + fmt(best->spec.k1 * best->spec.k2);
    return result;
}

// ---------------------------------------------------------------------------
// Classification

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Consensus: return "Consensus";
        case Verdict::UniqueEquilibrium: return "UniqueEquilibrium";
        case Verdict::EquilibriumExists: return "EquilibriumExists";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::Skipped: return "skipped";
    }
    return "?";
}

const LedgerEntry* TheoremVerdict::find(const std::string& name) const {
    for (const auto& e : ledger)
        if (e.name == name) return &e;
    return nullptr;
}

Verdict decide(const std::vector<LedgerEntry>& ledger) {
    auto pass = [&](const char* name) {
        for (const auto& e : ledger)
            if (e.name == name) return e.status == CheckStatus::Pass;
        return false;
    };
    const bool connected = pass("strongly_connected");
    const bool zone = pass("consensus_zone_nonempty");
    if (connected && zone && (pass("quotient_bounds") || (pass("consensus_rays") && pass("exterior_condition"))))
        return Verdict::Consensus;
    if (connected && !zone && pass("contraction_off_fixed_points")) return Verdict::UniqueEquilibrium;
    if (pass("continuous") && pass("self_mapped_box")) return Verdict::EquilibriumExists;
    return Verdict::Inconclusive;
}

namespace {

// Slopes in (-1, 1], unit slope only where the piece is the identity, and a
// fixed point on every edge.
LedgerEntry contraction_check(const System& system, bool continuous) {
    LedgerEntry entry{"contraction_off_fixed_points", CheckStatus::Pass, ""};
    if (!continuous) return {entry.name, CheckStatus::Fail, "some constraint is discontinuous"};
    for (const auto& e : system.edges()) {
        const std::string where = "edge " + std::to_string(e.from) + "->" + std::to_string(e.to);
        if (fixed_point_set(e.f).is_empty()) return {entry.name, CheckStatus::Fail, where + " has no fixed point"};
        const auto env = slope_envelope(e.f);
        if (!(env.lo > -1.0) || env.hi > 1.0) {
            return {entry.name, CheckStatus::Fail, where + " slopes [" + fmt(env.lo) + ", " + fmt(env.hi) + "]"};
        }
        if (auto form = piecewise_form(e.f)) {
            for (const auto& p : form->pieces) {
                if (p.slope == 1.0 && std::abs(p.intercept) > 1e-13) {
                    return {entry.name, CheckStatus::Fail, where + " has a unit-slope piece off its fixed points"};
                }
            }
        } else if (env.hi >= 1.0) {
            return {entry.name, CheckStatus::Fail, where + " may reach unit slope off its fixed points"};
        }
    }
    return entry;
}

}  // namespace

TheoremVerdict classify_system(const System& system) {
    TheoremVerdict v;
    auto& L = v.ledger;

    const bool connected = is_strongly_connected(system.graph());
    L.push_back({"strongly_connected", connected ? CheckStatus::Pass : CheckStatus::Fail, ""});

    v.zone = consensus_zone(system);
    std::string zone_text;
    for (const auto& p : v.zone.parts()) zone_text += "[" + fmt(p.lo) + ", " + fmt(p.hi) + "]";
    L.push_back({"consensus_zone_nonempty", v.zone.is_empty() ? CheckStatus::Fail : CheckStatus::Pass,
                 zone_text.empty() ? "empty" : zone_text});

    QuotientBounds q{kInf, -kInf, true, 0.0};
    bool continuous = true;
    for (const auto& e : system.edges()) {
        const auto env = slope_envelope(e.f);
        q.lo = std::min(q.lo, env.lo);
        q.hi = std::max(q.hi, env.hi);
        q.exact = q.exact && env.exact;
        continuous = continuous && is_continuous(e.f);
    }
    if (system.edges().empty()) q = {0.0, 0.0, true, 0.0};
    v.quotient = q;
    const bool quotient_ok = q.lo > -1.0 && q.hi <= 1.0;
    L.push_back({"quotient_bounds", quotient_ok ? CheckStatus::Pass : CheckStatus::Fail,
                 "[" + fmt(q.lo) + ", " + fmt(q.hi) + "]" + (q.exact ? "" : " envelope")});

    if (v.zone.is_empty()) {
        L.push_back({"consensus_rays", CheckStatus::Skipped, "consensus zone is empty"});
        L.push_back({"exterior_condition", CheckStatus::Skipped, ""});
    } else {
        const auto rays = find_admissible_rays(system, RayMode::Consensus);
        v.consensus_rays = rays.spec;
        L.push_back({"consensus_rays", rays.spec ? CheckStatus::Pass : CheckStatus::Fail, rays.note});
        if (rays.spec) {
            L.push_back({"exterior_condition", rays.exterior_condition ? CheckStatus::Pass : CheckStatus::Fail, ""});
        } else {
            L.push_back({"exterior_condition", CheckStatus::Skipped, "no rays"});
        }
    }

    L.push_back({"continuous", continuous ? CheckStatus::Pass : CheckStatus::Fail, ""});
    L.push_back(contraction_check(system, continuous));

    std::string box_detail;
    try {
        if (auto box = invariant_box(system)) {
            v.invariant_box = Interval{box->lower, box->upper};
            box_detail = "invariant box [" + fmt(box->lower) + ", " + fmt(box->upper) + "], k* = " + fmt(box->k_star);
        }
    } catch (const EquilibriumError& err) {
        box_detail = err.what();
    }
    const auto box_rays = find_admissible_rays(system, RayMode::BoxConvergence);
    v.box_rays = box_rays.spec;
    if (!v.invariant_box && box_rays.spec) {
        box_detail = "range-invariant box [" + fmt(box_rays.spec->lower) + ", " + fmt(box_rays.spec->upper) + "]";
    }
    L.push_back({"box_rays", box_rays.spec ? CheckStatus::Pass : CheckStatus::Fail, box_rays.note});
    L.push_back({"self_mapped_box", (v.invariant_box || box_rays.spec) ? CheckStatus::Pass : CheckStatus::Fail,
                 box_detail});

    v.verdict = decide(L);
    if (v.verdict == Verdict::UniqueEquilibrium) v.equilibrium_rays = EquilibriumRaySpec{-1.0, -1.0};
    if (v.verdict == Verdict::Inconclusive) {
        for (const auto& e : L) {
            if (e.status == CheckStatus::Fail) {
                v.reason = e.name + (e.detail.empty() ? "" : ": " + e.detail);
                break;
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Monitors

const char* to_string(YTerm t) {
    switch (t) {
        case YTerm::Box: return "box";
        case YTerm::UpperExcess: return "upper_excess";
        case YTerm::LowerExcess: return "lower_excess";
        case YTerm::UpperRay: return "upper_ray";
        case YTerm::LowerRay: return "lower_ray";
    }
    return "?";
}

YValue lyapunov_Y(std::span<const double> state, const BoxRaySpec& spec) {
    if (state.empty()) throw AnalysisError(AnalysisError::Kind::DimensionMismatch, "empty state");
    const auto [mn, mx] = std::minmax_element(state.begin(), state.end());
    const double xm = *mn, xM = *mx;
    const std::pair<YTerm, double> terms[] = {
        {YTerm::Box, spec.upper - spec.lower},
        {YTerm::UpperExcess, xM - spec.lower},
        {YTerm::LowerExcess, spec.upper - xm},
        {YTerm::UpperRay, (1.0 - spec.k2) * (xM - spec.anchor)},
        {YTerm::LowerRay, (1.0 - spec.k1) * (spec.anchor - xm)},
    };
    double top = -kInf;
    for (const auto& t : terms) top = std::max(top, t.second);
    const double tie = 1e-12 * std::max(1.0, std::abs(top));
    for (const auto& t : terms)
        if (t.second >= top - tie) return {top, t.first};
    return {top, YTerm::Box};
}

double lyapunov_V(std::span<const double> state, std::span<const double> e, const EquilibriumRaySpec& spec) {
    if (state.size() != e.size()) {
        throw AnalysisError(AnalysisError::Kind::DimensionMismatch,
                            "state has " + std::to_string(state.size()) + " entries, equilibrium " +
                                std::to_string(e.size()));
    }
    if (!spec.valid()) throw AnalysisError(AnalysisError::Kind::InvalidSpec, "equilibrium rays need k1 k2 = 1, both negative");
    double v = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double eps = state[i] - e[i];
        v = std::max({v, (1.0 - spec.k1) * (-eps), (1.0 - spec.k2) * eps});
    }
    return v;
}

double distance_to_box(std::span<const double> state, double lower, double upper) {
    double sum = 0.0;
    for (double x : state) {
        const double excess = x < lower ? lower - x : (x > upper ? x - upper : 0.0);
        sum += excess * excess;
    }
    return std::sqrt(sum);
}

}  // namespace tcc
