#include "tcc/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tcc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConstraintError(ConstraintError::Kind::InvalidParameters, what);
}

bool all_finite(std::initializer_list<double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

double scale_of(double x) { return std::max(1.0, std::abs(x)); }

}  // namespace

ConstraintFn ConstraintFn::saturation(double lo, double hi) {
    require(all_finite({lo, hi}) && lo <= hi, "saturation requires finite lo <= hi");
    return ConstraintFn(fn::Saturation{lo, hi});
}

ConstraintFn ConstraintFn::interval_projection(double p, double q, double rho) {
    require(all_finite({p, q, rho}) && p <= q, "interval projection requires finite p <= q");
    require(rho > 0.0 && rho < 1.0, "interval projection requires 0 < rho < 1");
    return ConstraintFn(fn::IntervalProjection{p, q, rho});
}

ConstraintFn ConstraintFn::scaled_sine(double amplitude, double phase) {
    require(all_finite({amplitude, phase}), "scaled sine requires finite parameters");
    return ConstraintFn(fn::ScaledSine{amplitude, phase});
}

ConstraintFn ConstraintFn::piecewise_linear(std::vector<fn::Knot> knots, double left_slope, double right_slope) {
    require(!knots.empty(), "piecewise linear needs at least one knot");
    require(all_finite({left_slope, right_slope}), "piecewise linear tail slopes must be finite");
    for (std::size_t k = 0; k < knots.size(); ++k) {
        require(all_finite({knots[k].x, knots[k].y}), "piecewise linear knots must be finite");
        require(k == 0 || knots[k - 1].x < knots[k].x, "piecewise linear knots must be strictly increasing in x");
    }
    return ConstraintFn(fn::PiecewiseLinear{std::move(knots), left_slope, right_slope});
}

ConstraintFn ConstraintFn::gated_identity(double lo, double hi) {
    require(all_finite({lo, hi}) && lo <= hi, "gated identity requires finite lo <= hi");
    return ConstraintFn(fn::GatedIdentity{lo, hi});
}

ConstraintFn ConstraintFn::tabulated(std::vector<double> xs, std::vector<double> ys, fn::Interpolation rule) {
    require(!xs.empty() && xs.size() == ys.size(), "tabulated needs matching non-empty samples");
    for (std::size_t k = 0; k < xs.size(); ++k) {
        require(all_finite({xs[k], ys[k]}), "tabulated samples must be finite");
        require(k == 0 || xs[k - 1] < xs[k], "tabulated abscissae must be strictly increasing");
    }
    return ConstraintFn(fn::Tabulated{std::move(xs), std::move(ys), rule});
}

ConstraintFn ConstraintFn::mix(ConstraintFn first, ConstraintFn second, double weight) {
    require(std::isfinite(weight) && weight >= 0.0 && weight <= 1.0, "mix weight must lie in [0, 1]");
    return ConstraintFn(fn::Mix{std::make_shared<const ConstraintFn>(std::move(first)),
                                std::make_shared<const ConstraintFn>(std::move(second)), weight});
}

std::string ConstraintFn::name() const {
    return std::visit(overloaded{
                          [](const fn::Identity&) { return std::string("identity"); },
                          [](const fn::Affine&) { return std::string("affine"); },
                          [](const fn::Saturation&) { return std::string("saturation"); },
                          [](const fn::IntervalProjection&) { return std::string("interval_projection"); },
                          [](const fn::ScaledSine&) { return std::string("scaled_sine"); },
                          [](const fn::PiecewiseLinear&) { return std::string("piecewise_linear"); },
                          [](const fn::GatedIdentity&) { return std::string("gated_identity"); },
                          [](const fn::Tabulated&) { return std::string("tabulated"); },
                          [](const fn::Mix&) { return std::string("mix"); },
                      },
                      v_);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
    if (xs[k] == x) return ys[k];
    const double t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + t * (ys[k + 1] - ys[k]);
}

}  // namespace

double evaluate(const ConstraintFn& f, double x) {
    return std::visit(
        overloaded{
            [&](const fn::Identity&) { return x; },
            [&](const fn::Affine& a) { return a.k * x + a.m; },
            [&](const fn::Saturation& s) { return std::clamp(x, s.lo, s.hi); },
            [&](const fn::IntervalProjection& t) {
                if (x > t.q) return t.rho * x + (1.0 - t.rho) * t.q;
                if (x < t.p) return t.rho * x + (1.0 - t.rho) * t.p;
                return x;
            },
            [&](const fn::ScaledSine& s) { return s.amplitude * std::sin(x + s.phase); },
            [&](const fn::PiecewiseLinear& p) {
                const auto& front = p.knots.front();
                const auto& back = p.knots.back();
                if (x <= front.x) return front.y + p.left_slope * (x - front.x);
                if (x >= back.x) return back.y + p.right_slope * (x - back.x);
                const auto it = std::upper_bound(p.knots.begin(), p.knots.end(), x,
                                                 [](double v, const fn::Knot& k) { return v < k.x; });
                const auto& hi = *it;
                const auto& lo = *(it - 1);
                if (lo.x == x) return lo.y;
                const double t = (x - lo.x) / (hi.x - lo.x);
                return lo.y + t * (hi.y - lo.y);
            },
            [&](const fn::GatedIdentity& g) { return (g.lo <= x && x <= g.hi) ? x : 0.0; },
            [&](const fn::Tabulated& t) {
                if (x <= t.xs.front()) return t.ys.front();
                if (x >= t.xs.back()) return t.ys.back();
                if (t.rule == fn::Interpolation::Linear) return interpolate(t.xs, t.ys, x);
                const auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
                return t.ys[static_cast<std::size_t>(it - t.xs.begin()) - 1];
            },
            [&](const fn::Mix& m) {
                return m.weight * evaluate(*m.first, x) + (1.0 - m.weight) * evaluate(*m.second, x);
            },
        },
        f.variant());
}

bool is_gated(const ConstraintFn& f, double x) {
    if (const auto* g = std::get_if<fn::GatedIdentity>(&f.variant())) return !(g->lo <= x && x <= g->hi);
    if (const auto* m = std::get_if<fn::Mix>(&f.variant())) return is_gated(*m->first, x) || is_gated(*m->second, x);
    return false;
}

// ---------------------------------------------------------------------------
// Piecewise-affine forms

namespace {

AffinePiece through(double lo, double hi, double x0, double y0, double slope) {
    return {lo, hi, slope, y0 - slope * x0};
}

AffinePiece chord(double x0, double y0, double x1, double y1) {
    const double s = (y1 - y0) / (x1 - x0);
    return {x0, x1, s, y0 - s * x0};
}

const AffinePiece& piece_containing(const PiecewiseAffine& form, double x) {
    for (const auto& p : form.pieces)
        if (p.lo < x && x < p.hi) return p;
    return form.pieces.back();
}

PiecewiseAffine combine(const PiecewiseAffine& a, const PiecewiseAffine& b, double w) {
    std::vector<double> cuts;
    for (const auto& p : a.pieces)
        if (std::isfinite(p.hi)) cuts.push_back(p.hi);
    for (const auto& p : b.pieces)
        if (std::isfinite(p.hi)) cuts.push_back(p.hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<double> bounds{-kInf};
    bounds.insert(bounds.end(), cuts.begin(), cuts.end());
    bounds.push_back(kInf);

    PiecewiseAffine out;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        const double lo = bounds[k], hi = bounds[k + 1];
        double mid;
        if (std::isfinite(lo) && std::isfinite(hi)) mid = 0.5 * (lo + hi);
        else if (std::isfinite(lo)) mid = lo + 1.0;
        else if (std::isfinite(hi)) mid = hi - 1.0;
        else mid = 0.0;
        const auto& pa = piece_containing(a, mid);
        const auto& pb = piece_containing(b, mid);
        out.pieces.push_back({lo, hi, w * pa.slope + (1.0 - w) * pb.slope,
                              w * pa.intercept + (1.0 - w) * pb.intercept});
    }
    return out;
}

}  // namespace

std::optional<PiecewiseAffine> piecewise_form(const ConstraintFn& f) {
    return std::visit(
        overloaded{
            [](const fn::Identity&) -> std::optional<PiecewiseAffine> {
                return PiecewiseAffine{{{-kInf, kInf, 1.0, 0.0}}};
            },
            [](const fn::Affine& a) -> std::optional<PiecewiseAffine> {
                return PiecewiseAffine{{{-kInf, kInf, a.k, a.m}}};
            },
            [](const fn::Saturation& s) -> std::optional<PiecewiseAffine> {
                PiecewiseAffine out;
                out.pieces.push_back({-kInf, s.lo, 0.0, s.lo});
                if (s.lo < s.hi) out.pieces.push_back({s.lo, s.hi, 1.0, 0.0});
                out.pieces.push_back({s.hi, kInf, 0.0, s.hi});
                return out;
            },
            [](const fn::IntervalProjection& t) -> std::optional<PiecewiseAffine> {
                PiecewiseAffine out;
                out.pieces.push_back({-kInf, t.p, t.rho, (1.0 - t.rho) * t.p});
                if (t.p < t.q) out.pieces.push_back({t.p, t.q, 1.0, 0.0});
                out.pieces.push_back({t.q, kInf, t.rho, (1.0 - t.rho) * t.q});
                return out;
            },
            [](const fn::ScaledSine&) -> std::optional<PiecewiseAffine> { return std::nullopt; },
            [](const fn::PiecewiseLinear& p) -> std::optional<PiecewiseAffine> {
                PiecewiseAffine out;
                const auto& ks = p.knots;
                out.pieces.push_back(through(-kInf, ks.front().x, ks.front().x, ks.front().y, p.left_slope));
                for (std::size_t k = 0; k + 1 < ks.size(); ++k)
                    out.pieces.push_back(chord(ks[k].x, ks[k].y, ks[k + 1].x, ks[k + 1].y));
                out.pieces.push_back(through(ks.back().x, kInf, ks.back().x, ks.back().y, p.right_slope));
                return out;
            },
            [](const fn::GatedIdentity& g) -> std::optional<PiecewiseAffine> {
                PiecewiseAffine out;
                out.pieces.push_back({-kInf, g.lo, 0.0, 0.0});
                if (g.lo < g.hi) out.pieces.push_back({g.lo, g.hi, 1.0, 0.0});
                out.pieces.push_back({g.hi, kInf, 0.0, 0.0});
                return out;
            },
            [](const fn::Tabulated& t) -> std::optional<PiecewiseAffine> {
                PiecewiseAffine out;
                out.pieces.push_back({-kInf, t.xs.front(), 0.0, t.ys.front()});
                for (std::size_t k = 0; k + 1 < t.xs.size(); ++k) {
                    if (t.rule == fn::Interpolation::Linear)
                        out.pieces.push_back(chord(t.xs[k], t.ys[k], t.xs[k + 1], t.ys[k + 1]));
                    else
                        out.pieces.push_back({t.xs[k], t.xs[k + 1], 0.0, t.ys[k]});
                }
                out.pieces.push_back({t.xs.back(), kInf, 0.0, t.ys.back()});
                return out;
            },
            [](const fn::Mix& m) -> std::optional<PiecewiseAffine> {
                auto a = piecewise_form(*m.first);
                auto b = piecewise_form(*m.second);
                if (!a || !b) return std::nullopt;
                return combine(*a, *b, m.weight);
            },
        },
        f.variant());
}

namespace {

bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

struct Breakpoint {
    double x;
    double left;   // limit from the left
    double right;  // limit from the right
    double value;
};

std::vector<Breakpoint> breakpoints(const ConstraintFn& f, const PiecewiseAffine& form) {
    std::vector<Breakpoint> out;
    for (std::size_t k = 0; k + 1 < form.pieces.size(); ++k) {
        const double x = form.pieces[k].hi;
        out.push_back({x, form.pieces[k].at(x), form.pieces[k + 1].at(x), evaluate(f, x)});
    }
    return out;
}

bool is_jump(const Breakpoint& b) { return !nearly_equal(b.left, b.value) || !nearly_equal(b.right, b.value); }

}  // namespace

// Fixed points of a bounded f lie in [-bound, bound].
std::optional<double> magnitude_bound(const ConstraintFn& f) {
    return std::visit(
        overloaded{
            [](const fn::Identity&) -> std::optional<double> { return std::nullopt; },
            [](const fn::Affine& a) -> std::optional<double> {
                if (a.k == 0.0) return std::abs(a.m);
                return std::nullopt;
            },
            [](const fn::Saturation& s) -> std::optional<double> { return std::max(std::abs(s.lo), std::abs(s.hi)); },
            [](const fn::IntervalProjection&) -> std::optional<double> { return std::nullopt; },
            [](const fn::ScaledSine& s) -> std::optional<double> { return std::abs(s.amplitude); },
            [](const fn::PiecewiseLinear& p) -> std::optional<double> {
                if (p.left_slope != 0.0 || p.right_slope != 0.0) return std::nullopt;
                double b = 0.0;
                for (const auto& k : p.knots) b = std::max(b, std::abs(k.y));
                return b;
            },
            [](const fn::GatedIdentity& g) -> std::optional<double> { return std::max(std::abs(g.lo), std::abs(g.hi)); },
            [](const fn::Tabulated& t) -> std::optional<double> {
                double b = 0.0;
                for (double y : t.ys) b = std::max(b, std::abs(y));
                return b;
            },
            [](const fn::Mix& m) -> std::optional<double> {
                auto a = magnitude_bound(*m.first);
                auto b = magnitude_bound(*m.second);
                if (!a || !b) return std::nullopt;
                return m.weight * *a + (1.0 - m.weight) * *b;
            },
        },
        f.variant());
}

std::vector<double> discontinuities(const ConstraintFn& f) {
    if (auto form = piecewise_form(f)) {
        std::vector<double> out;
        for (const auto& b : breakpoints(f, *form))
            if (is_jump(b)) out.push_back(b.x);
        return out;
    }
    if (const auto* m = std::get_if<fn::Mix>(&f.variant())) {
        auto out = discontinuities(*m->first);
        auto more = discontinuities(*m->second);
        out.insert(out.end(), more.begin(), more.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    return {};
}

bool is_continuous(const ConstraintFn& f) { return discontinuities(f).empty(); }

// ---------------------------------------------------------------------------
// Fixed-point sets

namespace {

IntervalSet exact_fixed_points(const ConstraintFn& f, const PiecewiseAffine& form) {
    std::vector<Interval> parts;
    for (const auto& p : form.pieces) {
        if (p.slope == 1.0) {
            if (std::abs(p.intercept) <= 1e-13) parts.push_back({p.lo, p.hi});
            continue;
        }
        const double root = p.intercept / (1.0 - p.slope);
        if (p.lo < root && root < p.hi &&
            std::abs(evaluate(f, root) - root) <= kAnalyticFixedPointTol * scale_of(root))
            parts.push_back({root, root});
    }
    for (const auto& b : breakpoints(f, form)) {
        if (std::abs(b.value - b.x) <= kAnalyticFixedPointTol * scale_of(b.x)) parts.push_back({b.x, b.x});
    }
    return IntervalSet(std::move(parts), kAnalyticFixedPointTol);
}

IntervalSet bisection_fixed_points(const ConstraintFn& f, const IntervalSet& domain) {
    const double radius = magnitude_bound(f).value_or(1e3);
    const auto window = domain.intersect(IntervalSet::closed(-radius, radius));
    const auto jumps = discontinuities(f);
    auto g = [&](double x) { return evaluate(f, x) - x; };

    std::vector<Interval> roots;
    for (const auto& part : window.parts()) {
        if (part.is_point()) {
            if (std::abs(g(part.lo)) <= kBisectionFixedPointTol) roots.push_back(part);
            continue;
        }
        const auto steps = static_cast<std::size_t>(
            std::clamp(std::ceil(part.width() / 1e-3), 2000.0, 2e6));
        const double h = part.width() / static_cast<double>(steps);
        double best_x = 0.0, best_g = kInf;
        bool in_run = false;
        auto flush = [&] {
            if (in_run) roots.push_back({best_x, best_x});
            in_run = false;
            best_g = kInf;
        };
        double x0 = part.lo, g0 = g(x0);
        for (std::size_t k = 0; k <= steps; ++k) {
            if (std::abs(g0) <= kBisectionFixedPointTol * scale_of(x0)) {
                if (std::abs(g0) < best_g) {
                    best_g = std::abs(g0);
                    best_x = x0;
                }
                in_run = true;
            } else {
                flush();
            }
            if (k == steps) break;
            const double x1 = (k + 1 == steps) ? part.hi : part.lo + static_cast<double>(k + 1) * h;
            const double g1 = g(x1);
            const bool strict_change = (g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0);
            if (strict_change && std::abs(g0) > kBisectionFixedPointTol * scale_of(x0) &&
                std::abs(g1) > kBisectionFixedPointTol * scale_of(x1)) {
                double a = x0, b = x1, ga = g0;
                for (int it = 0; it < 200 && b - a > 1e-15 * scale_of(a); ++it) {
                    const double m = 0.5 * (a + b);
                    const double gm = g(m);
                    if ((gm < 0.0) == (ga < 0.0)) {
                        a = m;
                        ga = gm;
                    } else {
                        b = m;
                    }
                }
                const double m = 0.5 * (a + b);
                if (std::abs(g(m)) <= kBisectionFixedPointTol * scale_of(m)) {
                    roots.push_back({m, m});
                } else {
                    const bool crosses_jump = std::any_of(jumps.begin(), jumps.end(),
                                                          [&](double d) { return x0 <= d && d <= x1; });
                    if (!crosses_jump) {
                        throw ConstraintError(ConstraintError::Kind::UnresolvableEnclosure,
                                              "bisection could not certify a fixed point near " + std::to_string(m));
                    }
                }
            }
            x0 = x1;
            g0 = g1;
        }
        flush();
    }
    return IntervalSet(std::move(roots), kBisectionFixedPointTol);
}

}  // namespace

IntervalSet fixed_point_set(const ConstraintFn& f, const IntervalSet& domain) {
    if (domain.is_empty()) {
        throw ConstraintError(ConstraintError::Kind::InvalidParameters, "fixed-point domain must be non-empty");
    }
    if (auto form = piecewise_form(f)) {
        auto theta = exact_fixed_points(f, *form).intersect(domain);
        theta.set_tolerance(kAnalyticFixedPointTol);
        return theta;
    }
    return bisection_fixed_points(f, domain);
}

// ---------------------------------------------------------------------------
// Difference quotients

QuotientBounds difference_quotient_bounds(const ConstraintFn& f, Interval region, SamplingGrid grid) {
    QuotientBounds out{kInf, -kInf, true, 0.0};
    if (region.is_point()) return {0.0, 0.0, true, 0.0};

    if (auto form = piecewise_form(f)) {
        for (const auto& p : form->pieces) {
            if (std::max(p.lo, region.lo) < std::min(p.hi, region.hi)) {
                out.lo = std::min(out.lo, p.slope);
                out.hi = std::max(out.hi, p.slope);
            }
        }
        for (const auto& b : breakpoints(f, *form)) {
            if (!region.contains(b.x)) continue;
            // A jump makes chords across it arbitrarily steep.
            auto steepen = [&](double rise) {
                if (rise > 0.0) out.hi = kInf;
                if (rise < 0.0) out.lo = -kInf;
            };
            if (b.x > region.lo && !nearly_equal(b.left, b.value)) steepen(b.value - b.left);
            if (b.x < region.hi && !nearly_equal(b.right, b.value)) steepen(b.right - b.value);
        }
        return out;
    }

    if (!std::isfinite(region.lo) || !std::isfinite(region.hi)) {
        throw ConstraintError(ConstraintError::Kind::UnboundedRegion,
                              "sampled quotient bounds need a bounded region for " + f.name());
    }
    const double h = grid.fraction * region.width();
    const auto steps = static_cast<std::size_t>(std::ceil(region.width() / h));
    const double step = region.width() / static_cast<double>(steps);
    double x0 = region.lo, y0 = evaluate(f, x0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double x1 = (k == steps) ? region.hi : region.lo + static_cast<double>(k) * step;
        const double y1 = evaluate(f, x1);
        const double q = (y1 - y0) / (x1 - x0);
        out.lo = std::min(out.lo, q);
        out.hi = std::max(out.hi, q);
        x0 = x1;
        y0 = y1;
    }
    for (double d : discontinuities(f)) {
        if (region.contains(d)) {
            out.lo = -kInf;
            out.hi = kInf;
        }
    }
    out.exact = false;
    out.grid_step = step;
    return out;
}

QuotientBounds slope_envelope(const ConstraintFn& f) {
    if (piecewise_form(f)) return difference_quotient_bounds(f, {-kInf, kInf});
    if (const auto* s = std::get_if<fn::ScaledSine>(&f.variant())) {
        const double a = std::abs(s->amplitude);
        return {-a, a, false, 0.0};
    }
    const auto& m = std::get<fn::Mix>(f.variant());
    const auto a = slope_envelope(*m.first);
    const auto b = slope_envelope(*m.second);
    const double w = m.weight;
    return {w * a.lo + (1.0 - w) * b.lo, w * a.hi + (1.0 - w) * b.hi, false, 0.0};
}

// ---------------------------------------------------------------------------
// Sector membership

namespace {

// Requirement h(x) >= 0 (or > 0 when strict) for a linear h(x) = c1 x + c0.
struct LinearRequirement {
    double c1 = 0.0;
    double c0 = 0.0;
    bool strict = false;
};

struct Tracker {
    SectorVerdict verdict;

    void violate(double x) {
        if (verdict.pass || x < *verdict.first_violation) verdict.first_violation = x;
        verdict.pass = false;
    }

    void point(double x, double h, bool strict) {
        if (strict) {
            if (h <= kStrictMargin) violate(x);
        } else if (h < -kStrictMargin) {
            violate(x);
        } else if (h <= kStrictMargin) {
            verdict.contact = true;
        }
    }

    // h linear on the open interval (u, v); u or v may be infinite.
    void segment(double u, double v, const LinearRequirement& r) {
        auto h = [&](double x) { return r.c1 * x + r.c0; };
        auto end_value = [&](double e, bool is_left) {
            if (std::isfinite(e)) return h(e);
            if (r.c1 == 0.0) return r.c0;
            // Going to -inf on the left flips the sign of the slope's effect.
            return (is_left ? -r.c1 : r.c1) > 0.0 ? kInf : -kInf;
        };
        const double hu = end_value(u, true);
        const double hv = end_value(v, false);
        auto witness = [&](bool left_end) {
            const double e = left_end ? u : v;
            if (std::isfinite(e)) return e;
            // Far point on an infinite end where h is already negative.
            const double other = left_end ? v : u;
            const double root = (r.c1 != 0.0) ? -r.c0 / r.c1 : 0.0;
            if (left_end) return std::min(std::isfinite(other) ? other - 1.0 : 0.0, root - 1.0);
            return std::max(std::isfinite(other) ? other + 1.0 : 0.0, root + 1.0);
        };
        if (hu < -kStrictMargin) {
            violate(witness(true));
        } else if (hv < -kStrictMargin) {
            violate(witness(false));
        } else if (hu <= kStrictMargin && hv <= kStrictMargin) {
            // h vanishes identically on the segment.
            if (r.strict) violate(std::isfinite(u) ? u : witness(false));
            else verdict.contact = true;
        } else if (!r.strict && (hu <= kStrictMargin || hv <= kStrictMargin)) {
            verdict.contact = true;
        }
    }
};

template <class MakeRequirements>
void check_exact_region(const ConstraintFn& f, const PiecewiseAffine& form, double lo, double hi, bool closed,
                        MakeRequirements make, Tracker& tracker) {
    if (lo > hi || (lo == hi && !closed)) return;
    if (lo == hi) {
        const double y = evaluate(f, lo);
        for (const auto& r : make(0.0, y)) tracker.point(lo, r.c1 * lo + r.c0, r.strict);
        return;
    }
    for (const auto& p : form.pieces) {
        const double u = std::max(p.lo, lo), v = std::min(p.hi, hi);
        if (u >= v) continue;
        for (const auto& r : make(p.slope, p.intercept)) tracker.segment(u, v, r);
    }
    std::vector<double> pts;
    for (std::size_t k = 0; k + 1 < form.pieces.size(); ++k) {
        const double x = form.pieces[k].hi;
        if (lo < x && x < hi) pts.push_back(x);
    }
    if (closed) {
        pts.push_back(lo);
        pts.push_back(hi);
    }
    for (double x : pts) {
        if (!std::isfinite(x)) continue;
        const double y = evaluate(f, x);
        for (const auto& r : make(0.0, y)) tracker.point(x, r.c1 * x + r.c0, r.strict);
    }
}

}  // namespace

SectorReport sector_membership(const ConstraintFn& f, const BoxRaySpec& spec, SamplingGrid grid, double horizon,
                               BoxRule rule) {
    Tracker lower, box, upper;
    // f(x) = s x + b; each requirement is written as c1 x + c0 (>= or >) 0.
    auto lower_reqs = [&](double s, double b) {
        return std::vector<LinearRequirement>{
            {s - 1.0, b, false},                                         // f(x) - x >= 0
            {spec.k1 - s, spec.anchor * (1.0 - spec.k1) - b, true},      // L1(x) - f(x) > 0
        };
    };
    auto upper_reqs = [&](double s, double b) {
        return std::vector<LinearRequirement>{
            {1.0 - s, -b, false},                                        // x - f(x) >= 0
            {s - spec.k2, b - spec.anchor * (1.0 - spec.k2), true},      // f(x) - L2(x) > 0
        };
    };
    auto box_reqs = [&](double s, double b) {
        if (rule == BoxRule::Identity) {
            return std::vector<LinearRequirement>{{s - 1.0, b, false}, {1.0 - s, -b, false}};
        }
        return std::vector<LinearRequirement>{{s, b - spec.lower, false}, {-s, spec.upper - b, false}};
    };

    SectorReport report;
    if (auto form = piecewise_form(f)) {
        check_exact_region(f, *form, -kInf, spec.lower, false, lower_reqs, lower);
        check_exact_region(f, *form, spec.lower, spec.upper, true, box_reqs, box);
        check_exact_region(f, *form, spec.upper, kInf, false, upper_reqs, upper);
    } else {
        const double lo = spec.anchor - horizon, hi = spec.anchor + horizon;
        const double step = grid.fraction * (hi - lo);
        const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / step));
        std::vector<double> xs;
        xs.reserve(steps + 3);
        for (std::size_t k = 0; k <= steps; ++k) xs.push_back(lo + (hi - lo) * static_cast<double>(k) / steps);
        if (std::isfinite(spec.lower)) xs.push_back(spec.lower);
        if (std::isfinite(spec.upper)) xs.push_back(spec.upper);
        std::sort(xs.begin(), xs.end());
        for (double x : xs) {
            const double y = evaluate(f, x);
            if (x < spec.lower) {
                for (const auto& r : lower_reqs(0.0, y)) lower.point(x, r.c1 * x + r.c0, r.strict);
            } else if (x > spec.upper) {
                for (const auto& r : upper_reqs(0.0, y)) upper.point(x, r.c1 * x + r.c0, r.strict);
            } else {
                for (const auto& r : box_reqs(0.0, y)) box.point(x, r.c1 * x + r.c0, r.strict);
            }
        }
        report.exact = false;
        report.grid_step = step;
    }
    report.lower = lower.verdict;
    report.box = box.verdict;
    report.upper = upper.verdict;
    return report;
}

// ---------------------------------------------------------------------------
// Tightest ray slopes

namespace {

struct SlopeAccumulator {
    SlopeBound bound;

    void offer(double value, bool attained) {
        if (value < bound.value) {
            bound = {value, attained};
        } else if (value == bound.value && attained) {
            bound.attained = true;
        }
    }
};

// Derivative of f at x from the given side (-1 left, +1 right).
double one_sided_slope(const ConstraintFn& f, double x, double side) {
    if (auto form = piecewise_form(f)) {
        for (const auto& p : form->pieces) {
            if ((side < 0.0 && p.lo < x && x <= p.hi) || (side > 0.0 && p.lo <= x && x < p.hi)) return p.slope;
        }
        return form->pieces.back().slope;
    }
    if (const auto* s = std::get_if<fn::ScaledSine>(&f.variant())) return s->amplitude * std::cos(x + s->phase);
    const auto& m = std::get<fn::Mix>(f.variant());
    return m.weight * one_sided_slope(*m.first, x, side) + (1.0 - m.weight) * one_sided_slope(*m.second, x, side);
}

}  // namespace

SlopeBound sector_slope_bound(const ConstraintFn& f, double anchor, Interval region, SamplingGrid grid,
                              double horizon) {
    SlopeAccumulator acc;
    if (region.lo >= region.hi) return acc.bound;
    const double side = (region.hi <= anchor) ? -1.0 : 1.0;

    if (auto form = piecewise_form(f)) {
        for (const auto& p : form->pieces) {
            const double u = std::max(p.lo, region.lo), v = std::min(p.hi, region.hi);
            if (u >= v) continue;
            // Ratio (s x + b - anchor) / (x - anchor) is a Moebius map in x and
            // therefore monotone on the segment; constant when the piece
            // passes through (anchor, anchor).
            const double through_anchor = p.slope * anchor + p.intercept - anchor;
            if (std::abs(through_anchor) <= 1e-13 * scale_of(anchor)) {
                acc.offer(p.slope, true);
                continue;
            }
            for (double e : {u, v}) {
                double limit;
                if (!std::isfinite(e)) {
                    limit = p.slope;
                } else if (e == anchor) {
                    limit = (through_anchor * side > 0.0) ? kInf : -kInf;
                } else {
                    limit = (p.at(e) - anchor) / (e - anchor);
                }
                acc.offer(limit, false);
            }
        }
        for (std::size_t k = 0; k + 1 < form->pieces.size(); ++k) {
            const double x = form->pieces[k].hi;
            if (region.lo < x && x < region.hi) acc.offer((evaluate(f, x) - anchor) / (x - anchor), true);
        }
        return acc.bound;
    }

    const double lo = std::max(region.lo, anchor - horizon);
    const double hi = std::min(region.hi, anchor + horizon);
    if (lo >= hi) return acc.bound;
    const double step = grid.fraction * 2.0 * horizon;
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    for (std::size_t k = 0; k <= steps; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
        if (x == anchor || x <= region.lo || x >= region.hi) continue;
        acc.offer((evaluate(f, x) - anchor) / (x - anchor), true);
    }
    // The grid cannot reach the limit at the anchor itself; when f fixes the
    // anchor that limit is the one-sided derivative.
    const double edge = side < 0.0 ? hi : lo;
    if (edge == anchor) {
        const double gap = evaluate(f, anchor) - anchor;
        if (std::abs(gap) <= kBisectionFixedPointTol * scale_of(anchor)) {
            acc.offer(one_sided_slope(f, anchor, side), false);
        } else {
            acc.offer(gap * side > 0.0 ? kInf : -kInf, false);
        }
    }
    return acc.bound;
}

}  // namespace tcc
