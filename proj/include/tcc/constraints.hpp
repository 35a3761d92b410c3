#pragma once

#include "tcc/box_ray_spec.hpp"
#include "tcc/interval_set.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tcc {

class ConstraintError : public std::runtime_error {
public:
    enum class Kind { InvalidParameters, UnresolvableEnclosure, UnboundedRegion };

    ConstraintError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class ConstraintFn;

namespace fn {

struct Identity {};

/// k x + m
struct Affine {
    double k = 1.0;
    double m = 0.0;
};

/// clamp(x, lo, hi)
struct Saturation {
    double lo = -1.0;
    double hi = 1.0;
};

/// Identity on [p, q], contracted toward the nearer end by rho outside it.
struct IntervalProjection {
    double p = -1.0;
    double q = 1.0;
    double rho = 0.5;
};

/// amplitude * sin(x + phase)
struct ScaledSine {
    double amplitude = 1.0;
    double phase = 0.0;
};

struct Knot {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Knot&, const Knot&) = default;
};

/// Continuous interpolation through knots, extended linearly with the given
/// tail slopes.
struct PiecewiseLinear {
    std::vector<Knot> knots;
    double left_slope = 0.0;
    double right_slope = 0.0;
};

/// x on [lo, hi], 0 elsewhere: the discarded-consensus gate.
struct GatedIdentity {
    double lo = -1.0;
    double hi = 1.0;
};

enum class Interpolation { Linear, Step };

/// Sampled table held constant beyond the first and last sample. Step holds
/// each sample's value until the next sample.
struct Tabulated {
    std::vector<double> xs;
    std::vector<double> ys;
    Interpolation rule = Interpolation::Linear;
};

/// weight * first(x) + (1 - weight) * second(x)
struct Mix {
    std::shared_ptr<const ConstraintFn> first;
    std::shared_ptr<const ConstraintFn> second;
    double weight = 0.5;
};

}  // namespace fn

/// A per-edge transmission constraint drawn from a closed catalog.
class ConstraintFn {
public:
    using Variant = std::variant<fn::Identity, fn::Affine, fn::Saturation, fn::IntervalProjection, fn::ScaledSine,
                                 fn::PiecewiseLinear, fn::GatedIdentity, fn::Tabulated, fn::Mix>;

    ConstraintFn() = default;

    static ConstraintFn identity() { return ConstraintFn(fn::Identity{}); }
    static ConstraintFn affine(double k, double m) { return ConstraintFn(fn::Affine{k, m}); }
    static ConstraintFn saturation(double lo, double hi);
    static ConstraintFn interval_projection(double p, double q, double rho);
    static ConstraintFn scaled_sine(double amplitude, double phase);
    static ConstraintFn piecewise_linear(std::vector<fn::Knot> knots, double left_slope, double right_slope);
    static ConstraintFn gated_identity(double lo, double hi);
    static ConstraintFn tabulated(std::vector<double> xs, std::vector<double> ys, fn::Interpolation rule);
    static ConstraintFn mix(ConstraintFn first, ConstraintFn second, double weight = 0.5);

    const Variant& variant() const noexcept { return v_; }
    std::string name() const;

private:
    explicit ConstraintFn(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

double evaluate(const ConstraintFn& f, double x);

/// True where a gated transmission drops the sender's state.
bool is_gated(const ConstraintFn& f, double x);

/// One affine piece valid on the open interval (lo, hi).
struct AffinePiece {
    double lo = -kInf;
    double hi = kInf;
    double slope = 0.0;
    double intercept = 0.0;

    double at(double x) const noexcept { return slope * x + intercept; }
};

/// Exact piecewise-affine representation covering the real line. Values at the
/// breakpoints come from evaluate(); jumps between pieces are allowed.
struct PiecewiseAffine {
    std::vector<AffinePiece> pieces;
};

/// Available for every variant except ScaledSine and mixes containing it.
std::optional<PiecewiseAffine> piecewise_form(const ConstraintFn& f);

/// sup |f| when f is bounded.
std::optional<double> magnitude_bound(const ConstraintFn& f);

/// Points where f is discontinuous. Exact for piecewise-affine variants,
/// a superset otherwise.
std::vector<double> discontinuities(const ConstraintFn& f);
bool is_continuous(const ConstraintFn& f);

inline constexpr double kAnalyticFixedPointTol = 1e-10;
inline constexpr double kBisectionFixedPointTol = 1e-8;
inline constexpr double kStrictMargin = 1e-12;

/// Theta = {x in domain : f(x) = x}. Exact for piecewise-affine variants,
/// bracketing plus bisection otherwise (tolerance recorded on the result).
IntervalSet fixed_point_set(const ConstraintFn& f, const IntervalSet& domain = IntervalSet::whole());

/// Sampling resolution as a fraction of the sampled window width.
struct SamplingGrid {
    double fraction = 1e-3;
};

struct QuotientBounds {
    double lo = 0.0;
    double hi = 0.0;
    bool exact = true;
    double grid_step = 0.0;  // 0 when exact
};

/// Bounds on (f(x + w) - f(x)) / w over x, x + w in region, w != 0.
QuotientBounds difference_quotient_bounds(const ConstraintFn& f, Interval region, SamplingGrid grid = {});

/// Chord-slope bounds valid over the whole real line. Exact for
/// piecewise-affine variants; Lipschitz-based and conservative otherwise.
QuotientBounds slope_envelope(const ConstraintFn& f);

enum class BoxRule {
    Range,     // lower <= f(x) <= upper on the box
    Identity,  // f(x) = x on the box
};

struct SectorVerdict {
    bool pass = true;
    bool contact = false;  // a non-strict bound met with equality
    std::optional<double> first_violation;
};

struct SectorReport {
    SectorVerdict lower;  // x <= f(x) < L1(x) below the box
    SectorVerdict box;
    SectorVerdict upper;  // L2(x) < f(x) <= x above the box
    bool exact = true;
    double grid_step = 0.0;

    bool all_pass() const noexcept { return lower.pass && box.pass && upper.pass; }
};

/// Checks the sector and box conditions for one constraint. Piecewise-affine
/// variants are checked exactly on the full half-lines; others on a grid over
/// [anchor - horizon, anchor + horizon].
SectorReport sector_membership(const ConstraintFn& f, const BoxRaySpec& spec, SamplingGrid grid, double horizon,
                               BoxRule rule = BoxRule::Range);

/// inf of (f(x) - anchor) / (x - anchor) over an open region on one side of the
/// anchor, with whether the infimum is attained at a point of the region.
struct SlopeBound {
    double value = kInf;
    bool attained = false;
};

SlopeBound sector_slope_bound(const ConstraintFn& f, double anchor, Interval open_region, SamplingGrid grid,
                              double horizon);

}  // namespace tcc
