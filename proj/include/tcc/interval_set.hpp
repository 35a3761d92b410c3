#pragma once

#include <limits>
#include <optional>
#include <vector>

namespace tcc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi]; lo == hi is an isolated point. Either end may be
/// infinite.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    bool is_point() const noexcept { return lo == hi; }
    double width() const noexcept { return hi - lo; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of disjoint closed intervals kept in canonical form
/// (sorted, merged). `tolerance` records how far a member may be from a true
/// fixed point when the set came from a numerical enclosure; 0 means exact.
class IntervalSet {
public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<Interval> parts, double tolerance = 0.0);

    static IntervalSet empty() { return {}; }
    static IntervalSet whole() { return IntervalSet({{-kInf, kInf}}); }
    static IntervalSet point(double x) { return IntervalSet({{x, x}}); }
    static IntervalSet closed(double lo, double hi) { return IntervalSet({{lo, hi}}); }

    bool is_empty() const noexcept { return parts_.empty(); }
    bool is_whole() const noexcept;
    bool bounded() const noexcept;
    bool contains(double x, double slack = 0.0) const noexcept;

    /// Smallest closed interval containing the set; nullopt when empty.
    std::optional<Interval> hull() const;

    const std::vector<Interval>& parts() const noexcept { return parts_; }
    double tolerance() const noexcept { return tolerance_; }
    void set_tolerance(double tol) noexcept { tolerance_ = tol; }

    /// Parts closer than the summed tolerances count as meeting.
    IntervalSet intersect(const IntervalSet& other) const;
    IntervalSet unite(const IntervalSet& other) const;

    friend bool operator==(const IntervalSet& a, const IntervalSet& b) { return a.parts_ == b.parts_; }

private:
    std::vector<Interval> parts_;
    double tolerance_ = 0.0;
};

}  // namespace tcc
