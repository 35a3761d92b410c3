#include "tcc/interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tcc {

IntervalSet::IntervalSet(std::vector<Interval> parts, double tolerance) : tolerance_(tolerance) {
    for (const auto& p : parts) {
        if (std::isnan(p.lo) || std::isnan(p.hi) || p.lo > p.hi) {
            throw std::invalid_argument("interval bounds out of order");
        }
    }
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (const auto& p : parts) {
        if (!parts_.empty() && p.lo <= parts_.back().hi) {
            parts_.back().hi = std::max(parts_.back().hi, p.hi);
        } else {
            parts_.push_back(p);
        }
    }
}

bool IntervalSet::is_whole() const noexcept {
    return parts_.size() == 1 && parts_[0].lo == -kInf && parts_[0].hi == kInf;
}

bool IntervalSet::bounded() const noexcept {
    return parts_.empty() || (std::isfinite(parts_.front().lo) && std::isfinite(parts_.back().hi));
}

bool IntervalSet::contains(double x, double slack) const noexcept {
    // Parts are sorted, so the first part ending at or after x - slack decides.
    auto it = std::lower_bound(parts_.begin(), parts_.end(), x - slack,
                               [](const Interval& p, double v) { return p.hi < v; });
    return it != parts_.end() && it->lo - slack <= x;
}

std::optional<Interval> IntervalSet::hull() const {
    if (parts_.empty()) return std::nullopt;
    return Interval{parts_.front().lo, parts_.back().hi};
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < parts_.size() && j < other.parts_.size()) {
        const double lo = std::max(parts_[i].lo, other.parts_[j].lo);
        const double hi = std::min(parts_[i].hi, other.parts_[j].hi);
        if (lo <= hi) {
            out.push_back({lo, hi});
        } else if (lo - hi <= tolerance_ + other.tolerance_) {
            // Enclosures that miss by less than their tolerances still meet; the
            // tighter side pins the meeting point.
            const bool left_is_mine = parts_[i].hi == hi;
            double p = 0.5 * (lo + hi);
            if (tolerance_ < other.tolerance_) p = left_is_mine ? hi : lo;
            else if (other.tolerance_ < tolerance_) p = left_is_mine ? lo : hi;
            out.push_back({p, p});
        }
        if (parts_[i].hi < other.parts_[j].hi) ++i; else ++j;
    }
    return IntervalSet(std::move(out), std::max(tolerance_, other.tolerance_));
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
    std::vector<Interval> all = parts_;
    all.insert(all.end(), other.parts_.begin(), other.parts_.end());
    return IntervalSet(std::move(all), std::max(tolerance_, other.tolerance_));
}

}  // namespace tcc
