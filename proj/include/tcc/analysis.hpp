#pragma once

#include "tcc/box_ray_spec.hpp"
#include "tcc/constraints.hpp"
#include "tcc/interval_set.hpp"
#include "tcc/system.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcc {

class AnalysisError : public std::runtime_error {
public:
    enum class Kind { DimensionMismatch, InvalidSpec };

    AnalysisError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Intersection of every edge's fixed-point set.
IntervalSet consensus_zone(const System& system);

struct GeometryReport {
    double diameter = 0.0;    // upper - lower
    double min_branch = 0.0;  // min{(1-k2)(upper-anchor), (1-k1)(anchor-lower)}
    double max_branch = 0.0;  // max{...}
    bool meets_min = true;
    bool meets_max = true;
};

GeometryReport ray_geometry_check(const BoxRaySpec& spec);

enum class RayMode {
    BoxConvergence,  // range condition on the box, k1 k2 = 1, both negative
    Consensus,       // box inside the consensus zone, k1 k2 <= 1
};

struct RaySearchOptions {
    SamplingGrid grid;
    std::size_t anchors = 33;
};

struct RaySearchResult {
    std::optional<BoxRaySpec> spec;
    bool exact = true;         // every check behind the spec was exact
    bool geometry_max = false; // spec also meets the max-branch box inequality
    bool exterior_condition = false;  // some edge is continuous and moves every exterior point
    double horizon = 0.0;      // window used for sampled constraints
    std::size_t candidates = 0;
    std::string note;
};

/// Bounded deterministic search; a missing spec is not a proof that none exists.
RaySearchResult find_admissible_rays(const System& system, RayMode mode, RaySearchOptions options = {});

/// True when every point outside [lower, upper] has an edge whose constraint is
/// continuous there and does not fix it.
bool exterior_condition_holds(const System& system, double lower, double upper);

enum class Verdict { Consensus, UniqueEquilibrium, EquilibriumExists, Inconclusive };
const char* to_string(Verdict v);

enum class CheckStatus { Pass, Fail, Skipped };
const char* to_string(CheckStatus s);

struct LedgerEntry {
    std::string name;
    CheckStatus status = CheckStatus::Skipped;
    std::string detail;
};

struct TheoremVerdict {
    Verdict verdict = Verdict::Inconclusive;
    std::vector<LedgerEntry> ledger;
    IntervalSet zone;
    std::optional<QuotientBounds> quotient;          // envelope across all edges
    std::optional<BoxRaySpec> consensus_rays;        // k1 k2 <= 1 witness
    std::optional<BoxRaySpec> box_rays;              // k1 k2 = 1 witness
    std::optional<Interval> invariant_box;
    std::optional<EquilibriumRaySpec> equilibrium_rays;
    std::string reason;  // failing condition when inconclusive

    const LedgerEntry* find(const std::string& name) const;
};

/// Decides the verdict from the ledger alone.
Verdict decide(const std::vector<LedgerEntry>& ledger);

TheoremVerdict classify_system(const System& system);

enum class YTerm { Box, UpperExcess, LowerExcess, UpperRay, LowerRay };
const char* to_string(YTerm t);

struct YValue {
    double value = 0.0;
    YTerm term = YTerm::Box;
};

/// max{upper-lower, xM-lower, upper-xm, (1-k2)(xM-anchor), (1-k1)(anchor-xm)}.
/// Ties go to the earliest term in the order Box, UpperExcess, LowerExcess,
/// UpperRay, LowerRay.
YValue lyapunov_Y(std::span<const double> state, const BoxRaySpec& spec);

double lyapunov_V(std::span<const double> state, std::span<const double> e, const EquilibriumRaySpec& spec);

double distance_to_box(std::span<const double> state, double lower, double upper);

}  // namespace tcc
