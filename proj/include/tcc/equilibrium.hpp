#pragma once

#include "tcc/interval_set.hpp"
#include "tcc/rng.hpp"
#include "tcc/system.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcc {

enum class SolveMethod { Picard, Damped, IntegrationTail };
const char* to_string(SolveMethod m);

struct Equilibrium {
    std::vector<double> point;
    double residual = 0.0;
    SolveMethod method = SolveMethod::Picard;
    double relaxation = 1.0;
    std::size_t iterations = 0;
    std::vector<std::string> failed_rungs;
};

class EquilibriumError : public std::runtime_error {
public:
    enum class Kind { NoInEdgeAgent, Unconverged, EmptyFixedPointSet, DimensionMismatch };

    EquilibriumError(Kind kind, const std::string& what, std::vector<double> best = {},
                     double best_residual = 0.0)
        : std::runtime_error(what), kind_(kind), best_(std::move(best)), best_residual_(best_residual) {}
    Kind kind() const noexcept { return kind_; }
    const std::vector<double>& best_point() const noexcept { return best_; }
    double best_residual() const noexcept { return best_residual_; }

private:
    Kind kind_;
    std::vector<double> best_;
    double best_residual_;
};

/// Max-norm of the right-hand side at `point`.
double residual(const System& system, std::span<const double> point);

struct SolveOptions {
    double tol = 1e-10;
    std::size_t budget = 20000;  // iterations per rung
    double tail_dt = 0.0;        // 0 picks 1e-2 / a_bar
    double tail_horizon = 400.0;
};

/// Picard on e_i <- (1/alpha_i) sum_j a_ij f(e_j), then damped 0.5 and 0.25,
/// then integration from the seed.
Equilibrium solve_equilibrium(const System& system, std::span<const double> seed, SolveOptions options = {});

struct StartOutcome {
    std::vector<double> seed;
    std::optional<Equilibrium> result;
    std::string error;
    std::size_t cluster = 0;  // valid when result is set
};

struct UniquenessReport {
    std::vector<std::vector<double>> representatives;
    std::vector<StartOutcome> starts;
    double radius = 0.0;
    std::size_t failures = 0;
    std::string note;

    std::size_t clusters() const noexcept { return representatives.size(); }
};

/// Deterministic multi-start probe over [lower, upper]^n. One cluster is
/// evidence of uniqueness, not proof.
UniquenessReport uniqueness_probe(const System& system, double lower, double upper, std::size_t n_starts,
                                  double tol = 1e-10, std::uint64_t seed = 0);

struct InvariantBox {
    double lower = 0.0;
    double upper = 0.0;
    double k_star = 0.0;
    double theta_lo = 0.0;  // min of all fixed points
    double theta_hi = 0.0;  // max of all fixed points
    bool hull_fallback = false;  // slope floor was non-negative; the hull itself is used
};

/// Intersections of k x + (1-k) Xm and k x + (1-k) XM with -x + XM + Xm.
Interval invariant_box_from(double theta_lo, double theta_hi, double k_star);

/// Self-mapped box built from the fixed-point hull and a uniform chord-slope
/// floor; nullopt when no floor in (-1, 1] is certified.
std::optional<InvariantBox> invariant_box(const System& system);

}  // namespace tcc
