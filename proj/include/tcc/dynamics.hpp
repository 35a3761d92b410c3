#pragma once

#include "tcc/box_ray_spec.hpp"
#include "tcc/interval_set.hpp"
#include "tcc/system.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcc {

enum class Method { RK4, Euler };
const char* to_string(Method m);

struct IntegrationSpec {
    double dt = 1e-3;
    double t_final = 10.0;
    Method method = Method::RK4;
    std::size_t record_stride = 1;
};

/// dt = 1e-2 / a_bar (1e-2 for an edgeless graph), RK4, every step recorded
/// up to 1000 samples.
IntegrationSpec default_integration(const System& system, double t_final);

/// What to record alongside the states. xM and xm are always recorded.
struct ChannelSpec {
    std::optional<BoxRaySpec> rays;            // Y, and dist to [lower, upper]
    std::optional<std::vector<double>> equilibrium;
    std::optional<EquilibriumRaySpec> equilibrium_rays;  // V, needs equilibrium
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::optional<std::vector<double>> Y;
    std::optional<std::vector<double>> V;
    std::optional<std::vector<double>> dist;
    std::vector<double> xM;
    std::vector<double> xm;

    std::size_t size() const noexcept { return times.size(); }
};

class DynamicsError : public std::runtime_error {
public:
    enum class Kind { NonFiniteState, InvalidSpec, DimensionMismatch, MissingWitness };

    DynamicsError(Kind kind, const std::string& what, Trajectory partial = {})
        : std::runtime_error(what), kind_(kind), partial_(std::move(partial)) {}
    Kind kind() const noexcept { return kind_; }
    const Trajectory& partial() const noexcept { return partial_; }

private:
    Kind kind_;
    Trajectory partial_;
};

/// Component i: sum_j a_ij (f(x_j) - x_i).
std::vector<double> rhs(const System& system, std::span<const double> x);
void rhs_into(const System& system, std::span<const double> x, std::span<double> out);

/// Fixed-step integration; samples every record_stride steps plus the final state.
Trajectory integrate(const System& system, std::span<const double> x0, const IntegrationSpec& spec,
                     const ChannelSpec& channels = {});

/// `t,x_1..x_n[,Y,V,dist,xM,xm]` with 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);

struct MonitorSelection {
    bool box_invariance = false;
    bool y_monotone = false;
    bool v_monotone = false;
    bool trajectory_bounds = false;
    bool consensus = false;
    bool distance_decay = false;
};

struct MonitorInputs {
    std::optional<BoxRaySpec> rays;
    std::optional<std::vector<double>> equilibrium;
    std::optional<EquilibriumRaySpec> equilibrium_rays;
    double rel_tol = 1e-9;              // raised to 1e-6 when a constraint is discontinuous
    double abs_tol = 1e-12;
    std::optional<double> box_tol;      // default 10 dt a_bar
    double consensus_threshold = 1e-3;
    double distance_threshold = 1e-3;
};

struct CheckResult {
    std::string name;
    bool pass = true;
    double worst = 0.0;  // largest excess over the allowed bound (or the measured quantity)
    std::string detail;
};

struct MonitorReport {
    std::vector<CheckResult> checks;

    bool all_pass() const noexcept;
    const CheckResult* find(const std::string& name) const;
};

MonitorReport monitor_trajectory(const Trajectory& traj, const System& system, const MonitorSelection& checks,
                                 const MonitorInputs& inputs);

}  // namespace tcc
