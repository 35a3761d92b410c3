#pragma once

#include "tcc/analysis.hpp"
#include "tcc/dynamics.hpp"
#include "tcc/system.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tcc {

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

enum class Outcome {
    ConsensusIn,         // spread below tol, common value inside consensus_values
    UniqueEquilibrium,   // every run ends at one point
    MultipleEquilibria,  // at least two clusters, all inside the invariant box
    StaysOffBox,         // distance to reference_box never drops below omega
    NoConsensus,         // final spread keeps a fraction of the initial spread
};
const char* to_string(Outcome o);

struct Expectation {
    Verdict verdict = Verdict::Inconclusive;
    Outcome outcome = Outcome::ConsensusIn;
    Interval consensus_values{-kInf, kInf};
    double spread_tol = 1e-3;
    double agreement_tol = 1e-4;
    double omega = 0.0;
    double spread_ratio = 0.5;
};

/// Each run draws x0_i uniformly from boxes[i]; a point box pins the agent.
struct X0Policy {
    std::vector<Interval> boxes;
    std::size_t runs = 1;
};

struct Scenario {
    std::string name;
    std::string summary;
    System system;
    X0Policy x0;
    IntegrationSpec integration;
    Expectation expect;
    std::optional<BoxRaySpec> reference_box;
};

const std::vector<Scenario>& builtin_scenarios();
const Scenario& find_scenario(std::string_view name);

std::vector<std::vector<double>> draw_x0(const X0Policy& policy, std::uint64_t seed);

/// Shared constraint shapes of the first example, exposed for tests.
namespace catalog {
ConstraintFn sine_a();
ConstraintFn saturation_b();
ConstraintFn affine_c();
ConstraintFn boundary_ray_d();
ConstraintFn sawtooth_e();
}  // namespace catalog

}  // namespace tcc
