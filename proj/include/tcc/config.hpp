#pragma once

#include "tcc/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcc {

class ConfigError : public std::runtime_error {
public:
    enum class Kind { ParseError, UnknownConstraintVariant, ValidationError, Io };

    ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Agent indices are 0-based; weights[i][j] > 0 means j transmits to i.
struct SystemSpec {
    std::vector<std::vector<double>> weights;
    std::vector<EdgeConstraint> edges;
};

/// Unset fields fall back to the scenario, or to default_integration.
struct IntegrationOverride {
    std::optional<double> dt;
    std::optional<double> t_final;
    std::optional<Method> method;
    std::optional<std::size_t> record_stride;
};

struct AnalysisToggles {
    bool classify = true;
    bool rays = true;
    bool equilibrium = false;
    bool monitors = true;
    std::size_t equilibrium_starts = 20;
};

struct RunConfig {
    std::optional<std::string> scenario;
    std::optional<SystemSpec> system;
    IntegrationOverride integration;
    std::optional<std::vector<std::vector<double>>> x0_states;
    std::optional<X0Policy> x0_policy;
    std::optional<Expectation> expect;
    std::optional<BoxRaySpec> reference_box;
    AnalysisToggles analysis;
    std::filesystem::path out_dir = "out";
    std::optional<std::string> name;  // file stem, defaults to the scenario name or "run"
    std::uint64_t seed = 0;
};

/// Parses JSON text; `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

std::string write_config(const RunConfig& config);

/// Inline form of a built-in scenario: no scenario name, everything explicit.
RunConfig scenario_as_config(const Scenario& s);

/// Tagged record, e.g. {"type": "affine", "k": -0.5, "m": 0}.
std::string constraint_to_json(const ConstraintFn& f);
ConstraintFn constraint_from_json(const std::string& text);

enum class Mode {
    Full,         // classify, integrate, monitor, equilibria as toggled
    Simulate,     // no equilibrium probe
    Analyze,      // no integration
    Equilibrium,  // equilibrium probe and invariant box only
};

struct RunOutcome {
    int exit_code = 0;  // 0 expectations met, 1 an expectation or monitor failed
    std::string report;  // JSON text, also written to disk
    std::vector<std::filesystem::path> files;
};

/// Writes <out>/<name>_runNN.csv per run and <out>/<name>_report.json.
/// Throws ConfigError on invalid input or I/O failure.
RunOutcome run(const RunConfig& config, Mode mode = Mode::Full);

}  // namespace tcc
