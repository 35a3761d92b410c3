#include "tcc/config.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace tcc;

namespace {

struct Shared {
    std::string config;
    std::optional<double> dt;
    std::optional<double> t_final;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_shared(CLI::App* cmd, Shared& s, bool needs_config) {
    auto* opt = cmd->add_option("--config,-c", s.config, "JSON run configuration");
    if (needs_config) opt->required();
    cmd->add_option("--dt", s.dt, "integration step");
    cmd->add_option("--t-final", s.t_final, "integration horizon");
    cmd->add_option("--seed", s.seed, "seed for drawn initial states");
    cmd->add_option("--out", s.out, "output directory");
}

void apply(const Shared& s, RunConfig& c) {
    if (s.dt) c.integration.dt = *s.dt;
    if (s.t_final) c.integration.t_final = *s.t_final;
    if (s.seed) c.seed = *s.seed;
    if (s.out) c.out_dir = *s.out;
}

int execute(RunConfig c, const Shared& s, Mode mode) {
    apply(s, c);
    if (c.integration.dt && !(*c.integration.dt > 0.0)) throw ConfigError(ConfigError::Kind::ValidationError, "--dt must be positive");
    if (c.integration.t_final && !(*c.integration.t_final > 0.0))
        throw ConfigError(ConfigError::Kind::ValidationError, "--t-final must be positive");
    const auto out = run(c, mode);
    for (const auto& f : out.files) std::cout << f.string() << "\n";
    std::cout << (out.exit_code == 0 ? "ok" : "checks failed") << "\n";
    return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transmission-constrained consensus simulator"};
    app.require_subcommand(1);

    Shared sim, ana, eq, sc;
    auto* simulate = app.add_subcommand("simulate", "integrate the configured runs and monitor them");
    add_shared(simulate, sim, true);
    auto* analyze = app.add_subcommand("analyze", "classify the system without integrating");
    add_shared(analyze, ana, true);
    auto* equilibrium = app.add_subcommand("equilibrium", "multi-start equilibrium probe and invariant box");
    add_shared(equilibrium, eq, true);

    std::string scenario_name;
    auto* scenario = app.add_subcommand("scenario", "run a built-in scenario with its expectations");
    scenario->add_option("name", scenario_name, "scenario name")->required();
    add_shared(scenario, sc, false);
    bool with_equilibria = false;
    scenario->add_flag("--equilibria", with_equilibria, "also run the equilibrium probe");

    auto* list = app.add_subcommand("list-scenarios", "print the built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*list) {
            for (const auto& s : builtin_scenarios()) std::printf("%-18s %s\n", s.name.c_str(), s.summary.c_str());
            return 0;
        }
        if (*simulate) return execute(load_config(sim.config), sim, Mode::Simulate);
        if (*analyze) return execute(load_config(ana.config), ana, Mode::Analyze);
        if (*equilibrium) return execute(load_config(eq.config), eq, Mode::Equilibrium);
        if (*scenario) {
            RunConfig c = sc.config.empty() ? RunConfig{} : load_config(sc.config);
            c.system.reset();
            c.scenario = scenario_name;
            (void)find_scenario(scenario_name);
            c.analysis.equilibrium = c.analysis.equilibrium || with_equilibria;
            return execute(std::move(c), sc, Mode::Full);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
