#include "tcc/config.hpp"

#include "tcc/equilibrium.hpp"
#include "tcc/graph.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tcc {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& where, const std::string& msg) {
    throw ConfigError(ConfigError::Kind::ValidationError, where + ": " + msg);
}

const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) invalid(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) invalid(where + "." + key, "missing");
    return *it;
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) invalid(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            invalid(where + "." + it.key(), "unknown field");
    }
}

double num(const json& j, const std::string& where) {
    if (!j.is_number()) invalid(where, "expected a number");
    return j.get<double>();
}

double num(const json& j, const std::string& key, const std::string& where) {
    return num(field(j, key, where), where + "." + key);
}

// null stands for an infinite bound.
double bound(const json& j, double if_null, const std::string& where) {
    return j.is_null() ? if_null : num(j, where);
}

std::size_t count(const json& j, const std::string& where) {
    if (!j.is_number_unsigned()) invalid(where, "expected a non-negative integer");
    return j.get<std::size_t>();
}

bool flag(const json& j, const std::string& where) {
    if (!j.is_boolean()) invalid(where, "expected true or false");
    return j.get<bool>();
}

std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) invalid(where, "expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) invalid(where, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::vector<double>> rows(const json& j, const std::string& where) {
    if (!j.is_array()) invalid(where, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

Interval interval(const json& j, const std::string& where) {
    const auto v = numbers(j, where);
    if (v.size() != 2 || !(v[0] <= v[1])) invalid(where, "expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

ConstraintFn read_constraint(const json& j, const std::string& where) {
    const std::string type = text(field(j, "type", where), where + ".type");
    try {
        if (type == "identity") {
            only_keys(j, {"type"}, where);
            return ConstraintFn::identity();
        }
        if (type == "affine") {
            only_keys(j, {"type", "k", "m"}, where);
            return ConstraintFn::affine(num(j, "k", where), num(j, "m", where));
        }
        if (type == "saturation") {
            only_keys(j, {"type", "lo", "hi"}, where);
            return ConstraintFn::saturation(num(j, "lo", where), num(j, "hi", where));
        }
        if (type == "interval_projection") {
            only_keys(j, {"type", "p", "q", "rho"}, where);
            return ConstraintFn::interval_projection(num(j, "p", where), num(j, "q", where), num(j, "rho", where));
        }
        if (type == "scaled_sine") {
            only_keys(j, {"type", "amplitude", "phase"}, where);
            return ConstraintFn::scaled_sine(num(j, "amplitude", where), num(j, "phase", where));
        }
        if (type == "piecewise_linear") {
            only_keys(j, {"type", "knots", "left_slope", "right_slope"}, where);
            std::vector<fn::Knot> knots;
            const auto pts = rows(field(j, "knots", where), where + ".knots");
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (pts[i].size() != 2) invalid(where + ".knots[" + std::to_string(i) + "]", "expected [x, y]");
                knots.push_back({pts[i][0], pts[i][1]});
            }
            return ConstraintFn::piecewise_linear(std::move(knots), num(j, "left_slope", where),
                                                  num(j, "right_slope", where));
        }
        if (type == "gated_identity") {
            only_keys(j, {"type", "lo", "hi"}, where);
            return ConstraintFn::gated_identity(num(j, "lo", where), num(j, "hi", where));
        }
        if (type == "tabulated") {
            only_keys(j, {"type", "xs", "ys", "rule"}, where);
            const std::string rule = j.contains("rule") ? text(j["rule"], where + ".rule") : "linear";
            if (rule != "linear" && rule != "step") invalid(where + ".rule", "expected \"linear\" or \"step\"");
            return ConstraintFn::tabulated(numbers(field(j, "xs", where), where + ".xs"),
                                           numbers(field(j, "ys", where), where + ".ys"),
                                           rule == "step" ? fn::Interpolation::Step : fn::Interpolation::Linear);
        }
        if (type == "mix") {
            only_keys(j, {"type", "first", "second", "weight"}, where);
            const double w = j.contains("weight") ? num(j["weight"], where + ".weight") : 0.5;
            return ConstraintFn::mix(read_constraint(field(j, "first", where), where + ".first"),
                                     read_constraint(field(j, "second", where), where + ".second"), w);
        }
    } catch (const ConstraintError& e) {
        invalid(where, e.what());
    }
    throw ConfigError(ConfigError::Kind::UnknownConstraintVariant, where + ".type: unknown constraint '" + type + "'");
}

Method read_method(const json& j, const std::string& where) {
    const auto s = text(j, where);
    if (s == "rk4") return Method::RK4;
    if (s == "euler") return Method::Euler;
    invalid(where, "expected \"rk4\" or \"euler\"");
}

Verdict read_verdict(const json& j, const std::string& where) {
    const auto s = text(j, where);
    for (Verdict v : {Verdict::Consensus, Verdict::UniqueEquilibrium, Verdict::EquilibriumExists, Verdict::Inconclusive})
        if (s == to_string(v)) return v;
    invalid(where, "unknown verdict '" + s + "'");
}

Outcome read_outcome(const json& j, const std::string& where) {
    const auto s = text(j, where);
    for (Outcome o : {Outcome::ConsensusIn, Outcome::UniqueEquilibrium, Outcome::MultipleEquilibria,
                      Outcome::StaysOffBox, Outcome::NoConsensus})
        if (s == to_string(o)) return o;
    invalid(where, "unknown outcome '" + s + "'");
}

BoxRaySpec read_rays(const json& j, const std::string& where) {
    only_keys(j, {"lower", "upper", "anchor", "k1", "k2"}, where);
    BoxRaySpec s{num(j, "lower", where), num(j, "upper", where), num(j, "anchor", where), num(j, "k1", where),
                 num(j, "k2", where)};
    if (!s.valid()) invalid(where, "needs lower <= anchor <= upper");
    return s;
}

Expectation read_expect(const json& j, const std::string& where) {
    only_keys(j, {"verdict", "outcome", "consensus_values", "spread_tol", "agreement_tol", "omega", "spread_ratio"},
              where);
    Expectation x;
    x.verdict = read_verdict(field(j, "verdict", where), where + ".verdict");
    x.outcome = read_outcome(field(j, "outcome", where), where + ".outcome");
    if (j.contains("consensus_values")) {
        const auto& cv = j["consensus_values"];
        const std::string w = where + ".consensus_values";
        if (!cv.is_array() || cv.size() != 2) invalid(w, "expected [lo, hi], null for an open end");
        x.consensus_values = {bound(cv[0], -kInf, w + "[0]"), bound(cv[1], kInf, w + "[1]")};
    }
    if (j.contains("spread_tol")) x.spread_tol = num(j["spread_tol"], where + ".spread_tol");
    if (j.contains("agreement_tol")) x.agreement_tol = num(j["agreement_tol"], where + ".agreement_tol");
    if (j.contains("omega")) x.omega = num(j["omega"], where + ".omega");
    if (j.contains("spread_ratio")) x.spread_ratio = num(j["spread_ratio"], where + ".spread_ratio");
    return x;
}

System build_system(const SystemSpec& spec, const std::string& where) {
    try {
        return System::build(Digraph::build(spec.weights), spec.edges);
    } catch (const GraphError& e) {
        invalid(where + ".weights", e.what());
    } catch (const SystemError& e) {
        invalid(where + ".edges", e.what());
    }
}

RunConfig read_config(const json& j) {
    only_keys(j, {"scenario", "system", "integration", "x0", "expect", "reference_box", "analysis", "output", "seed"},
              "config");
    RunConfig c;
    if (j.contains("scenario")) c.scenario = text(j["scenario"], "config.scenario");
    if (j.contains("system")) {
        const auto& s = j["system"];
        only_keys(s, {"weights", "edges"}, "config.system");
        SystemSpec spec;
        spec.weights = rows(field(s, "weights", "config.system"), "config.system.weights");
        const auto& edges = field(s, "edges", "config.system");
        if (!edges.is_array()) invalid("config.system.edges", "expected an array");
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const std::string w = "config.system.edges[" + std::to_string(k) + "]";
            only_keys(edges[k], {"from", "to", "constraint"}, w);
            spec.edges.push_back({count(field(edges[k], "from", w), w + ".from"),
                                  count(field(edges[k], "to", w), w + ".to"),
                                  read_constraint(field(edges[k], "constraint", w), w + ".constraint")});
        }
        c.system = std::move(spec);
    }
    if (c.scenario.has_value() == c.system.has_value())
        invalid("config", "give exactly one of \"scenario\" and \"system\"");

    std::size_t n = 0;
    if (c.scenario) {
        try {
            n = find_scenario(*c.scenario).system.size();
        } catch (const ScenarioError& e) {
            invalid("config.scenario", e.what());
        }
    } else {
        n = build_system(*c.system, "config.system").size();
    }

    if (j.contains("integration")) {
        const auto& s = j["integration"];
        const std::string w = "config.integration";
        only_keys(s, {"dt", "t_final", "method", "record_stride"}, w);
        if (s.contains("dt")) c.integration.dt = num(s["dt"], w + ".dt");
        if (s.contains("t_final")) c.integration.t_final = num(s["t_final"], w + ".t_final");
        if (s.contains("method")) c.integration.method = read_method(s["method"], w + ".method");
        if (s.contains("record_stride")) c.integration.record_stride = count(s["record_stride"], w + ".record_stride");
        if (c.integration.dt && !(*c.integration.dt > 0.0)) invalid(w + ".dt", "must be positive");
        if (c.integration.t_final && !(*c.integration.t_final > 0.0)) invalid(w + ".t_final", "must be positive");
        if (c.integration.record_stride && *c.integration.record_stride == 0) invalid(w + ".record_stride", "must be >= 1");
    }

    if (j.contains("x0")) {
        const auto& s = j["x0"];
        const std::string w = "config.x0";
        if (s.contains("states")) {
            only_keys(s, {"states"}, w);
            c.x0_states = rows(s["states"], w + ".states");
            if (c.x0_states->empty()) invalid(w + ".states", "needs at least one state");
            for (std::size_t k = 0; k < c.x0_states->size(); ++k)
                if ((*c.x0_states)[k].size() != n)
                    invalid(w + ".states[" + std::to_string(k) + "]", "expected " + std::to_string(n) + " entries");
        } else {
            only_keys(s, {"boxes", "runs"}, w);
            X0Policy p;
            const auto& boxes = field(s, "boxes", w);
            if (!boxes.is_array() || boxes.size() != n) invalid(w + ".boxes", "expected " + std::to_string(n) + " boxes");
            for (std::size_t i = 0; i < n; ++i) p.boxes.push_back(interval(boxes[i], w + ".boxes[" + std::to_string(i) + "]"));
            if (s.contains("runs")) p.runs = count(s["runs"], w + ".runs");
            if (p.runs == 0) invalid(w + ".runs", "must be >= 1");
            c.x0_policy = std::move(p);
        }
    }

    if (j.contains("expect")) c.expect = read_expect(j["expect"], "config.expect");
    if (j.contains("reference_box")) c.reference_box = read_rays(j["reference_box"], "config.reference_box");

    if (j.contains("analysis")) {
        const auto& s = j["analysis"];
        const std::string w = "config.analysis";
        only_keys(s, {"classify", "rays", "equilibrium", "monitors", "equilibrium_starts"}, w);
        if (s.contains("classify")) c.analysis.classify = flag(s["classify"], w + ".classify");
        if (s.contains("rays")) c.analysis.rays = flag(s["rays"], w + ".rays");
        if (s.contains("equilibrium")) c.analysis.equilibrium = flag(s["equilibrium"], w + ".equilibrium");
        if (s.contains("monitors")) c.analysis.monitors = flag(s["monitors"], w + ".monitors");
        if (s.contains("equilibrium_starts"))
            c.analysis.equilibrium_starts = count(s["equilibrium_starts"], w + ".equilibrium_starts");
    }
    if (j.contains("output")) {
        const auto& s = j["output"];
        only_keys(s, {"dir", "name"}, "config.output");
        if (s.contains("dir")) c.out_dir = text(s["dir"], "config.output.dir");
        if (s.contains("name")) c.name = text(s["name"], "config.output.name");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) invalid("config.seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    return c;
}

json constraint_json(const ConstraintFn& f) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, fn::Identity>) {
                return {{"type", "identity"}};
            } else if constexpr (std::is_same_v<T, fn::Affine>) {
                return {{"type", "affine"}, {"k", v.k}, {"m", v.m}};
            } else if constexpr (std::is_same_v<T, fn::Saturation>) {
                return {{"type", "saturation"}, {"lo", v.lo}, {"hi", v.hi}};
            } else if constexpr (std::is_same_v<T, fn::IntervalProjection>) {
                return {{"type", "interval_projection"}, {"p", v.p}, {"q", v.q}, {"rho", v.rho}};
            } else if constexpr (std::is_same_v<T, fn::ScaledSine>) {
                return {{"type", "scaled_sine"}, {"amplitude", v.amplitude}, {"phase", v.phase}};
            } else if constexpr (std::is_same_v<T, fn::PiecewiseLinear>) {
                json knots = json::array();
                for (const auto& k : v.knots) knots.push_back({k.x, k.y});
                return {{"type", "piecewise_linear"}, {"knots", knots}, {"left_slope", v.left_slope},
                        {"right_slope", v.right_slope}};
            } else if constexpr (std::is_same_v<T, fn::GatedIdentity>) {
                return {{"type", "gated_identity"}, {"lo", v.lo}, {"hi", v.hi}};
            } else if constexpr (std::is_same_v<T, fn::Tabulated>) {
                return {{"type", "tabulated"}, {"xs", v.xs}, {"ys", v.ys},
                        {"rule", v.rule == fn::Interpolation::Step ? "step" : "linear"}};
            } else {
                return {{"type", "mix"}, {"first", constraint_json(*v.first)}, {"second", constraint_json(*v.second)},
                        {"weight", v.weight}};
            }
        },
        f.variant());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json rays_json(const BoxRaySpec& s) {
    return {{"lower", s.lower}, {"upper", s.upper}, {"anchor", s.anchor}, {"k1", s.k1}, {"k2", s.k2}};
}

json expect_json(const Expectation& x) {
    return {{"verdict", to_string(x.verdict)},
            {"outcome", to_string(x.outcome)},
            {"consensus_values", {finite_or_null(x.consensus_values.lo), finite_or_null(x.consensus_values.hi)}},
            {"spread_tol", x.spread_tol},
            {"agreement_tol", x.agreement_tol},
            {"omega", x.omega},
            {"spread_ratio", x.spread_ratio}};
}

json config_json(const RunConfig& c) {
    json j;
    if (c.scenario) j["scenario"] = *c.scenario;
    if (c.system) {
        json edges = json::array();
        for (const auto& e : c.system->edges)
            edges.push_back({{"from", e.from}, {"to", e.to}, {"constraint", constraint_json(e.f)}});
        j["system"] = {{"weights", c.system->weights}, {"edges", edges}};
    }
    json integ = json::object();
    if (c.integration.dt) integ["dt"] = *c.integration.dt;
    if (c.integration.t_final) integ["t_final"] = *c.integration.t_final;
    if (c.integration.method) integ["method"] = to_string(*c.integration.method);
    if (c.integration.record_stride) integ["record_stride"] = *c.integration.record_stride;
    if (!integ.empty()) j["integration"] = integ;
    if (c.x0_states) {
        j["x0"] = {{"states", *c.x0_states}};
    } else if (c.x0_policy) {
        json boxes = json::array();
        for (const auto& b : c.x0_policy->boxes) boxes.push_back({b.lo, b.hi});
        j["x0"] = {{"boxes", boxes}, {"runs", c.x0_policy->runs}};
    }
    if (c.expect) j["expect"] = expect_json(*c.expect);
    if (c.reference_box) j["reference_box"] = rays_json(*c.reference_box);
    j["analysis"] = {{"classify", c.analysis.classify},
                     {"rays", c.analysis.rays},
                     {"equilibrium", c.analysis.equilibrium},
                     {"monitors", c.analysis.monitors},
                     {"equilibrium_starts", c.analysis.equilibrium_starts}};
    json out = {{"dir", c.out_dir.string()}};
    if (c.name) out["name"] = *c.name;
    j["output"] = out;
    j["seed"] = c.seed;
    return j;
}

RunConfig parse_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ConfigError(ConfigError::Kind::ParseError, origin + ":" + std::to_string(line) + ": " + e.what());
    }
    try {
        return read_config(j);
    } catch (const ConfigError& e) {
        throw ConfigError(e.kind(), origin + ": " + e.what());
    }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) { return parse_json_text(text, origin); }

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(ConfigError::Kind::Io, path.string() + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path.string());
}

std::string write_config(const RunConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string constraint_to_json(const ConstraintFn& f) { return constraint_json(f).dump(); }

ConstraintFn constraint_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::ParseError, std::string("constraint: ") + e.what());
    }
    return read_constraint(j, "constraint");
}

RunConfig scenario_as_config(const Scenario& s) {
    RunConfig c;
    c.system = SystemSpec{s.system.graph().matrix(), s.system.edges()};
    c.integration = {s.integration.dt, s.integration.t_final, s.integration.method, s.integration.record_stride};
    c.x0_policy = s.x0;
    c.expect = s.expect;
    c.reference_box = s.reference_box;
    c.name = s.name;
    return c;
}

namespace {

struct Resolved {
    std::string name;
    System system;
    IntegrationSpec integration;
    std::vector<std::vector<double>> x0;
    std::vector<Interval> x0_boxes;
    std::optional<Expectation> expect;
    std::optional<BoxRaySpec> reference;
};

Resolved resolve(const RunConfig& c) {
    std::optional<Scenario> base;
    if (c.scenario) {
        try {
            base = find_scenario(*c.scenario);
        } catch (const ScenarioError& e) {
            invalid("config.scenario", e.what());
        }
    }
    if (!base && !c.system) invalid("config", "give exactly one of \"scenario\" and \"system\"");
    System system = base ? base->system : build_system(*c.system, "config.system");
    const std::size_t n = system.size();

    IntegrationSpec integ = base ? base->integration : default_integration(system, c.integration.t_final.value_or(50.0));
    if (c.integration.dt) integ.dt = *c.integration.dt;
    if (c.integration.t_final) integ.t_final = *c.integration.t_final;
    if (c.integration.method) integ.method = *c.integration.method;
    if (c.integration.record_stride) integ.record_stride = *c.integration.record_stride;

    X0Policy policy = c.x0_policy ? *c.x0_policy
                      : base      ? base->x0
                                  : X0Policy{std::vector<Interval>(n, {-5.0, 5.0}), 1};
    std::vector<std::vector<double>> x0 = c.x0_states ? *c.x0_states : draw_x0(policy, c.seed);
    for (const auto& s : x0)
        if (s.size() != n) invalid("config.x0", "state width differs from the agent count");
    if (c.x0_states) {
        policy.boxes.assign(n, {kInf, -kInf});
        for (const auto& s : x0)
            for (std::size_t i = 0; i < n; ++i)
                policy.boxes[i] = {std::min(policy.boxes[i].lo, s[i]), std::max(policy.boxes[i].hi, s[i])};
    }

    Resolved r{c.name ? *c.name : base ? base->name : std::string("run"), std::move(system), integ, std::move(x0),
               policy.boxes, c.expect ? c.expect : base ? std::optional<Expectation>(base->expect) : std::nullopt,
               c.reference_box ? c.reference_box : base ? base->reference_box : std::nullopt};
    return r;
}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Full: return "full";
        case Mode::Simulate: return "simulate";
        case Mode::Analyze: return "analyze";
        case Mode::Equilibrium: return "equilibrium";
    }
    return "?";
}

json interval_set_json(const IntervalSet& s) {
    json parts = json::array();
    for (const auto& p : s.parts()) parts.push_back({finite_or_null(p.lo), finite_or_null(p.hi)});
    return parts;
}

json verdict_json(const TheoremVerdict& v) {
    json ledger = json::array();
    for (const auto& e : v.ledger) ledger.push_back({{"name", e.name}, {"status", to_string(e.status)}, {"detail", e.detail}});
    json j = {{"verdict", to_string(v.verdict)}, {"reason", v.reason}, {"ledger", ledger},
              {"consensus_zone", interval_set_json(v.zone)}};
    if (v.quotient)
        j["quotient_bounds"] = {{"lo", finite_or_null(v.quotient->lo)}, {"hi", finite_or_null(v.quotient->hi)},
                                {"exact", v.quotient->exact}};
    if (v.consensus_rays) j["consensus_rays"] = rays_json(*v.consensus_rays);
    if (v.box_rays) j["box_rays"] = rays_json(*v.box_rays);
    if (v.invariant_box) j["invariant_box"] = {v.invariant_box->lo, v.invariant_box->hi};
    if (v.equilibrium_rays) j["equilibrium_rays"] = {{"k1", v.equilibrium_rays->k1}, {"k2", v.equilibrium_rays->k2}};
    return j;
}

double spread(const std::vector<double>& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Clusters {
    std::vector<std::vector<double>> reps;
    std::size_t failures = 0;
};

Clusters cluster(const std::vector<std::vector<double>>& points, double radius) {
    Clusters c;
    for (const auto& p : points) {
        if (std::none_of(c.reps.begin(), c.reps.end(), [&](const auto& r) { return max_gap(p, r) <= radius; }))
            c.reps.push_back(p);
    }
    return c;
}

struct Check {
    bool pass = true;
    std::string detail;
};

Check reps_inside(const std::vector<std::vector<double>>& reps, const std::optional<InvariantBox>& box) {
    if (!box) return {false, "no invariant box to compare against"};
    for (const auto& r : reps)
        for (double v : r)
            if (v < box->lower - 1e-6 || v > box->upper + 1e-6)
                return {false, "equilibrium coordinate " + fmt(v) + " outside [" + fmt(box->lower) + ", " +
                                   fmt(box->upper) + "]"};
    return {true, ""};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(ConfigError::Kind::Io, path.string() + ": cannot open for writing");
    out << content;
    if (!out) throw ConfigError(ConfigError::Kind::Io, path.string() + ": write failed");
}

}  // namespace

RunOutcome run(const RunConfig& config, Mode mode) {
    Resolved r = resolve(config);
    const std::size_t n = r.system.size();
    RunOutcome outcome;
    bool ok = true;

    json report;
    report["name"] = r.name;
    report["mode"] = to_string(mode);
    report["seed"] = config.seed;
    report["agents"] = n;

    const bool integrate_runs = mode == Mode::Full || mode == Mode::Simulate;
    const bool probe = mode == Mode::Equilibrium || (mode == Mode::Full && config.analysis.equilibrium);

    std::optional<TheoremVerdict> verdict;
    if (config.analysis.classify && mode != Mode::Equilibrium) {
        verdict = classify_system(r.system);
        report["analysis"] = verdict_json(*verdict);
    }
    if (verdict && !config.analysis.rays) {
        verdict->consensus_rays.reset();
        verdict->box_rays.reset();
    }

    std::optional<InvariantBox> inv;
    try {
        inv = invariant_box(r.system);
    } catch (const EquilibriumError&) {
    }
    if (inv) {
        report["invariant_box"] = {{"lower", inv->lower}, {"upper", inv->upper}, {"k_star", inv->k_star},
                                   {"hull_fallback", inv->hull_fallback}};
    }

    std::optional<UniquenessReport> probe_report;
    if (probe) {
        double lo = -5.0, hi = 5.0;
        if (inv) {
            lo = inv->lower;
            hi = inv->upper;
        } else if (!r.x0_boxes.empty()) {
            lo = kInf;
            hi = -kInf;
            for (const auto& b : r.x0_boxes) lo = std::min(lo, b.lo), hi = std::max(hi, b.hi);
        }
        if (lo == hi) lo -= 1.0, hi += 1.0;
        probe_report = uniqueness_probe(r.system, lo, hi, config.analysis.equilibrium_starts, 1e-10, config.seed);
        json reps = json::array();
        for (const auto& p : probe_report->representatives)
            reps.push_back({{"point", p}, {"residual", residual(r.system, p)}});
        report["equilibria"] = {{"range", {lo, hi}},
                                {"starts", config.analysis.equilibrium_starts},
                                {"clusters", probe_report->clusters()},
                                {"failures", probe_report->failures},
                                {"radius", probe_report->radius},
                                {"representatives", reps},
                                {"note", probe_report->note}};
    }

    // Witness equilibrium for V when the verdict certifies one.
    std::optional<std::vector<double>> witness;
    if (integrate_runs && verdict && verdict->verdict == Verdict::UniqueEquilibrium && verdict->equilibrium_rays) {
        std::vector<double> seed(n);
        for (std::size_t i = 0; i < n; ++i) seed[i] = 0.5 * (r.x0_boxes[i].lo + r.x0_boxes[i].hi);
        try {
            // V near zero is only as good as the witness.
            SolveOptions tight;
            tight.tol = 1e-13;
            auto e = solve_equilibrium(r.system, seed, tight);
            witness = e.point;
            report["witness_equilibrium"] = {{"point", e.point}, {"residual", e.residual}, {"method", to_string(e.method)}};
        } catch (const EquilibriumError& e) {
            report["witness_equilibrium"] = {{"error", e.what()}};
        }
    }

    json runs = json::array();
    std::vector<std::vector<double>> finals;
    std::vector<double> spreads0, spreads1;
    double min_ref_dist = kInf;
    if (integrate_runs) {
        std::error_code ec;
        std::filesystem::create_directories(config.out_dir, ec);
        if (ec) throw ConfigError(ConfigError::Kind::Io, config.out_dir.string() + ": " + ec.message());

        ChannelSpec channels;
        if (r.reference) channels.rays = r.reference;
        else if (verdict && verdict->box_rays) channels.rays = verdict->box_rays;
        if (witness) {
            channels.equilibrium = witness;
            channels.equilibrium_rays = verdict->equilibrium_rays;
        }

        MonitorSelection sel;
        MonitorInputs in;
        if (config.analysis.monitors && verdict) {
            if (verdict->box_rays) {
                sel.y_monotone = sel.trajectory_bounds = sel.box_invariance = true;
                in.rays = verdict->box_rays;
            }
            if (verdict->verdict == Verdict::Consensus) {
                sel.consensus = true;
                sel.distance_decay = verdict->box_rays.has_value();
                if (r.expect) in.consensus_threshold = r.expect->spread_tol;
            }
            if (witness) {
                sel.v_monotone = true;
                in.equilibrium = witness;
                in.equilibrium_rays = verdict->equilibrium_rays;
            }
        }

        for (std::size_t k = 0; k < r.x0.size(); ++k) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "_run%02zu.csv", k);
            const std::string file = r.name + stem;
            json entry = {{"index", k}, {"x0", r.x0[k]}, {"csv", file}};
            try {
                const Trajectory traj = integrate(r.system, r.x0[k], r.integration, channels);
                std::ostringstream csv;
                write_csv(csv, traj);
                write_file(config.out_dir / file, csv.str());
                outcome.files.push_back(config.out_dir / file);

                finals.push_back(traj.states.back());
                spreads0.push_back(spread(traj.states.front()));
                spreads1.push_back(spread(traj.states.back()));
                if (r.reference)
                    for (const auto& s : traj.states)
                        min_ref_dist = std::min(min_ref_dist, distance_to_box(s, r.reference->lower, r.reference->upper));
                entry["final"] = traj.states.back();
                entry["spread_initial"] = spreads0.back();
                entry["spread_final"] = spreads1.back();

                const auto mon = monitor_trajectory(traj, r.system, sel, in);
                json checks = json::array();
                for (const auto& c : mon.checks) {
                    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst}, {"detail", c.detail}});
                    ok = ok && c.pass;
                }
                entry["monitors"] = checks;
            } catch (const DynamicsError& e) {
                entry["error"] = e.what();
                ok = false;
            }
            runs.push_back(entry);
        }
        report["integration"] = {{"dt", r.integration.dt},
                                 {"t_final", r.integration.t_final},
                                 {"method", to_string(r.integration.method)},
                                 {"record_stride", r.integration.record_stride}};
        report["runs"] = runs;
    }

    if (r.expect) {
        const Expectation& x = *r.expect;
        json ex = {{"verdict", to_string(x.verdict)}, {"outcome", to_string(x.outcome)}};
        if (verdict) {
            const bool pass = verdict->verdict == x.verdict;
            ex["verdict_pass"] = pass;
            ok = ok && pass;
        }

        std::optional<Check> check;
        const bool have_runs = integrate_runs && finals.size() == r.x0.size() && !finals.empty();
        switch (x.outcome) {
            case Outcome::ConsensusIn:
                if (have_runs) {
                    check = Check{true, ""};
                    for (std::size_t k = 0; k < finals.size(); ++k) {
                        const double m = mean(finals[k]);
                        if (!(spreads1[k] < x.spread_tol) || !x.consensus_values.contains(m)) {
                            check = Check{false, "run " + std::to_string(k) + ": spread " + fmt(spreads1[k]) +
                                                     ", value " + fmt(m)};
                            break;
                        }
                    }
                    if (check->pass) check->detail = "every run agreed inside the expected values";
                }
                break;
            case Outcome::UniqueEquilibrium:
            case Outcome::MultipleEquilibria: {
                std::vector<std::vector<double>> points;
                std::size_t failures = 0;
                if (have_runs) {
                    for (const auto& f : finals) {
                        try {
                            points.push_back(solve_equilibrium(r.system, f).point);
                        } catch (const EquilibriumError&) {
                            ++failures;
                        }
                    }
                } else if (probe_report) {
                    points = probe_report->representatives;
                    failures = probe_report->failures;
                } else {
                    break;
                }
                const auto cl = cluster(points, x.agreement_tol);
                const std::size_t nc = cl.reps.size();
                std::string d = std::to_string(nc) + " cluster(s), " + std::to_string(failures) + " unconverged";
                if (x.outcome == Outcome::UniqueEquilibrium) {
                    check = Check{nc == 1 && failures == 0, d};
                } else {
                    const auto inside = reps_inside(cl.reps, inv);
                    check = Check{nc >= 2 && failures == 0 && inside.pass, inside.pass ? d : d + "; " + inside.detail};
                }
                break;
            }
            case Outcome::StaysOffBox:
                if (have_runs && r.reference) {
                    check = Check{min_ref_dist >= x.omega - 1e-6,
                                  "minimum distance " + fmt(min_ref_dist) + ", omega " + fmt(x.omega)};
                } else if (have_runs) {
                    check = Check{false, "no reference box"};
                }
                break;
            case Outcome::NoConsensus:
                if (have_runs) {
                    check = Check{true, "every run kept its spread"};
                    for (std::size_t k = 0; k < finals.size(); ++k) {
                        if (spreads1[k] < x.spread_ratio * spreads0[k]) {
                            check = Check{false, "run " + std::to_string(k) + ": spread " + fmt(spreads0[k]) + " -> " +
                                                     fmt(spreads1[k])};
                            break;
                        }
                    }
                }
                break;
        }
        if (check) {
            ex["outcome_pass"] = check->pass;
            ex["outcome_detail"] = check->detail;
            ok = ok && check->pass;
        } else {
            ex["outcome_detail"] = "not evaluated in this mode";
        }
        report["expectation"] = ex;
    }

    outcome.exit_code = ok ? 0 : 1;
    report["exit_code"] = outcome.exit_code;
    outcome.report = report.dump(2) + "\n";

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError(ConfigError::Kind::Io, config.out_dir.string() + ": " + ec.message());
    const auto path = config.out_dir / (r.name + "_report.json");
    write_file(path, outcome.report);
    outcome.files.push_back(path);
    return outcome;
}

}  // namespace tcc
