// One line per acceptance criterion; exit status is the number of failures.

#include "tcc/config.hpp"
#include "tcc/equilibrium.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace tcc;

namespace {

struct Verdict_ {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int n, const char* title, const Verdict_& v) {
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", n, title, v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
}

std::string g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double spread(const std::vector<double>& x) {
    return *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
}

constexpr std::uint64_t kSeed = 2024;

// Y recomputed from each stored state, compared pairwise.
bool y_non_increasing(const Trajectory& t, const BoxRaySpec& r, double& worst) {
    auto y = [&](const std::vector<double>& x) {
        const double xM = *std::max_element(x.begin(), x.end()), xm = *std::min_element(x.begin(), x.end());
        return std::max({r.upper - r.lower, xM - r.lower, r.upper - xm, (1.0 - r.k2) * (xM - r.anchor),
                         (1.0 - r.k1) * (r.anchor - xm)});
    };
    bool ok = true;
    double prev = y(t.states[0]);
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double cur = y(t.states[k]);
        worst = std::max(worst, cur - prev);
        if (cur > prev * (1.0 + 1e-9) + 1e-12) ok = false;
        prev = cur;
    }
    return ok;
}

Verdict_ ex1_reproduction() {
    const auto& sc = find_scenario("ex1");
    if (sc.integration.dt != 1e-3 || sc.integration.t_final != 50.0 || sc.x0.runs != 20)
        return {false, "scenario settings differ from dt 1e-3, t 50, 20 runs"};
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& x0 : draw_x0(sc.x0, kSeed)) {
        for (double v : x0)
            if (v < -10.0 || v > 10.0) return {false, "x0 outside [-10, 10]"};
        const auto t = integrate(sc.system, x0, sc.integration);
        for (double v : t.states.back()) worst = std::max(worst, std::abs(v));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {worst < 1e-3 && secs < 30.0, "max |x(50)| = " + g(worst) + " over 20 runs in " + g(secs) + " s"};
}

Verdict_ ex2_reproduction() {
    const auto& sc = find_scenario("ex2");
    double worst_spread = 0.0, lo = 1e300, hi = -1e300;
    for (const auto& x0 : draw_x0(sc.x0, kSeed)) {
        const auto t = integrate(sc.system, x0, sc.integration);
        const auto& x = t.states.back();
        worst_spread = std::max(worst_spread, spread(x));
        lo = std::min(lo, *std::min_element(x.begin(), x.end()));
        hi = std::max(hi, *std::max_element(x.begin(), x.end()));
    }
    const bool ok = sc.x0.runs == 20 && worst_spread < 1e-3 && lo >= -1.001 && hi <= 1.001;
    return {ok, "worst spread " + g(worst_spread) + ", values in [" + g(lo) + ", " + g(hi) + "]"};
}

Verdict_ lyapunov_monotone() {
    std::string detail;
    bool ok = true;
    for (const char* name : {"ex1", "ex2"}) {
        const auto& sc = find_scenario(name);
        const auto v = classify_system(sc.system);
        if (!v.box_rays || !v.box_rays->unit_product()) return {false, std::string(name) + ": no unit-product rays found"};
        IntegrationSpec spec = sc.integration;
        spec.record_stride = 10;
        double worst = -1e300;
        for (const auto& x0 : draw_x0(sc.x0, kSeed)) ok = y_non_increasing(integrate(sc.system, x0, spec), *v.box_rays, worst) && ok;
        detail += std::string(name) + " largest step change " + g(worst) + "; ";
    }
    return {ok, detail + "every stored sample pair checked"};
}

Verdict_ box_invariance() {
    const auto& sc = find_scenario("ex2");
    const auto v = classify_system(sc.system);
    if (!v.box_rays) return {false, "no rays"};
    const double dt = 1e-3;
    const double tol = 10.0 * dt * row_stats(sc.system.graph()).a_bar;
    SplitMix64 rng(kSeed);
    double worst = 0.0;
    for (int run = 0; run < 1000; ++run) {
        std::vector<double> x0(5);
        for (auto& x : x0) x = rng.uniform(-1.0, 1.0);
        const auto t = integrate(sc.system, x0, {dt, 5.0, Method::RK4, 1});
        for (std::size_t k = 0; k < t.size(); ++k)
            worst = std::max({worst, t.xM[k] - v.box_rays->upper, v.box_rays->lower - t.xm[k]});
    }
    return {worst <= tol, "largest excursion " + g(worst) + " against " + g(tol) + " over 1000 runs to t = 5"};
}

Verdict_ ex3_uniqueness() {
    const auto& sc = find_scenario("ex3");
    const auto v = classify_system(sc.system);
    if (v.verdict != tcc::Verdict::UniqueEquilibrium || !v.equilibrium_rays) return {false, "not certified unique"};
    const auto probe = uniqueness_probe(sc.system, -5.0, 5.0, 50, 1e-10, kSeed);
    if (probe.clusters() != 1 || probe.failures) return {false, std::to_string(probe.clusters()) + " clusters"};
    SolveOptions tight;
    tight.tol = 1e-13;
    const auto e = solve_equilibrium(sc.system, probe.representatives[0], tight).point;
    const double res = residual(sc.system, probe.representatives[0]);

    double worst_solve = 0.0, worst_traj = 0.0;
    for (const auto& s : probe.starts) {
        for (std::size_t i = 0; i < e.size(); ++i) worst_solve = std::max(worst_solve, std::abs(s.result->point[i] - e[i]));
    }
    SplitMix64 rng(kSeed + 1);
    bool v_ok = true;
    double v_worst = -1e300;
    for (int run = 0; run < 50; ++run) {
        std::vector<double> x0(5);
        for (auto& x : x0) x = rng.uniform(-5.0, 5.0);
        const auto t = integrate(sc.system, x0, {1e-3, 50.0, Method::RK4, 10});
        for (std::size_t i = 0; i < e.size(); ++i) worst_traj = std::max(worst_traj, std::abs(t.states.back()[i] - e[i]));
        double prev = lyapunov_V(t.states[0], e, *v.equilibrium_rays);
        for (std::size_t k = 1; k < t.size(); ++k) {
            const double cur = lyapunov_V(t.states[k], e, *v.equilibrium_rays);
            v_worst = std::max(v_worst, cur - prev);
            if (cur > prev * (1.0 + 1e-9) + 1e-12) v_ok = false;
            prev = cur;
        }
    }
    const bool ok = worst_solve < 1e-4 && worst_traj < 1e-4 && res < 1e-8 && v_ok;
    return {ok, "solves within " + g(worst_solve) + ", trajectories within " + g(worst_traj) + ", residual " + g(res) +
                    ", largest V step " + g(v_worst)};
}

Verdict_ ex4_non_uniqueness() {
    const auto& sc = find_scenario("ex4");
    const auto box = invariant_box(sc.system);
    if (!box) return {false, "no invariant box"};
    const auto probe = uniqueness_probe(sc.system, box->lower, box->upper, 50, 1e-10, kSeed);
    double outside = 0.0;
    for (const auto& r : probe.representatives)
        for (double x : r) outside = std::max({outside, box->lower - x, x - box->upper});
    const bool ok = probe.clusters() >= 2 && outside <= 1e-6;
    return {ok, std::to_string(probe.clusters()) + " clusters in [" + g(box->lower) + ", " + g(box->upper) +
                    "], largest excursion " + g(outside)};
}

Verdict_ necessity_box() {
    const auto& sc = find_scenario("necessity-2agent");
    if (!sc.reference_box) return {false, "no reference box"};
    IntegrationSpec spec = sc.integration;
    spec.record_stride = 1;
    double least = 1e300;
    for (const auto& x0 : draw_x0(sc.x0, kSeed)) {
        const auto t = integrate(sc.system, x0, spec);
        for (const auto& s : t.states) least = std::min(least, distance_to_box(s, sc.reference_box->lower, sc.reference_box->upper));
    }
    return {least >= sc.expect.omega - 1e-6, "minimum distance " + g(least) + ", omega " + g(sc.expect.omega)};
}

Verdict_ necessity_bipartite() {
    const auto& sc = find_scenario("bipartite");
    double worst = 1e300;
    std::size_t runs = 0;
    for (const auto& x0 : draw_x0(sc.x0, kSeed)) {
        const auto t = integrate(sc.system, x0, sc.integration);
        worst = std::min(worst, spread(t.states.back()) / spread(t.states.front()));
        ++runs;
    }
    return {runs == 20 && worst >= 0.5, "smallest final/initial spread ratio " + g(worst) + " over " + std::to_string(runs) + " runs"};
}

Verdict_ oracle_equivalences() {
    SplitMix64 rng(kSeed);
    double lap = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.next() % 6);
        const auto a = oracle::random_graph(rng, n, 0.5);
        auto g_ = Digraph::build(a);
        std::vector<EdgeConstraint> edges;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j : g_.in_neighbors(i)) edges.push_back({j, i, ConstraintFn::identity()});
        const auto s = System::build(std::move(g_), edges);
        Eigen::VectorXd x(static_cast<Eigen::Index>(n));
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = xs[i] = rng.uniform(-10.0, 10.0);
        const Eigen::VectorXd want = -oracle::laplacian(a) * x;
        const auto got = rhs(s, xs);
        for (std::size_t i = 0; i < n; ++i) lap = std::max(lap, std::abs(got[i] - want(static_cast<Eigen::Index>(i))));
    }

    double lin = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto s = oracle::random_affine(rng);
        const auto want = oracle::affine_equilibrium(s.a, s.k, s.m);
        std::vector<double> seed(s.a.size());
        for (auto& v : seed) v = rng.uniform(-5.0, 5.0);
        const auto got = solve_equilibrium(s.system, seed).point;
        for (std::size_t i = 0; i < got.size(); ++i) lin = std::max(lin, std::abs(got[i] - want(static_cast<Eigen::Index>(i))));
    }

    std::string scan;
    std::size_t checked = 0;
    for (const auto& f : oracle::catalog_zoo()) {
        const auto m = oracle::fixed_point_mismatch(f, fixed_point_set(f));
        if (!m.empty() && scan.empty()) scan = f.name() + ": " + m;
        ++checked;
    }
    const bool ok = lap <= 1e-12 && lin <= 1e-9 && scan.empty();
    return {ok, "(a) " + g(lap) + " (b) " + g(lin) + " (c) " + (scan.empty() ? std::to_string(checked) + " constraints agree" : scan)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict_ determinism() {
    const auto root = std::filesystem::temp_directory_path() / "tcc_acceptance_determinism";
    std::filesystem::remove_all(root);
    std::size_t files = 0;
    for (const auto& s : builtin_scenarios()) {
        std::vector<std::filesystem::path> first;
        for (int pass = 0; pass < 2; ++pass) {
            RunConfig c;
            c.scenario = s.name;
            c.seed = kSeed;
            c.out_dir = root / (pass == 0 ? "a" : "b");
            const auto out = run(c);
            if (pass == 0) {
                first = out.files;
                continue;
            }
            if (out.files.size() != first.size()) return {false, s.name + ": file lists differ"};
            for (std::size_t k = 0; k < first.size(); ++k) {
                if (first[k].filename() != out.files[k].filename() || slurp(first[k]) != slurp(out.files[k]))
                    return {false, s.name + ": " + out.files[k].filename().string() + " differs"};
                ++files;
            }
        }
    }
    std::filesystem::remove_all(root);
    return {true, std::to_string(files) + " csv and json files byte-identical across two runs"};
}

}  // namespace

int main() {
    const struct {
        const char* title;
        Verdict_ (*fn)();
    } criteria[] = {
        {"ex1 reproduction", ex1_reproduction},
        {"ex2 reproduction", ex2_reproduction},
        {"Y monotone on ex1 and ex2", lyapunov_monotone},
        {"ex2 box invariance", box_invariance},
        {"ex3 unique stable equilibrium", ex3_uniqueness},
        {"ex4 equilibria inside the invariant box", ex4_non_uniqueness},
        {"pinned pair stays off the box", necessity_box},
        {"bipartite split keeps its spread", necessity_bipartite},
        {"oracle equivalences", oracle_equivalences},
        {"determinism", determinism},
    };
    int n = 1;
    for (const auto& c : criteria) {
        try {
            report(n, c.title, c.fn());
        } catch (const std::exception& e) {
            report(n, c.title, {false, std::string("exception: ") + e.what()});
        }
        ++n;
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
