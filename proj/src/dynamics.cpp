#include "tcc/dynamics.hpp"

#include "tcc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace tcc {

const char* to_string(Method m) { return m == Method::RK4 ? "rk4" : "euler"; }

IntegrationSpec default_integration(const System& system, double t_final) {
    IntegrationSpec spec;
    const double a_bar = row_stats(system.graph()).a_bar;
    spec.dt = a_bar > 0.0 ? 1e-2 / a_bar : 1e-2;
    spec.t_final = t_final;
    const double steps = std::ceil(t_final / spec.dt);
    spec.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(steps / 1000.0));
    return spec;
}

void rhs_into(const System& system, std::span<const double> x, std::span<double> out) {
    const std::size_t n = system.size();
    if (x.size() != n || out.size() != n) {
        throw DynamicsError(DynamicsError::Kind::DimensionMismatch,
                            "state has " + std::to_string(x.size()) + " entries for " + std::to_string(n) + " agents");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& in : system.inputs(i)) sum += in.weight * (evaluate(*in.f, x[in.from]) - x[i]);
        out[i] = sum;
    }
}

std::vector<double> rhs(const System& system, std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) throw DynamicsError(DynamicsError::Kind::NonFiniteState, "non-finite state");
    }
    std::vector<double> out(x.size());
    rhs_into(system, x, out);
    return out;
}

namespace {

void record(Trajectory& traj, double t, const std::vector<double>& x, const ChannelSpec& ch) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    traj.xM.push_back(x.empty() ? 0.0 : *mx);
    traj.xm.push_back(x.empty() ? 0.0 : *mn);
    if (ch.rays) {
        traj.Y->push_back(lyapunov_Y(x, *ch.rays).value);
        traj.dist->push_back(distance_to_box(x, ch.rays->lower, ch.rays->upper));
    }
    if (ch.equilibrium && ch.equilibrium_rays) traj.V->push_back(lyapunov_V(x, *ch.equilibrium, *ch.equilibrium_rays));
}

}  // namespace

Trajectory integrate(const System& system, std::span<const double> x0, const IntegrationSpec& spec,
                     const ChannelSpec& channels) {
    const std::size_t n = system.size();
    if (!(spec.dt > 0.0) || !(spec.t_final >= 0.0) || spec.record_stride < 1 || !std::isfinite(spec.t_final)) {
        throw DynamicsError(DynamicsError::Kind::InvalidSpec, "integration needs dt > 0, t_final >= 0, stride >= 1");
    }
    if (x0.size() != n) {
        throw DynamicsError(DynamicsError::Kind::DimensionMismatch,
                            "x0 has " + std::to_string(x0.size()) + " entries for " + std::to_string(n) + " agents");
    }
    if (channels.equilibrium && channels.equilibrium->size() != n) {
        throw DynamicsError(DynamicsError::Kind::DimensionMismatch, "equilibrium length differs from agent count");
    }
    for (double v : x0) {
        if (!std::isfinite(v)) throw DynamicsError(DynamicsError::Kind::NonFiniteState, "non-finite x0");
    }

    Trajectory traj;
    traj.dt = spec.dt;
    if (channels.rays) {
        traj.Y.emplace();
        traj.dist.emplace();
    }
    if (channels.equilibrium && channels.equilibrium_rays) traj.V.emplace();

    std::vector<double> x(x0.begin(), x0.end());
    record(traj, 0.0, x, channels);

    const auto steps = static_cast<std::size_t>(std::ceil(spec.t_final / spec.dt - 1e-9));
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * spec.dt;
        const bool last = k + 1 == steps;
        const double t1 = last ? spec.t_final : static_cast<double>(k + 1) * spec.dt;
        const double h = t1 - t0;
        rhs_into(system, x, k1);
        if (spec.method == Method::Euler) {
            for (std::size_t i = 0; i < n; ++i) x[i] += h * k1[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
            rhs_into(system, tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
            rhs_into(system, tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
            rhs_into(system, tmp, k4);
            for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
            throw DynamicsError(DynamicsError::Kind::NonFiniteState,
                                "state became non-finite at t = " + std::to_string(t1), std::move(traj));
        }
        if (last || (k + 1) % spec.record_stride == 0) record(traj, t1, x, channels);
    }
    return traj;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
    const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
    out << "t";
    for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
    if (traj.Y) out << ",Y";
    if (traj.V) out << ",V";
    if (traj.dist) out << ",dist";
    out << ",xM,xm\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        put(traj.times[k]);
        for (double v : traj.states[k]) {
            out << ',';
            put(v);
        }
        for (const auto* ch : {&traj.Y, &traj.V, &traj.dist}) {
            if (!*ch) continue;
            out << ',';
            put((**ch)[k]);
        }
        out << ',';
        put(traj.xM[k]);
        out << ',';
        put(traj.xm[k]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Monitors

bool MonitorReport::all_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* MonitorReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

const BoxRaySpec& need_rays(const MonitorInputs& in, const char* check) {
    if (!in.rays) throw DynamicsError(DynamicsError::Kind::MissingWitness, std::string(check) + " needs a box/ray spec");
    return *in.rays;
}

CheckResult monotone(const char* name, const std::vector<double>& series, double rel, double abs_tol) {
    CheckResult r{name, true, 0.0, ""};
    for (std::size_t k = 1; k < series.size(); ++k) {
        const double allowed = series[k - 1] + rel * std::abs(series[k - 1]) + abs_tol;
        const double excess = series[k] - allowed;
        if (excess > r.worst) r.worst = excess;
        if (excess > 0.0 && r.pass) {
            r.pass = false;
            r.detail = "increase at sample " + std::to_string(k);
        }
    }
    if (r.pass) r.detail = "non-increasing over " + std::to_string(series.size()) + " samples";
    return r;
}

}  // namespace

MonitorReport monitor_trajectory(const Trajectory& traj, const System& system, const MonitorSelection& checks,
                                 const MonitorInputs& inputs) {
    MonitorReport report;
    if (traj.times.empty()) return report;
    const std::size_t n = system.size();
    for (const auto& s : traj.states) {
        if (s.size() != n) throw DynamicsError(DynamicsError::Kind::DimensionMismatch, "trajectory width differs");
    }

    const bool discontinuous = std::any_of(system.edges().begin(), system.edges().end(),
                                           [](const EdgeConstraint& e) { return !is_continuous(e.f); });
    const double rel = discontinuous ? std::max(inputs.rel_tol, 1e-6) : inputs.rel_tol;
    const double a_bar = row_stats(system.graph()).a_bar;
    const double box_tol = inputs.box_tol.value_or(10.0 * traj.dt * a_bar);

    auto xM = [&](std::size_t k) { return *std::max_element(traj.states[k].begin(), traj.states[k].end()); };
    auto xm = [&](std::size_t k) { return *std::min_element(traj.states[k].begin(), traj.states[k].end()); };

    if (checks.box_invariance) {
        const auto& spec = need_rays(inputs, "box invariance");
        CheckResult r{"box_invariance", true, 0.0, ""};
        bool inside = false;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const double excess = std::max(xM(k) - spec.upper, spec.lower - xm(k));
            if (!inside) {
                inside = excess <= box_tol;
                continue;
            }
            r.worst = std::max(r.worst, excess);
            if (excess > box_tol && r.pass) {
                r.pass = false;
                r.detail = "left the box at t = " + num(traj.times[k]);
            }
        }
        if (r.pass) r.detail = inside ? "stayed inside within " + num(box_tol) : "never entered the box";
        report.checks.push_back(r);
    }

    if (checks.y_monotone) {
        const auto& spec = need_rays(inputs, "Y monotonicity");
        std::vector<double> y(traj.size());
        for (std::size_t k = 0; k < traj.size(); ++k) y[k] = lyapunov_Y(traj.states[k], spec).value;
        report.checks.push_back(monotone("y_monotone", y, rel, inputs.abs_tol));
    }

    if (checks.v_monotone) {
        if (!inputs.equilibrium || !inputs.equilibrium_rays) {
            throw DynamicsError(DynamicsError::Kind::MissingWitness, "V monotonicity needs an equilibrium and its rays");
        }
        std::vector<double> v(traj.size());
        for (std::size_t k = 0; k < traj.size(); ++k)
            v[k] = lyapunov_V(traj.states[k], *inputs.equilibrium, *inputs.equilibrium_rays);
        report.checks.push_back(monotone("v_monotone", v, rel, inputs.abs_tol));
    }

    if (checks.trajectory_bounds) {
        const auto& spec = need_rays(inputs, "trajectory bounds");
        const auto y0 = lyapunov_Y(traj.states.front(), spec);
        const double xM0 = xM(0), xm0 = xm(0);
        CheckResult r{"trajectory_bounds", true, 0.0, std::string("case ") + to_string(y0.term)};
        for (std::size_t k = 0; k < traj.size(); ++k) {
            double excess = 0.0, bound = 0.0;
            switch (y0.term) {
                case YTerm::Box:
                    bound = spec.upper;
                    excess = std::max(xM(k) - spec.upper, spec.lower - xm(k));
                    break;
                case YTerm::UpperRay:
                    bound = spec.ray_upper(xM0);
                    excess = bound - xm(k);
                    break;
                case YTerm::LowerRay:
                    bound = spec.ray_lower(xm0);
                    excess = xM(k) - bound;
                    break;
                case YTerm::UpperExcess:
                    bound = std::min(xm0, spec.lower);
                    excess = bound - xm(k);
                    break;
                case YTerm::LowerExcess:
                    bound = std::max(xM0, spec.upper);
                    excess = xM(k) - bound;
                    break;
            }
            const double tol = rel * std::max(1.0, std::abs(bound)) + inputs.abs_tol;
            r.worst = std::max(r.worst, excess);
            if (excess > tol && r.pass) {
                r.pass = false;
                r.detail += ", bound broken at t = " + num(traj.times[k]);
            }
        }
        report.checks.push_back(r);
    }

    if (checks.consensus) {
        const auto& last = traj.states.back();
        const double spread = xM(traj.size() - 1) - xm(traj.size() - 1);
        double mean = 0.0;
        for (double v : last) mean += v;
        mean /= static_cast<double>(std::max<std::size_t>(1, last.size()));
        CheckResult r{"consensus", spread < inputs.consensus_threshold, spread,
                      "spread " + num(spread) + ", value " + num(mean)};
        report.checks.push_back(r);
    }

    if (checks.distance_decay) {
        const auto& spec = need_rays(inputs, "distance decay");
        const double final_dist = distance_to_box(traj.states.back(), spec.lower, spec.upper);
        double min_dist = kInf;
        for (const auto& s : traj.states) min_dist = std::min(min_dist, distance_to_box(s, spec.lower, spec.upper));
        CheckResult r{"distance_decay", final_dist < inputs.distance_threshold, final_dist,
                      "final distance " + num(final_dist) + ", minimum " + num(min_dist)};
        report.checks.push_back(r);
    }
    return report;
}

}  // namespace tcc
