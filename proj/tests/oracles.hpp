#pragma once

// Reference computations written without the library's algorithms. Only the
// catalog evaluator is shared, and only where a test needs f itself.

#include "tcc/constraints.hpp"
#include "tcc/interval_set.hpp"
#include "tcc/rng.hpp"
#include "tcc/scenarios.hpp"
#include "tcc/system.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Reachability by Warshall's closure, i reaches j through edges j -> i.
inline bool strongly_connected(const Matrix& a) {
    const std::size_t n = a.size();
    if (n == 0) return false;
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        r[i][i] = true;
        for (std::size_t j = 0; j < n; ++j)
            if (a[i][j] > 0.0) r[j][i] = true;  // j transmits to i
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!r[i][j]) return false;
    return true;
}

inline Eigen::MatrixXd laplacian(const Matrix& a) {
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            l(i, j) -= a[i][j];
            l(i, i) += a[i][j];
        }
    }
    return l;
}

// All edges affine, f_e(x) = k_e x + m_e: solve sum_j a_ij (k x_j + m) = alpha_i x_i.
inline Eigen::VectorXd affine_equilibrium(const Matrix& a, const Matrix& k, const Matrix& m) {
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (a[i][j] <= 0.0) continue;
            mat(i, j) += a[i][j] * k[i][j];
            mat(i, i) -= a[i][j];
            rhs(i) -= a[i][j] * m[i][j];
        }
    }
    return mat.fullPivLu().solve(rhs);
}

struct ScanRoot {
    double at;       // grid point or bisected crossing
    bool plateau;    // g stays zero on a run of grid points
};

// Sign changes and zeros of g(x) = f(x) - x on a uniform grid. A sign change
// across a jump of f is not a fixed point and is reported only when g is small
// on both sides.
inline std::vector<ScanRoot> fixed_point_scan(const std::function<double(double)>& f, double lo, double hi,
                                              double step) {
    std::vector<ScanRoot> out;
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    auto g = [&](double x) { return f(x) - x; };
    const double zero = 1e-12;
    double prev_x = lo, prev = g(lo);
    std::size_t run = std::abs(prev) <= zero ? 1 : 0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double x = lo + static_cast<double>(k) * step;
        const double cur = g(x);
        if (std::abs(cur) <= zero) {
            ++run;
        } else {
            if (run > 0) out.push_back({x - step * static_cast<double>(run + 1) / 2.0, run > 1});
            run = 0;
            if (std::abs(prev) > zero && (prev < 0.0) != (cur < 0.0)) {
                double a = prev_x, b = x, ga = prev;
                for (int it = 0; it < 80; ++it) {
                    const double c = 0.5 * (a + b);
                    const double gc = g(c);
                    if ((gc < 0.0) == (ga < 0.0)) a = c, ga = gc;
                    else b = c;
                }
                // Continuous crossing: g shrinks toward the bracket.
                if (std::abs(g(0.5 * (a + b))) < 1e-6) out.push_back({0.5 * (a + b), false});
            }
        }
        prev_x = x;
        prev = cur;
    }
    if (run > 0) out.push_back({hi - step * static_cast<double>(run - 1) / 2.0, run > 1});
    return out;
}


// Empty when a fixed-point set agrees with the scan on [lo, hi].
inline std::string fixed_point_mismatch(const tcc::ConstraintFn& f, const tcc::IntervalSet& set, double lo = -20.0,
                                        double hi = 20.0, double step = 1e-4) {
    auto fx = [&](double x) { return tcc::evaluate(f, x); };
    const auto roots = fixed_point_scan(fx, lo, hi, step);
    const double slack = 3.0 * step + set.tolerance();
    for (const auto& r : roots)
        if (!set.contains(r.at, slack)) return "scan root " + std::to_string(r.at) + " is not in the set";
    for (const auto& p : set.parts()) {
        const double a = std::max(p.lo, lo + 10.0 * step), b = std::min(p.hi, hi - 10.0 * step);
        if (a > b) continue;
        if (b - a < 2.0 * slack) {
            const bool seen = std::any_of(roots.begin(), roots.end(), [&](const ScanRoot& r) {
                return r.at >= a - slack && r.at <= b + slack;
            });
            if (!seen) return "set point " + std::to_string(a) + " has no scan root";
            continue;
        }
        for (int k = 0; k <= 20; ++k) {
            const double x = a + (b - a) * k / 20.0;
            if (std::abs(fx(x) - x) > 1e-9 * std::max(1.0, std::abs(x)))
                return "set interval point " + std::to_string(x) + " is not fixed";
        }
        const bool plateau = std::any_of(roots.begin(), roots.end(), [&](const ScanRoot& r) {
            return r.plateau && r.at >= a - slack && r.at <= b + slack;
        });
        if (!plateau) return "set interval [" + std::to_string(a) + ", " + std::to_string(b) + "] has no scan plateau";
    }
    return "";
}

struct Chord {
    double lo = 1e300;
    double hi = -1e300;
};

// Extreme chord slopes over every pair of grid points in [lo, hi].
inline Chord chord_slopes(const std::function<double(double)>& f, double lo, double hi, std::size_t n) {
    std::vector<double> xs(n + 1), ys(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        xs[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
        ys[k] = f(xs[k]);
    }
    Chord c;
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j) {
            const double s = (ys[j] - ys[i]) / (xs[j] - xs[i]);
            c.lo = std::min(c.lo, s);
            c.hi = std::max(c.hi, s);
        }
    return c;
}

// Direct formulas for the catalog.
inline double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }
inline double projection(double x, double p, double q, double rho) {
    if (x > q) return q + rho * (x - q);
    if (x < p) return p + rho * (x - p);
    return x;
}
inline double gated(double x, double lo, double hi) { return (x >= lo && x <= hi) ? x : 0.0; }

inline Matrix random_graph(tcc::SplitMix64& rng, std::size_t n, double density) {
    Matrix a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng.uniform(0.0, 1.0) < density) a[i][j] = rng.uniform(0.1, 3.0);
    return a;
}

struct AffineSystem {
    oracle::Matrix a, k, m;
    tcc::System system;
};

// Random all-affine system with slopes in (-0.9, 0.9) and a ring so no agent is silent.
inline AffineSystem random_affine(tcc::SplitMix64& rng) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next() % 5);
    auto a = oracle::random_graph(rng, n, 0.4);
    for (std::size_t i = 0; i < n; ++i) a[i][(i + 1) % n] = std::max(a[i][(i + 1) % n], 0.5);
    oracle::Matrix k(n, std::vector<double>(n, 0.0)), m = k;
    std::vector<tcc::EdgeConstraint> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (a[i][j] > 0.0) {
                k[i][j] = rng.uniform(-0.9, 0.9);
                m[i][j] = rng.uniform(-3.0, 3.0);
                edges.push_back({j, i, tcc::ConstraintFn::affine(k[i][j], m[i][j])});
            }
    auto s = tcc::System::build(tcc::Digraph::build(a), edges);
    return {a, k, m, std::move(s)};
}

// One of every variant, plus the shapes the scenarios use.
inline std::vector<tcc::ConstraintFn> catalog_zoo() {
    using tcc::ConstraintFn;
    namespace fn = tcc::fn;
    using namespace tcc::catalog;
    return {
        ConstraintFn::identity(),
        ConstraintFn::affine(-0.5, 0.0),
        ConstraintFn::affine(0.5, 1.0),
        ConstraintFn::affine(1.0, 0.5),  // no fixed point
        ConstraintFn::saturation(-1.0, 1.0),
        ConstraintFn::saturation(-3.0, -1.0),
        ConstraintFn::interval_projection(-1.0, 1.0, 0.5),
        ConstraintFn::interval_projection(2.0, 3.0, 0.5),
        ConstraintFn::scaled_sine(0.8, std::numbers::pi),
        ConstraintFn::scaled_sine(0.5, 1.0),
        ConstraintFn::scaled_sine(3.0, 0.0),
        ConstraintFn::piecewise_linear({{-1.0, -1.0}, {1.0, 1.0}}, -0.8, -0.8),
        ConstraintFn::piecewise_linear({{-2.0, -1.8}, {2.0, 2.2}}, -0.5, -0.5),
        boundary_ray_d(),
        sawtooth_e(),
        ConstraintFn::gated_identity(-1.0, 2.0),
        ConstraintFn::gated_identity(1.0, 2.0),
        ConstraintFn::tabulated({-2.0, 0.0, 1.0, 3.0}, {1.0, 0.5, 1.0, -2.0}, fn::Interpolation::Linear),
        ConstraintFn::tabulated({-2.0, 0.0, 1.0, 3.0}, {-1.5, 0.5, 0.5, 2.5}, fn::Interpolation::Step),
        ConstraintFn::mix(saturation_b(), boundary_ray_d()),
        ConstraintFn::mix(sawtooth_e(), sine_a()),
        ConstraintFn::mix(affine_c(), boundary_ray_d(), 0.3),
    };
}

}  // namespace oracle
