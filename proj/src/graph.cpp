#include "tcc/graph.hpp"

#include <algorithm>
#include <cmath>

namespace tcc {

Digraph Digraph::build(const std::vector<std::vector<double>>& weights) {
    const std::size_t n = weights.size();
    for (const auto& row : weights) {
        if (row.size() != n) {
            throw GraphError(GraphError::Kind::NonSquare, "weight matrix is not square");
        }
    }
    Digraph g;
    g.n_ = n;
    g.w_.reserve(n * n);
    g.in_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = weights[i][j];
            if (!std::isfinite(a)) {
                throw GraphError(GraphError::Kind::NonFinite,
                                 "non-finite weight at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            if (a < 0.0) {
                throw GraphError(GraphError::Kind::NegativeWeight,
                                 "negative weight at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            if (i == j && a != 0.0) {
                throw GraphError(GraphError::Kind::NonzeroDiagonal,
                                 "self-loop weight at (" + std::to_string(i) + ", " + std::to_string(i) + ")");
            }
            g.w_.push_back(a);
            if (a > 0.0) g.in_[i].push_back(j);
        }
    }
    return g;
}

std::vector<std::vector<double>> Digraph::matrix() const {
    std::vector<std::vector<double>> m(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) m[i][j] = weight(i, j);
    return m;
}

Digraph Digraph::scaled(double factor) const {
    Digraph g = *this;
    for (auto& a : g.w_) a *= factor;
    return g;
}

namespace {

// Marks every vertex reachable from `start`; `forward` follows transmissions
// j -> i, otherwise the reversed edges.
std::vector<char> reach(const Digraph& g, std::size_t start, bool forward) {
    const std::size_t n = g.size();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t u = 0; u < n; ++u) {
            const bool edge = forward ? g.has_edge(v, u) : g.has_edge(u, v);
            if (edge && !seen[u]) {
                seen[u] = 1;
                stack.push_back(u);
            }
        }
    }
    return seen;
}

}  // namespace

bool is_strongly_connected(const Digraph& g) {
    if (g.size() <= 1) return true;
    const auto fwd = reach(g, 0, true);
    const auto bwd = reach(g, 0, false);
    return std::all_of(fwd.begin(), fwd.end(), [](char c) { return c != 0; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](char c) { return c != 0; });
}

RowStats row_stats(const Digraph& g) {
    RowStats s;
    s.alpha.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) s.alpha[i] += g.weight(i, j);
        s.a_bar = std::max(s.a_bar, s.alpha[i]);
    }
    return s;
}

}  // namespace tcc
