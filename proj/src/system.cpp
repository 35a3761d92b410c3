#include "tcc/system.hpp"

#include <algorithm>

namespace tcc {

System System::build(Digraph graph, std::vector<EdgeConstraint> edges) {
    const std::size_t n = graph.size();
    for (const auto& e : edges) {
        if (e.from >= n || e.to >= n) {
            throw SystemError(SystemError::Kind::IndexOutOfRange,
                              "edge " + std::to_string(e.from) + "->" + std::to_string(e.to) + " outside " +
                                  std::to_string(n) + " agents");
        }
        if (!graph.has_edge(e.from, e.to)) {
            throw SystemError(SystemError::Kind::ConstraintOnAbsentEdge,
                              "constraint on absent edge " + std::to_string(e.from) + "->" + std::to_string(e.to));
        }
    }
    std::sort(edges.begin(), edges.end(), [](const EdgeConstraint& a, const EdgeConstraint& b) {
        return a.to != b.to ? a.to < b.to : a.from < b.from;
    });
    for (std::size_t k = 1; k < edges.size(); ++k) {
        if (edges[k].to == edges[k - 1].to && edges[k].from == edges[k - 1].from) {
            throw SystemError(SystemError::Kind::DuplicateConstraint, "two constraints on edge " +
                                                                          std::to_string(edges[k].from) + "->" +
                                                                          std::to_string(edges[k].to));
        }
    }

    System s(std::move(graph));
    s.inputs_.resize(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : s.graph_.in_neighbors(i)) {
            if (k >= edges.size() || edges[k].to != i || edges[k].from != j) {
                throw SystemError(SystemError::Kind::MissingConstraint,
                                  "edge " + std::to_string(j) + "->" + std::to_string(i) + " has no constraint");
            }
            s.inputs_[i].push_back({j, s.graph_.weight(i, j), std::make_shared<const ConstraintFn>(edges[k].f)});
            ++k;
        }
    }
    s.edges_ = std::move(edges);
    return s;
}

const ConstraintFn& System::constraint(std::size_t from, std::size_t to) const {
    if (to < inputs_.size()) {
        for (const auto& in : inputs_[to])
            if (in.from == from) return *in.f;
    }
    throw SystemError(SystemError::Kind::IndexOutOfRange,
                      "no edge " + std::to_string(from) + "->" + std::to_string(to));
}

}  // namespace tcc
