#pragma once

#include "tcc/constraints.hpp"
#include "tcc/graph.hpp"

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcc {

class SystemError : public std::runtime_error {
public:
    enum class Kind { IndexOutOfRange, MissingConstraint, ConstraintOnAbsentEdge, DuplicateConstraint };

    SystemError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Constraint on the transmission from agent `from` to agent `to`.
struct EdgeConstraint {
    std::size_t from = 0;
    std::size_t to = 0;
    ConstraintFn f;
};

/// Digraph plus one constraint per edge. Immutable once built.
class System {
public:
    struct Input {
        std::size_t from;
        double weight;
        std::shared_ptr<const ConstraintFn> f;
    };

    static System build(Digraph graph, std::vector<EdgeConstraint> edges);

    const Digraph& graph() const noexcept { return graph_; }
    std::size_t size() const noexcept { return graph_.size(); }

    /// Edges sorted by (to, from).
    const std::vector<EdgeConstraint>& edges() const noexcept { return edges_; }
    std::span<const Input> inputs(std::size_t to) const { return inputs_[to]; }
    const ConstraintFn& constraint(std::size_t from, std::size_t to) const;

private:
    System(Digraph g) : graph_(std::move(g)) {}

    Digraph graph_;
    std::vector<EdgeConstraint> edges_;
    std::vector<std::vector<Input>> inputs_;
};

}  // namespace tcc
