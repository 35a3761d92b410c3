#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcc {

class GraphError : public std::runtime_error {
public:
    enum class Kind { NonSquare, NegativeWeight, NonzeroDiagonal, NonFinite };

    GraphError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Weighted directed interaction network.
///
/// weight(i, j) > 0 means agent j transmits to agent i, i.e. the edge
/// (v_j, v_i) exists and enters agent i's input sum with that weight.
/// Immutable once built.
class Digraph {
public:
    /// Validates and builds from a row-major square matrix. The diagonal must
    /// already be zero; it is never repaired silently.
    static Digraph build(const std::vector<std::vector<double>>& weights);

    std::size_t size() const noexcept { return n_; }
    double weight(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
    bool has_edge(std::size_t from, std::size_t to) const { return weight(to, from) > 0.0; }

    /// N_i: agents j with a_ij > 0, in increasing order.
    std::span<const std::size_t> in_neighbors(std::size_t i) const { return in_[i]; }

    std::vector<std::vector<double>> matrix() const;

    /// Copy with every weight multiplied by a positive factor.
    Digraph scaled(double factor) const;

private:
    Digraph() = default;

    std::size_t n_ = 0;
    std::vector<double> w_;
    std::vector<std::vector<std::size_t>> in_;
};

struct RowStats {
    std::vector<double> alpha;  // row sums
    double a_bar = 0.0;         // max row sum
};

bool is_strongly_connected(const Digraph& g);
RowStats row_stats(const Digraph& g);

}  // namespace tcc
