#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "token_set.hpp"

namespace kgossip {

using Edge = std::pair<NodeId, NodeId>;

class GraphError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Minimal union-find with path halving.
class DisjointSets {
public:
    explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            auto& p = parent_[static_cast<std::size_t>(x)];
            p = parent_[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        return true;
    }

private:
    std::vector<int> parent_;
};

/// Undirected connected communication graph for one round.
///
/// Edges are stored normalized (u < v) and sorted. Construction rejects
/// self-loops, duplicate edges, out-of-range endpoints and disconnected
/// graphs.
class RoundGraph {
public:
    RoundGraph() = default;

    RoundGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
        if (n < 1) throw GraphError("graph must have at least one node");
        for (auto& [u, v] : edges_) {
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw GraphError("edge endpoint out of range: (" + std::to_string(u) + "," +
                                 std::to_string(v) + ")");
            if (u == v) throw GraphError("self-loop at node " + std::to_string(u));
            if (u > v) std::swap(u, v);
        }
        if (!std::is_sorted(edges_.begin(), edges_.end())) std::sort(edges_.begin(), edges_.end());
        if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
            throw GraphError("duplicate edge");
        adjacency_.assign(static_cast<std::size_t>(n), {});
        {
            std::vector<std::size_t> degree(static_cast<std::size_t>(n), 0);
            for (auto [u, v] : edges_) {
                ++degree[static_cast<std::size_t>(u)];
                ++degree[static_cast<std::size_t>(v)];
            }
            for (std::size_t x = 0; x < degree.size(); ++x) adjacency_[x].reserve(degree[x]);
        }
        for (auto [u, v] : edges_) {
            adjacency_[static_cast<std::size_t>(u)].push_back(v);
            adjacency_[static_cast<std::size_t>(v)].push_back(u);
        }
        // Sorted edge order already leaves every adjacency list ascending.
        if (!is_connected()) throw GraphError("round graph is disconnected");
    }

    int n() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<NodeId>& neighbors(NodeId v) const {
        return adjacency_[static_cast<std::size_t>(v)];
    }

    bool has_edge(NodeId u, NodeId v) const {
        if (u < 0 || v < 0 || u >= n_ || v >= n_ || u == v) return false;
        const auto& a = adjacency_[static_cast<std::size_t>(u)];
        return std::binary_search(a.begin(), a.end(), v);
    }

    /// True when the edge set forms a spanning tree.
    bool is_tree() const { return edges_.size() + 1 == static_cast<std::size_t>(n_); }

    friend bool operator==(const RoundGraph& a, const RoundGraph& b) {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

private:
    bool is_connected() const {
        DisjointSets ds(n_);
        int comps = n_;
        for (auto [u, v] : edges_)
            if (ds.unite(u, v)) --comps;
        return comps == 1;
    }

    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adjacency_;
};

/// Ordered list of round graphs over a common node set; round r is 1-based.
class GraphSequence {
public:
    GraphSequence() = default;
    explicit GraphSequence(int n) : n_(n) {}
    GraphSequence(int n, std::vector<RoundGraph> rounds) : n_(n), rounds_(std::move(rounds)) {
        for (const auto& g : rounds_)
            if (g.n() != n_) throw GraphError("round graph node count differs from sequence");
    }

    int n() const { return n_; }
    std::size_t length() const { return rounds_.size(); }
    const std::vector<RoundGraph>& rounds() const { return rounds_; }

    const RoundGraph& round(int r) const {
        if (r < 1 || static_cast<std::size_t>(r) > rounds_.size())
            throw std::out_of_range("round " + std::to_string(r) + " outside sequence of length " +
                                    std::to_string(rounds_.size()));
        return rounds_[static_cast<std::size_t>(r - 1)];
    }

    void push_back(RoundGraph g) {
        if (g.n() != n_) throw GraphError("round graph node count differs from sequence");
        rounds_.push_back(std::move(g));
    }

private:
    int n_ = 0;
    std::vector<RoundGraph> rounds_;
};

}  // namespace kgossip
