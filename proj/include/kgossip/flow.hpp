#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace kgossip {

/// Directed network with integral capacities and Dinic's blocking-flow max
/// flow. Arcs are stored with their reverse residual twin at index ^ 1.
class FlowNetwork {
public:
    struct Arc {
        int to;
        long long cap;
        long long flow;
    };

    FlowNetwork() = default;
    explicit FlowNetwork(int vertices) : adj_(static_cast<std::size_t>(vertices)) {}

    int add_vertex() {
        adj_.emplace_back();
        return static_cast<int>(adj_.size()) - 1;
    }

    /// Returns the id of the forward arc.
    int add_arc(int from, int to, long long cap) {
        if (from < 0 || to < 0 || from >= vertex_count() || to >= vertex_count())
            throw std::out_of_range("arc endpoint outside the network");
        if (cap < 0) throw std::invalid_argument("negative capacity");
        const int id = static_cast<int>(arcs_.size());
        arcs_.push_back({to, cap, 0});
        arcs_.push_back({from, 0, 0});
        adj_[static_cast<std::size_t>(from)].push_back(id);
        adj_[static_cast<std::size_t>(to)].push_back(id + 1);
        return id;
    }

    int vertex_count() const { return static_cast<int>(adj_.size()); }
    /// Number of forward arcs.
    int arc_count() const { return static_cast<int>(arcs_.size() / 2); }
    const Arc& arc(int id) const { return arcs_[static_cast<std::size_t>(id)]; }
    int arc_from(int id) const { return arcs_[static_cast<std::size_t>(id ^ 1)].to; }
    const std::vector<int>& out_arcs(int v) const { return adj_[static_cast<std::size_t>(v)]; }

    void reset_flow() {
        for (auto& a : arcs_) a.flow = 0;
    }

    long long max_flow(int s, int t, long long limit = std::numeric_limits<long long>::max()) {
        if (s == t) throw std::invalid_argument("source equals sink");
        long long total = 0;
        while (total < limit && bfs(s, t)) {
            it_.assign(adj_.size(), 0);
            while (total < limit) {
                const long long pushed = dfs(s, t, limit - total);
                if (pushed == 0) break;
                total += pushed;
            }
        }
        return total;
    }

    /// Minimum cut side reachable from s in the residual graph (valid after
    /// max_flow).
    std::vector<char> source_side(int s) const {
        std::vector<char> seen(adj_.size(), 0);
        std::vector<int> stack{s};
        seen[static_cast<std::size_t>(s)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int id : adj_[static_cast<std::size_t>(v)]) {
                const Arc& a = arcs_[static_cast<std::size_t>(id)];
                if (a.cap - a.flow > 0 && !seen[static_cast<std::size_t>(a.to)]) {
                    seen[static_cast<std::size_t>(a.to)] = 1;
                    stack.push_back(a.to);
                }
            }
        }
        return seen;
    }

    /// Splits the current flow into unit s-t paths, given as forward-arc ids.
    /// Requires an acyclic flow (guaranteed on leveled networks).
    std::vector<std::vector<int>> unit_paths(int s, int t) const {
        std::vector<long long> remaining(arcs_.size() / 2);
        for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = arcs_[2 * i].flow;
        std::vector<std::size_t> cursor(adj_.size(), 0);
        std::vector<std::vector<int>> paths;
        auto next_arc = [&](int v) -> int {
            auto& c = cursor[static_cast<std::size_t>(v)];
            const auto& out = adj_[static_cast<std::size_t>(v)];
            while (c < out.size()) {
                const int id = out[c];
                if ((id & 1) == 0 && remaining[static_cast<std::size_t>(id / 2)] > 0) return id;
                ++c;
            }
            return -1;
        };
        while (true) {
            int id = next_arc(s);
            if (id < 0) break;
            std::vector<int> path;
            int v = s;
            while (v != t) {
                id = next_arc(v);
                if (id < 0) throw std::logic_error("flow is not conserved");
                --remaining[static_cast<std::size_t>(id / 2)];
                path.push_back(id);
                v = arcs_[static_cast<std::size_t>(id)].to;
                if (path.size() > arcs_.size()) throw std::logic_error("flow contains a cycle");
            }
            paths.push_back(std::move(path));
        }
        return paths;
    }

private:
    bool bfs(int s, int t) {
        level_.assign(adj_.size(), -1);
        std::queue<int> q;
        level_[static_cast<std::size_t>(s)] = 0;
        q.push(s);
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (int id : adj_[static_cast<std::size_t>(v)]) {
                const Arc& a = arcs_[static_cast<std::size_t>(id)];
                if (a.cap - a.flow > 0 && level_[static_cast<std::size_t>(a.to)] < 0) {
                    level_[static_cast<std::size_t>(a.to)] = level_[static_cast<std::size_t>(v)] + 1;
                    q.push(a.to);
                }
            }
        }
        return level_[static_cast<std::size_t>(t)] >= 0;
    }

    // Iterative augmenting-path search in the level graph.
    long long dfs(int s, int t, long long limit) {
        std::vector<int> stack;  // arc ids along the current path
        int v = s;
        while (true) {
            if (v == t) {
                long long push = limit;
                for (int id : stack) {
                    const Arc& a = arcs_[static_cast<std::size_t>(id)];
                    push = std::min(push, a.cap - a.flow);
                }
                for (int id : stack) {
                    arcs_[static_cast<std::size_t>(id)].flow += push;
                    arcs_[static_cast<std::size_t>(id ^ 1)].flow -= push;
                }
                return push;
            }
            auto& i = it_[static_cast<std::size_t>(v)];
            const auto& out = adj_[static_cast<std::size_t>(v)];
            bool advanced = false;
            for (; i < out.size(); ++i) {
                const int id = out[i];
                const Arc& a = arcs_[static_cast<std::size_t>(id)];
                if (a.cap - a.flow > 0 &&
                    level_[static_cast<std::size_t>(a.to)] == level_[static_cast<std::size_t>(v)] + 1) {
                    stack.push_back(id);
                    v = a.to;
                    advanced = true;
                    break;
                }
            }
            if (advanced) continue;
            // Dead end: prune v from the level graph and retreat.
            level_[static_cast<std::size_t>(v)] = -1;
            if (stack.empty()) return 0;
            const int back = stack.back();
            stack.pop_back();
            v = arcs_[static_cast<std::size_t>(back ^ 1)].to;
            ++it_[static_cast<std::size_t>(v)];
        }
    }

    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> it_;
};

}  // namespace kgossip
