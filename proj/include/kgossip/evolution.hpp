#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "flow.hpp"
#include "graph.hpp"
#include "schedule.hpp"

namespace kgossip {

enum class ArcKind { buffer, transmit, broadcast, selection, auxiliary };

/// Time-expanded network for rounds [start_round, start_round + l).
///
/// Multiport: l+1 levels; level i is the state after round start_round+i-1.
/// Broadcast: 2l+1 levels; round i runs from level 2(i-1) through the
/// selection level 2i-1 to level 2i.
class EvolutionGraph {
public:
    struct ArcInfo {
        ArcKind kind;
        /// Absolute round of the arc (0 for auxiliary arcs).
        int round;
        NodeId from_node;
        NodeId to_node;
    };

    ScheduleMode mode() const { return mode_; }
    int n() const { return n_; }
    int rounds() const { return rounds_; }
    int start_round() const { return start_; }
    int levels() const { return mode_ == ScheduleMode::multiport ? rounds_ + 1 : 2 * rounds_ + 1; }
    /// Index of the level holding the state after all l rounds.
    int top_level() const { return levels() - 1; }
    int leveled_vertex_count() const { return levels() * n_; }

    int vertex(NodeId v, int level) const {
        if (v < 0 || v >= n_ || level < 0 || level > top_level())
            throw std::out_of_range("evolution vertex out of range");
        return level * n_ + v;
    }

    FlowNetwork& network() { return net_; }
    const FlowNetwork& network() const { return net_; }
    const ArcInfo& info(int arc) const { return info_[static_cast<std::size_t>(arc / 2)]; }

    int count(ArcKind kind) const {
        int c = 0;
        for (const auto& a : info_) c += a.kind == kind;
        return c;
    }

    /// Adds an extra vertex (super-source, super-sink, per-token hub).
    int add_auxiliary_vertex() { return net_.add_vertex(); }
    int add_auxiliary_arc(int from, int to, long long cap) {
        return add(from, to, cap, {ArcKind::auxiliary, 0, -1, -1});
    }

    /// Capacity used in place of infinity on buffer arcs.
    long long infinite_capacity() const { return infinity_; }

    friend EvolutionGraph build_evolution(const GraphSequence&, int, ScheduleMode, int, int);

private:
    int add(int from, int to, long long cap, ArcInfo i) {
        const int id = net_.add_arc(from, to, cap);
        info_.push_back(i);
        return id;
    }

    ScheduleMode mode_ = ScheduleMode::multiport;
    int n_ = 0;
    int rounds_ = 0;
    int start_ = 1;
    long long infinity_ = 1;
    FlowNetwork net_;
    std::vector<ArcInfo> info_;
};

/// Evolution graph over rounds start_round .. start_round+l-1 of `graphs`.
/// `k` sizes the surrogate infinity n*k+1 on buffer arcs.
inline EvolutionGraph build_evolution(const GraphSequence& graphs, int l, ScheduleMode mode,
                                      int start_round = 1, int k = 1) {
    if (l < 0) throw std::invalid_argument("negative level count");
    if (start_round < 1) throw std::invalid_argument("rounds are numbered from 1");
    if (static_cast<long long>(start_round) - 1 + l > static_cast<long long>(graphs.length()))
        throw std::invalid_argument("evolution graph needs rounds up to " +
                                    std::to_string(start_round - 1 + l) + " but only " +
                                    std::to_string(graphs.length()) + " are available");
    EvolutionGraph e;
    e.mode_ = mode;
    e.n_ = graphs.n();
    e.rounds_ = l;
    e.start_ = start_round;
    e.infinity_ = static_cast<long long>(e.n_) * std::max(k, 1) + 1;
    e.net_ = FlowNetwork(e.leveled_vertex_count());
    const int n = e.n_;
    for (int i = 1; i <= l; ++i) {
        const int r = start_round + i - 1;
        const RoundGraph& g = graphs.round(r);
        if (mode == ScheduleMode::multiport) {
            for (NodeId v = 0; v < n; ++v)
                e.add(e.vertex(v, i - 1), e.vertex(v, i), e.infinity_, {ArcKind::buffer, r, v, v});
            for (auto [u, v] : g.edges()) {
                e.add(e.vertex(u, i - 1), e.vertex(v, i), 1, {ArcKind::transmit, r, u, v});
                e.add(e.vertex(v, i - 1), e.vertex(u, i), 1, {ArcKind::transmit, r, v, u});
            }
        } else {
            const int lo = 2 * (i - 1), mid = 2 * i - 1, hi = 2 * i;
            for (NodeId v = 0; v < n; ++v) {
                e.add(e.vertex(v, lo), e.vertex(v, hi), e.infinity_, {ArcKind::buffer, r, v, v});
                e.add(e.vertex(v, lo), e.vertex(v, mid), 1, {ArcKind::selection, r, v, v});
            }
            for (auto [u, v] : g.edges()) {
                e.add(e.vertex(u, mid), e.vertex(v, hi), 1, {ArcKind::broadcast, r, u, v});
                e.add(e.vertex(v, mid), e.vertex(u, hi), 1, {ArcKind::broadcast, r, v, u});
            }
        }
    }
    return e;
}

}  // namespace kgossip
