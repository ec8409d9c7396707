#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "adversaries.hpp"
#include "bounds.hpp"
#include "distribution.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace kgossip {

enum class BroadcastPolicy { uniform_random_held, round_robin_held, min_id_held };

/// Per-node broadcast choice for round `round`. Node v draws from the stream
/// keyed (seed, round, v).
inline BroadcastChoice choose_broadcasts(BroadcastPolicy policy, const TokenDistribution& dist,
                                         int round, std::uint64_t seed) {
    BroadcastChoice out(static_cast<std::size_t>(dist.n));
    for (NodeId v = 0; v < dist.n; ++v) {
        const auto& held = dist.at(v);
        const std::size_t c = held.count();
        if (c == 0) continue;
        std::size_t rank = 0;
        switch (policy) {
            case BroadcastPolicy::uniform_random_held: {
                Rng rng = Rng::derive(seed, "choose", static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(v));
                rank = rng.uniform(c);
                break;
            }
            case BroadcastPolicy::round_robin_held:
                rank = static_cast<std::size_t>(round - 1) % c;
                break;
            case BroadcastPolicy::min_id_held:
                rank = 0;
                break;
        }
        out[static_cast<std::size_t>(v)] = held.nth(rank);
    }
    return out;
}

/// Transfers implied by everyone broadcasting their choice to all neighbors.
/// Only receptions of a token the neighbor lacks are listed; the rest carry
/// nothing and do not change the state.
inline std::vector<Transfer> broadcast_transfers(const TokenDistribution& dist,
                                                 const RoundGraph& g,
                                                 const BroadcastChoice& choices, int round) {
    std::vector<Transfer> out;
    for (NodeId v = 0; v < dist.n; ++v) {
        const auto& c = choices[static_cast<std::size_t>(v)];
        if (!c) continue;
        for (NodeId w : g.neighbors(v))
            if (!dist.at(w).test(*c)) out.push_back({round, v, w, *c});
    }
    return out;
}

namespace detail {
inline Transfer directed_send(const TokenDistribution& dist, NodeId u, NodeId v, TokenId t,
                              int round) {
    return dist.at(u).test(t) ? Transfer{round, u, v, t} : Transfer{round, v, u, t};
}
}  // namespace detail

/// SYM-DIFF: on every edge, a uniform element of the endpoints' symmetric
/// difference moves from its holder to the other endpoint. The stream for
/// edge (u,v), u < v, is keyed (seed, round, u, v).
inline std::vector<Transfer> symdiff_exchanges(const TokenDistribution& dist, const RoundGraph& g,
                                               int round, std::uint64_t seed) {
    if (g.n() != dist.n) throw std::invalid_argument("graph and distribution disagree on n");
    std::vector<Transfer> out;
    for (auto [u, v] : g.edges()) {
        const TokenSet diff = dist.at(u) ^ dist.at(v);
        const std::size_t c = diff.count();
        if (c == 0) continue;
        Rng rng = Rng::derive(seed, "symdiff", static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v));
        out.push_back(detail::directed_send(dist, u, v, diff.nth(rng.uniform(c)), round));
    }
    return out;
}

/// DET-SYM-DIFF with the minimum-id rule.
inline std::vector<Transfer> det_symdiff_exchanges(const TokenDistribution& dist,
                                                   const RoundGraph& g, int round = 1) {
    if (g.n() != dist.n) throw std::invalid_argument("graph and distribution disagree on n");
    std::vector<Transfer> out;
    for (auto [u, v] : g.edges()) {
        const TokenSet diff = dist.at(u) ^ dist.at(v);
        if (auto t = diff.first()) out.push_back(detail::directed_send(dist, u, v, *t, round));
    }
    return out;
}

/// Nodes with identical holdings, numbered in order of their smallest member.
struct GroupPartition {
    std::vector<std::vector<NodeId>> groups;
    std::vector<int> group_of;

    std::size_t size() const { return groups.size(); }
};

inline GroupPartition groups(const TokenDistribution& dist) {
    GroupPartition p;
    p.group_of.assign(static_cast<std::size_t>(dist.n), -1);
    std::unordered_map<TokenSet, int, TokenSetHash> index;
    for (NodeId v = 0; v < dist.n; ++v) {
        auto [it, inserted] = index.emplace(dist.at(v), static_cast<int>(p.groups.size()));
        if (inserted) p.groups.emplace_back();
        p.groups[static_cast<std::size_t>(it->second)].push_back(v);
        p.group_of[static_cast<std::size_t>(v)] = it->second;
    }
    return p;
}

inline std::vector<Edge> inter_group_edges(const GroupPartition& p, const RoundGraph& g) {
    std::vector<Edge> out;
    for (auto [u, v] : g.edges())
        if (p.group_of[static_cast<std::size_t>(u)] != p.group_of[static_cast<std::size_t>(v)])
            out.emplace_back(u, v);
    return out;
}

inline std::vector<Edge> inter_group_edges(const TokenDistribution& dist, const RoundGraph& g) {
    return inter_group_edges(groups(dist), g);
}

class OrientationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Directed (from, to) pairs, one per inter-group edge.
using Orientation = std::vector<Edge>;

/// Orientation drawn uniformly among the legal directions of each
/// inter-group edge (a direction u->v is legal iff u holds something v lacks).
inline Orientation random_legal_orientation(const TokenDistribution& dist, const RoundGraph& g,
                                            int round, std::uint64_t seed) {
    Orientation o;
    for (auto [u, v] : inter_group_edges(dist, g)) {
        const bool uv = !dist.at(u).is_subset_of(dist.at(v));
        const bool vu = !dist.at(v).is_subset_of(dist.at(u));
        if (uv && vu) {
            Rng rng = Rng::derive(seed, "orient", static_cast<std::uint64_t>(round),
                                  static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v));
            o.push_back(rng.bit() ? Edge{u, v} : Edge{v, u});
        } else {
            o.push_back(uv ? Edge{u, v} : Edge{v, u});
        }
    }
    return o;
}

/// Oriented SYM-DIFF: along each oriented edge u->v, a uniform element of
/// holdings(u) minus holdings(v) moves to v. Every inter-group edge must be
/// oriented exactly once; no direction may start at a subset of its target.
inline std::vector<Transfer> symdiff_oriented_exchanges(const TokenDistribution& dist,
                                                        const RoundGraph& g,
                                                        const Orientation& orientation, int round,
                                                        std::uint64_t seed) {
    const auto part = groups(dist);
    auto required = inter_group_edges(part, g);
    std::vector<Edge> given;
    for (auto [u, v] : orientation) {
        if (!g.has_edge(u, v)) throw OrientationError("oriented pair is not an edge");
        if (part.group_of[static_cast<std::size_t>(u)] == part.group_of[static_cast<std::size_t>(v)])
            throw OrientationError("oriented edge joins nodes of the same group");
        given.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(given.begin(), given.end());
    if (given != required)
        throw OrientationError("orientation must cover each inter-group edge exactly once");

    std::vector<Transfer> out;
    for (auto [u, v] : orientation) {
        const TokenSet diff = dist.at(u) - dist.at(v);
        const std::size_t c = diff.count();
        if (c == 0)
            throw OrientationError("illegal orientation " + std::to_string(u) + "->" +
                                   std::to_string(v) + ": sender holds a subset of the receiver");
        Rng rng = Rng::derive(seed, "symdiff", static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(std::min(u, v)),
                              static_cast<std::uint64_t>(std::max(u, v)));
        out.push_back({round, u, v, diff.nth(rng.uniform(c))});
    }
    return out;
}

enum class RoundColor { red, green, blue, black };

inline const char* to_string(RoundColor c) {
    switch (c) {
        case RoundColor::red: return "red";
        case RoundColor::green: return "green";
        case RoundColor::blue: return "blue";
        case RoundColor::black: return "black";
    }
    return "?";
}

/// Red: some node missing fewer than log2(n) tokens made progress. Green: some
/// node received at least `fraction` of what it was missing. Blue: any other
/// progress. Black: none.
inline RoundColor classify_round(const TokenDistribution& before, const TokenDistribution& after,
                                 double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("green fraction must lie in (0,1)");
    const double red_threshold = log2n(static_cast<double>(before.n));
    bool any_progress = false, green = false;
    for (NodeId v = 0; v < before.n; ++v) {
        const auto had = static_cast<double>(before.at(v).count());
        const double missing = static_cast<double>(before.k) - had;
        const double gained = static_cast<double>(after.at(v).count()) - had;
        if (gained < 1) continue;
        any_progress = true;
        if (missing < red_threshold) return RoundColor::red;
        if (gained >= fraction * missing) green = true;
    }
    if (green) return RoundColor::green;
    return any_progress ? RoundColor::blue : RoundColor::black;
}

}  // namespace kgossip
