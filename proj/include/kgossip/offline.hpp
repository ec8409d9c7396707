#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bounds.hpp"
#include "distribution.hpp"
#include "evolution.hpp"
#include "graph.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace kgossip {

/// Raised when a required flow value is not reached.
class FlowDeficit : public std::runtime_error {
public:
    FlowDeficit(const std::string& what, long long required, long long achieved)
        : std::runtime_error(what), required_(required), achieved_(achieved) {}
    long long required() const { return required_; }
    long long achieved() const { return achieved_; }

private:
    long long required_, achieved_;
};

/// A unit flow path (forward arc ids, super-source first) and the token it carries.
struct LabeledPath {
    std::vector<int> arcs;
    TokenId token = 0;
};

struct FlowResult {
    long long value = 0;
    /// Flow on every forward arc, indexed by arc id / 2.
    std::vector<long long> arc_flow;
    std::vector<LabeledPath> paths;
};

inline std::vector<long long> arc_flows(const FlowNetwork& net) {
    std::vector<long long> f(static_cast<std::size_t>(net.arc_count()));
    for (int i = 0; i < net.arc_count(); ++i) f[static_cast<std::size_t>(i)] = net.arc(2 * i).flow;
    return f;
}

/// Reads transfers off the transmit and broadcast arcs of labeled paths
/// through `e`. `start` gives the holdings at the beginning of the window:
/// each path's first leveled vertex must be at level 0 on a node holding the
/// path's token. Paths may share only arcs with capacity above one.
inline Schedule paths_to_schedule(const EvolutionGraph& e, const std::vector<LabeledPath>& paths,
                                  const TokenDistribution& start) {
    Schedule s;
    s.mode = e.mode();
    std::map<int, int> unit_use;
    const int leveled = e.leveled_vertex_count();
    for (const auto& p : paths) {
        int origin = -1;
        for (int id : p.arcs) {
            const int from = e.network().arc_from(id);
            if (from < leveled) {
                origin = from;
                break;
            }
        }
        if (origin >= 0) {
            if (origin >= e.n())
                throw std::invalid_argument("path does not start at level 0");
            if (!start.at(origin).test(p.token))
                throw std::invalid_argument("path origin " + std::to_string(origin) +
                                            " lacks token " + std::to_string(p.token));
        }
        for (int id : p.arcs) {
            if (e.network().arc(id).cap == 1 && ++unit_use[id] > 1)
                throw std::invalid_argument("paths share a unit-capacity arc");
            const auto& info = e.info(id);
            if (info.kind == ArcKind::transmit || info.kind == ArcKind::broadcast)
                s.transfers.push_back({info.round, info.from_node, info.to_node, p.token});
        }
    }
    s.sort();
    return s;
}

struct GatherResult {
    Schedule schedule;
    long long flow = 0;
    int start_round = 1;
    int rounds = 0;
};

inline void apply_schedule(TokenDistribution& d, const Schedule& s) {
    for (const auto& t : s.transfers) d.at(t.to).set(t.token);
}

/// Moves every token to `target` within rounds [start_round, start_round+n+k).
/// Each token gets its own hub vertex fed by a unit arc from the super-source
/// and wired to the level-0 copy of every holder, so every token is routed
/// exactly once.
inline GatherResult gather_schedule(const GraphSequence& graphs, const TokenDistribution& holders,
                                    NodeId target, ScheduleMode mode, int start_round = 1) {
    const int n = holders.n, k = holders.k;
    if (graphs.n() != n) throw std::invalid_argument("graph sequence and distribution disagree on n");
    if (target < 0 || target >= n) throw std::out_of_range("gather target out of range");
    GatherResult out;
    out.schedule.mode = mode;
    out.start_round = start_round;
    out.rounds = n + k;
    if (holders.at(target).full()) {
        out.flow = k;
        return out;
    }
    auto e = build_evolution(graphs, n + k, mode, start_round, k);
    const int s = e.add_auxiliary_vertex();
    const int t = e.add_auxiliary_vertex();
    std::vector<int> hub(static_cast<std::size_t>(k));
    std::map<int, TokenId> token_of_hub;
    for (TokenId tok = 0; tok < k; ++tok) {
        hub[static_cast<std::size_t>(tok)] = e.add_auxiliary_vertex();
        token_of_hub[hub[static_cast<std::size_t>(tok)]] = tok;
        e.add_auxiliary_arc(s, hub[static_cast<std::size_t>(tok)], 1);
        bool held = false;
        for (NodeId v = 0; v < n; ++v)
            if (holders.at(v).test(tok)) {
                e.add_auxiliary_arc(hub[static_cast<std::size_t>(tok)], e.vertex(v, 0), 1);
                held = true;
            }
        if (!held) throw std::invalid_argument("token " + std::to_string(tok) + " has no holder");
    }
    e.add_auxiliary_arc(e.vertex(target, e.top_level()), t, k);
    out.flow = e.network().max_flow(s, t);
    if (out.flow < k)
        throw FlowDeficit("gather flow " + std::to_string(out.flow) + " < k = " + std::to_string(k),
                          k, out.flow);
    std::vector<LabeledPath> paths;
    for (auto& arcs : e.network().unit_paths(s, t)) {
        const TokenId tok = token_of_hub.at(e.network().arc(arcs.front()).to);
        paths.push_back({std::move(arcs), tok});
    }
    out.schedule = paths_to_schedule(e, paths, holders);
    return out;
}

/// Max flow from the level-0 copies of `sources` to the top-level copies of
/// `sinks` (each sink capped at k) over rounds [start, start+l). Each sink's
/// paths are labeled 0..k-1 in lexicographic order of their arc sequences.
/// Returns the flow value and, when it reaches |sinks|*k, the schedule.
struct MulticastFlow {
    long long value = 0;
    Schedule schedule;
};

inline MulticastFlow multicast_flow(const GraphSequence& graphs, const std::vector<NodeId>& sources,
                                    const std::vector<NodeId>& sinks, int k, int start, int l,
                                    ScheduleMode mode, const TokenDistribution& state) {
    auto e = build_evolution(graphs, l, mode, start, k);
    const int s = e.add_auxiliary_vertex();
    const int t = e.add_auxiliary_vertex();
    for (NodeId v : sources) e.add_auxiliary_arc(s, e.vertex(v, 0), e.infinite_capacity());
    std::map<int, std::size_t> sink_of_arc;
    for (std::size_t i = 0; i < sinks.size(); ++i)
        sink_of_arc[e.add_auxiliary_arc(e.vertex(sinks[i], e.top_level()), t, k)] = i;
    MulticastFlow out;
    out.value = e.network().max_flow(s, t);
    out.schedule.mode = mode;
    if (out.value < static_cast<long long>(sinks.size()) * k) return out;
    std::vector<std::vector<std::vector<int>>> per_sink(sinks.size());
    for (auto& p : e.network().unit_paths(s, t)) per_sink[sink_of_arc.at(p.back())].push_back(std::move(p));
    std::vector<LabeledPath> labeled;
    for (auto& group : per_sink) {
        std::sort(group.begin(), group.end());
        for (std::size_t i = 0; i < group.size(); ++i)
            labeled.push_back({std::move(group[i]), static_cast<TokenId>(i)});
    }
    out.schedule = paths_to_schedule(e, labeled, state);
    return out;
}

// Algorithm 1 (multiport).

struct Algorithm1Phase {
    int index = 0;
    int sinks = 0;
    long long required = 0;
    long long flow = 0;
    /// Shortest window (rounds) found to carry the required flow.
    int window = 0;
    /// Times the phase budget c1*(n+k)*ceil(log2 n) was doubled.
    int retries = 0;
    int start_round = 0;
    /// Last round with a transfer (start_round - 1 when none).
    int end_round = 0;
};

struct Algorithm1Result {
    Schedule schedule;
    NodeId v0 = 0;
    GatherResult gather;
    std::vector<Algorithm1Phase> phases;
};

class PhaseFailure : public FlowDeficit {
public:
    PhaseFailure(const std::string& what, int phase, long long required, long long achieved)
        : FlowDeficit(what, required, achieved), phase_(phase) {}
    int phase() const { return phase_; }

private:
    int phase_;
};

/// Gather at a random v0, then phases i = 0..ceil(log2 n) that each deliver
/// all tokens to a uniform sample of min(2^i, n) sinks by a max flow from
/// the current sources. A phase has a budget of c1*(n+k)*ceil(log2 n) rounds;
/// on deficit the budget is doubled (same start) up to `max_retries` times.
/// Within the budget the shortest feasible window is used, and the next
/// phase starts right after the last round the previous one used.
inline Algorithm1Result algorithm1(const GraphSequence& graphs, const TokenDistribution& init, Rng& rng,
                                   int c1 = 4, int max_retries = 3) {
    const int n = init.n, k = init.k;
    if (graphs.n() != n) throw std::invalid_argument("graph sequence and distribution disagree on n");
    if (c1 < 1) throw std::invalid_argument("window constant must be positive");
    Algorithm1Result out;
    out.schedule.mode = ScheduleMode::multiport;
    if (n == 1 || k == 0 || init.complete()) return out;

    out.v0 = rng.uniform_int(n);
    out.gather = gather_schedule(graphs, init, out.v0, ScheduleMode::multiport, 1);
    out.schedule.append(out.gather.schedule);
    TokenDistribution state = init;
    apply_schedule(state, out.gather.schedule);
    int cursor = out.gather.schedule.length() + 1;

    std::vector<char> is_source(static_cast<std::size_t>(n), 0);
    is_source[static_cast<std::size_t>(out.v0)] = 1;
    const int logn = ceil_log2(static_cast<std::uint64_t>(n));
    const int base_window = c1 * (n + k) * logn;
    const int available = static_cast<int>(graphs.length());

    for (int i = 0; i <= logn; ++i) {
        Algorithm1Phase ph;
        ph.index = i;
        ph.sinks = static_cast<int>(std::min<long long>(1LL << i, n));
        ph.required = static_cast<long long>(ph.sinks) * k;
        ph.start_round = cursor;
        const auto sinks = rng.sample_without_replacement(n, ph.sinks);
        std::vector<NodeId> sources;
        for (NodeId v = 0; v < n; ++v)
            if (is_source[static_cast<std::size_t>(v)]) sources.push_back(v);

        auto attempt = [&](int l) {
            return multicast_flow(graphs, sources, sinks, k, cursor, l, ScheduleMode::multiport, state);
        };
        // Grow the window from n+k towards the phase budget; on success,
        // shrink it to the shortest feasible length.
        MulticastFlow f;
        int feasible = -1, infeasible = 0;
        for (ph.retries = 0;; ++ph.retries) {
            const long long want = static_cast<long long>(base_window) << ph.retries;
            const int cap = static_cast<int>(std::min<long long>(want, available - cursor + 1));
            if (cap < 1)
                throw PhaseFailure("graph sequence exhausted before phase " + std::to_string(i), i,
                                   ph.required, 0);
            for (int l = ph.retries == 0 ? std::min(cap, n + k) : cap;; l = std::min(cap, 2 * l)) {
                if (l <= infeasible) continue;
                f = attempt(l);
                ph.flow = f.value;
                if (f.value >= ph.required) {
                    feasible = l;
                    break;
                }
                infeasible = l;
                if (l == cap) break;
            }
            if (feasible > 0) break;
            if (ph.retries == max_retries || cap < want)
                throw PhaseFailure("phase " + std::to_string(i) + " flow " + std::to_string(f.value) +
                                       " < " + std::to_string(ph.required) + " after " +
                                       std::to_string(ph.retries) + " retries",
                                   i, ph.required, f.value);
        }
        while (feasible - infeasible > 1) {
            const int mid = infeasible + (feasible - infeasible) / 2;
            auto g = attempt(mid);
            if (g.value >= ph.required) {
                feasible = mid;
                f = std::move(g);
            } else {
                infeasible = mid;
            }
        }
        ph.window = feasible;
        ph.flow = f.value;
        ph.end_round = std::max(cursor - 1, f.schedule.length());
        out.schedule.append(f.schedule);
        apply_schedule(state, f.schedule);
        for (NodeId v : sinks) is_source[static_cast<std::size_t>(v)] = 1;
        cursor = ph.end_round + 1;
        out.phases.push_back(ph);
    }
    out.schedule.sort();
    return out;
}

// Tree decomposition.

struct Subtree {
    std::vector<NodeId> nodes;
    std::vector<Edge> edges;
};

namespace detail {

class TreeDecomposer {
public:
    TreeDecomposer(const RoundGraph& tree, int s) : g_(tree), s_(s) {}

    std::vector<Subtree> run() {
        const int n = g_.n();
        std::vector<NodeId> all(static_cast<std::size_t>(n));
        for (NodeId v = 0; v < n; ++v) all[static_cast<std::size_t>(v)] = v;
        if (n <= 2 * s_) {
            emit(all);
            return std::move(out_);
        }
        std::vector<std::vector<NodeId>> work{all};
        while (!work.empty()) {
            auto part = std::move(work.back());
            work.pop_back();
            step(part, work);
        }
        std::sort(out_.begin(), out_.end(),
                  [](const Subtree& a, const Subtree& b) { return a.nodes < b.nodes; });
        return std::move(out_);
    }

private:
    // Nodes reachable from `start` inside `alive` without entering `blocked`.
    std::vector<NodeId> collect(NodeId start, NodeId blocked) const {
        std::vector<NodeId> seen{start}, stack{start};
        mark_[static_cast<std::size_t>(start)] = stamp_;
        while (!stack.empty()) {
            const NodeId x = stack.back();
            stack.pop_back();
            for (NodeId y : g_.neighbors(x)) {
                if (y == blocked || !alive_[static_cast<std::size_t>(y)] ||
                    mark_[static_cast<std::size_t>(y)] == stamp_)
                    continue;
                mark_[static_cast<std::size_t>(y)] = stamp_;
                seen.push_back(y);
                stack.push_back(y);
            }
        }
        return seen;
    }

    void emit(std::vector<NodeId> nodes) {
        std::sort(nodes.begin(), nodes.end());
        Subtree t;
        for (auto [u, v] : g_.edges())
            if (std::binary_search(nodes.begin(), nodes.end(), u) &&
                std::binary_search(nodes.begin(), nodes.end(), v))
                t.edges.emplace_back(u, v);
        t.nodes = std::move(nodes);
        out_.push_back(std::move(t));
    }

    void step(const std::vector<NodeId>& part, std::vector<std::vector<NodeId>>& work) {
        const int n = g_.n();
        alive_.assign(static_cast<std::size_t>(n), 0);
        for (NodeId v : part) alive_[static_cast<std::size_t>(v)] = 1;
        mark_.assign(static_cast<std::size_t>(n), 0);
        stamp_ = 0;
        const NodeId root = *std::min_element(part.begin(), part.end());

        // Root the part and compute subtree sizes.
        std::vector<NodeId> parent(static_cast<std::size_t>(n), -1), order{root};
        std::vector<char> in(static_cast<std::size_t>(n), 0);
        in[static_cast<std::size_t>(root)] = 1;
        for (std::size_t i = 0; i < order.size(); ++i)
            for (NodeId y : g_.neighbors(order[i]))
                if (alive_[static_cast<std::size_t>(y)] && !in[static_cast<std::size_t>(y)]) {
                    in[static_cast<std::size_t>(y)] = 1;
                    parent[static_cast<std::size_t>(y)] = order[i];
                    order.push_back(y);
                }
        std::vector<int> size(static_cast<std::size_t>(n), 1);
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if (parent[static_cast<std::size_t>(*it)] >= 0)
                size[static_cast<std::size_t>(parent[static_cast<std::size_t>(*it)])] +=
                    size[static_cast<std::size_t>(*it)];

        // Deepest node with subtree size >= s whose children are all below s.
        NodeId v = root;
        while (true) {
            NodeId next = -1;
            for (NodeId y : g_.neighbors(v))
                if (alive_[static_cast<std::size_t>(y)] && parent[static_cast<std::size_t>(y)] == v &&
                    size[static_cast<std::size_t>(y)] >= s_) {
                    next = y;
                    break;
                }
            if (next < 0) break;
            v = next;
        }
        const int total = static_cast<int>(part.size());
        const int nv = size[static_cast<std::size_t>(v)];
        const int rest = total - nv;
        const NodeId p = parent[static_cast<std::size_t>(v)];

        if (nv <= 2 * s_) {
            if (rest >= s_) {
                ++stamp_;
                emit(collect(v, p));
                ++stamp_;
                work.push_back(collect(p, v));
            } else {
                emit(part);
            }
            return;
        }

        // Children of v (and, when the parent side is small, the parent side
        // as one more child) grouped so that 1 + sum of sizes >= s.
        std::vector<std::vector<NodeId>> children;
        for (NodeId y : g_.neighbors(v)) {
            if (!alive_[static_cast<std::size_t>(y)]) continue;
            if (y == p && rest >= s_) continue;
            ++stamp_;
            children.push_back(collect(y, v));
        }
        std::vector<std::vector<NodeId>> groups;
        std::vector<NodeId> cur;
        for (auto& c : children) {
            cur.insert(cur.end(), c.begin(), c.end());
            if (1 + static_cast<int>(cur.size()) >= s_) {
                groups.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) {
            if (groups.empty()) groups.push_back(std::move(cur));
            else groups.back().insert(groups.back().end(), cur.begin(), cur.end());
        }
        for (auto& grp : groups) {
            grp.push_back(v);
            emit(std::move(grp));
        }
        if (p >= 0 && rest >= s_) {
            ++stamp_;
            work.push_back(collect(p, v));
        }
    }

    const RoundGraph& g_;
    int s_;
    std::vector<Subtree> out_;
    std::vector<char> alive_;
    mutable std::vector<int> mark_;
    int stamp_ = 0;
};

}  // namespace detail

/// Splits a tree into subtrees of Theta(s) nodes covering every node, any
/// two sharing at most one node and no edge. Edges joining a split-off
/// subtree to the remainder are left out.
inline std::vector<Subtree> tree_decompose(const RoundGraph& tree, int s) {
    if (!tree.is_tree()) throw GraphError("tree_decompose needs a tree");
    if (s < 1 || s > tree.n()) throw std::invalid_argument("size parameter must lie in [1, n]");
    return detail::TreeDecomposer(tree, s).run();
}

// Broadcast-model flooding.

/// Every holder of `token` broadcasts it in each of rounds [start, start+rounds);
/// receptions by nodes lacking it are appended to `out` and applied to `state`.
inline void flood_token(const GraphSequence& graphs, TokenDistribution& state, TokenId token,
                        int start, int rounds, Schedule& out) {
    for (int r = start; r < start + rounds; ++r) {
        const RoundGraph& g = graphs.round(r);
        std::vector<NodeId> gains;
        bool everyone = true;
        for (NodeId v = 0; v < state.n; ++v) {
            if (!state.at(v).test(token)) {
                everyone = false;
                continue;
            }
            for (NodeId w : g.neighbors(v))
                if (!state.at(w).test(token)) {
                    out.transfers.push_back({r, v, w, token});
                    gains.push_back(w);
                }
        }
        if (everyone) return;
        for (NodeId w : gains) state.at(w).set(token);
    }
}

/// Least number of rounds after which flooding from `holders`, starting at
/// `window_start`, reaches `target`; nullopt if not within `budget` rounds.
inline std::optional<int> broadcast_distance(const GraphSequence& graphs, int window_start, int budget,
                                             const std::vector<NodeId>& holders, NodeId target) {
    const int n = graphs.n();
    if (target < 0 || target >= n) throw std::out_of_range("target out of range");
    std::vector<char> reached(static_cast<std::size_t>(n), 0);
    for (NodeId v : holders) {
        if (v < 0 || v >= n) throw std::out_of_range("holder out of range");
        reached[static_cast<std::size_t>(v)] = 1;
    }
    if (reached[static_cast<std::size_t>(target)]) return 0;
    for (int d = 1; d <= budget; ++d) {
        const int r = window_start + d - 1;
        if (r < 1 || static_cast<std::size_t>(r) > graphs.length())
            throw std::invalid_argument("window exceeds the graph sequence");
        auto next = reached;
        for (auto [u, v] : graphs.round(r).edges()) {
            if (reached[static_cast<std::size_t>(u)]) next[static_cast<std::size_t>(v)] = 1;
            if (reached[static_cast<std::size_t>(v)]) next[static_cast<std::size_t>(u)] = 1;
        }
        reached = std::move(next);
        if (reached[static_cast<std::size_t>(target)]) return d;
    }
    return std::nullopt;
}

// Algorithm 2 (broadcast).

inline int algorithm2_set_size(int n, int k) {
    return static_cast<int>(std::min<long long>(n, ceil_to_ll(2.0 * std::sqrt(k * log2n(n)))));
}

inline int flood_window(int n, int k) {
    return static_cast<int>(ceil_to_ll(2.0 * n * std::sqrt(log2n(n) / k)));
}

struct Algorithm2Options {
    /// Use this S instead of sampling one.
    std::optional<std::vector<NodeId>> preselected;
    /// Number of (n+k)-round gather windows reserved before flooding starts;
    /// defaults to |S|.
    std::optional<int> gather_slots;
};

struct Algorithm2Result {
    Schedule schedule;
    bool small_k = false;
    std::vector<NodeId> S;
    int window = 0;
    int flood_start = 1;
    /// Rounds reserved by the layout.
    long long length_bound = 0;
};

/// Small k (k <= sqrt(log2 n)): token t floods alone in rounds
/// [1 + t n, (t+1) n]. Otherwise all tokens are gathered at each member of S
/// in consecutive (n+k)-round windows, after which token t floods alone for
/// W = ceil(2 n sqrt(log2 n / k)) rounds, windows back to back.
inline Algorithm2Result algorithm2(const GraphSequence& graphs, const TokenDistribution& init, Rng& rng,
                                   const Algorithm2Options& opt = {}) {
    const int n = init.n, k = init.k;
    if (graphs.n() != n) throw std::invalid_argument("graph sequence and distribution disagree on n");
    Algorithm2Result out;
    out.schedule.mode = ScheduleMode::broadcast;
    if (n == 1 || k == 0) return out;
    TokenDistribution state = init;
    auto need = [&](long long rounds) {
        if (rounds > static_cast<long long>(graphs.length()))
            throw std::invalid_argument("graph sequence has " + std::to_string(graphs.length()) +
                                        " rounds, the schedule layout needs " + std::to_string(rounds));
    };

    if (!opt.preselected && k <= std::sqrt(log2n(n))) {
        out.small_k = true;
        out.window = n;
        out.length_bound = static_cast<long long>(k) * n;
        need(out.length_bound);
        for (TokenId t = 0; t < k; ++t) flood_token(graphs, state, t, 1 + t * n, n, out.schedule);
        out.schedule.sort();
        return out;
    }

    out.S = opt.preselected ? *opt.preselected : rng.sample_without_replacement(n, algorithm2_set_size(n, k));
    const int slots = opt.gather_slots.value_or(static_cast<int>(out.S.size()));
    if (slots < static_cast<int>(out.S.size())) throw std::invalid_argument("fewer gather slots than |S|");
    out.window = flood_window(n, k);
    out.flood_start = slots * (n + k) + 1;
    out.length_bound = static_cast<long long>(slots) * (n + k) + static_cast<long long>(k) * out.window;
    need(out.length_bound);

    for (std::size_t j = 0; j < out.S.size(); ++j) {
        const auto g = gather_schedule(graphs, init, out.S[j], ScheduleMode::broadcast,
                                       1 + static_cast<int>(j) * (n + k));
        out.schedule.append(g.schedule);
        apply_schedule(state, g.schedule);
    }
    for (TokenId t = 0; t < k; ++t)
        flood_token(graphs, state, t, out.flood_start + t * out.window, out.window, out.schedule);
    out.schedule.sort();
    return out;
}

// Algorithm 3: derandomized choice of S.

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

class DerandomizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nodes from which flooding that starts at `start` reaches `target`
/// within `rounds` rounds (reverse reachability over the window).
inline std::vector<char> reverse_reach(const GraphSequence& graphs, NodeId target, int start, int rounds) {
    std::vector<char> in(static_cast<std::size_t>(graphs.n()), 0);
    in[static_cast<std::size_t>(target)] = 1;
    for (int r = start + rounds - 1; r >= start; --r) {
        auto next = in;
        for (auto [u, v] : graphs.round(r).edges()) {
            if (in[static_cast<std::size_t>(u)]) next[static_cast<std::size_t>(v)] = 1;
            if (in[static_cast<std::size_t>(v)]) next[static_cast<std::size_t>(u)] = 1;
        }
        in = std::move(next);
    }
    return in;
}

/// Failure-probability bookkeeping for the conditional-expectation scan.
/// Pair (u, t) fails when no member of S lies in R[u,t], the set of nodes
/// whose flood in window t reaches u.
class CoverageProblem {
public:
    CoverageProblem(int n, int q, std::vector<std::vector<char>> reach)
        : n_(n), q_(q), reach_(std::move(reach)), binom_(static_cast<std::size_t>(n + 1)) {
        for (int a = 0; a <= n; ++a) {
            binom_[static_cast<std::size_t>(a)].assign(static_cast<std::size_t>(a + 1), 1);
            for (int b = 1; b < a; ++b)
                binom_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                    binom_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)] +
                    binom_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b)];
        }
    }

    int n() const { return n_; }
    int q() const { return q_; }
    std::size_t pairs() const { return reach_.size(); }
    const std::vector<std::vector<char>>& reach() const { return reach_; }

    BigInt binom(int a, int b) const {
        if (b < 0 || a < 0 || b > a) return 0;
        return binom_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }

    /// Expected number of failing pairs when q - |S| further nodes are drawn
    /// uniformly from the unexamined nodes V \ T (S is a subset of T).
    /// nullopt when no such completion exists.
    std::optional<Rational> expected_failures(const std::vector<char>& in_s, const std::vector<char>& in_t) const {
        int chosen = 0, free = 0;
        for (int v = 0; v < n_; ++v) {
            chosen += in_s[static_cast<std::size_t>(v)];
            free += !in_t[static_cast<std::size_t>(v)];
        }
        const int r = q_ - chosen;
        if (r < 0 || r > free) return std::nullopt;
        BigInt num = 0;
        for (const auto& R : reach_) {
            bool hit = false;
            int outside_free = free;
            for (int v = 0; v < n_; ++v) {
                if (!R[static_cast<std::size_t>(v)]) continue;
                if (in_s[static_cast<std::size_t>(v)]) {
                    hit = true;
                    break;
                }
                if (!in_t[static_cast<std::size_t>(v)]) --outside_free;
            }
            if (!hit) num += binom(outside_free, r);
        }
        return Rational(num, binom(free, r));
    }

private:
    int n_, q_;
    std::vector<std::vector<char>> reach_;
    std::vector<std::vector<BigInt>> binom_;
};

struct DerandomizeOptions {
    std::optional<int> q;
    std::optional<int> window;
    std::optional<int> flood_start;
};

struct DerandomizeResult {
    std::vector<NodeId> S;
    int q = 0;
    int window = 0;
    int flood_start = 1;
    Rational root;
    /// Expected failures after each examined node; front() is the root.
    std::vector<Rational> trace;
};

inline int algorithm3_set_size(int n, int k) {
    return static_cast<int>(
        std::clamp<long long>(floor_to_ll(2.0 * std::sqrt(k * log2n(n))), 1, n));
}

/// Reach sets R[t*n + u] for the flood windows of the Algorithm 2 layout.
inline CoverageProblem coverage_problem(const GraphSequence& graphs, int n, int k, int q, int flood_start,
                                        int window) {
    if (static_cast<long long>(flood_start) - 1 + static_cast<long long>(k) * window >
        static_cast<long long>(graphs.length()))
        throw std::invalid_argument("graph sequence does not cover the flood windows");
    std::vector<std::vector<char>> reach;
    for (TokenId t = 0; t < k; ++t)
        for (NodeId u = 0; u < n; ++u) reach.push_back(reverse_reach(graphs, u, flood_start + t * window, window));
    return CoverageProblem(n, q, std::move(reach));
}

/// Scans nodes 0..n-1, adding v to S exactly when doing so does not raise
/// the conditional expected number of uncovered (node, window) pairs.
inline DerandomizeResult algorithm3_derandomize(const GraphSequence& graphs, int n, int k,
                                                const DerandomizeOptions& opt = {}) {
    if (graphs.n() != n) throw std::invalid_argument("graph sequence and n disagree");
    if (k < 1) throw std::invalid_argument("need at least one token");
    DerandomizeResult out;
    out.q = opt.q.value_or(algorithm3_set_size(n, k));
    if (out.q < 1 || out.q > n) throw std::invalid_argument("|S| must lie in [1, n]");
    out.window = opt.window.value_or(flood_window(n, k));
    out.flood_start = opt.flood_start.value_or(out.q * (n + k) + 1);
    const auto problem = coverage_problem(graphs, n, k, out.q, out.flood_start, out.window);

    std::vector<char> in_s(static_cast<std::size_t>(n), 0), in_t(static_cast<std::size_t>(n), 0);
    out.root = *problem.expected_failures(in_s, in_t);
    if (out.root >= 1)
        throw DerandomizationError("expected uncovered pairs at the root is " + out.root.str() +
                                   " >= 1; the instance cannot be covered by this scan");
    out.trace.push_back(out.root);
    for (NodeId v = 0; v < n; ++v) {
        in_t[static_cast<std::size_t>(v)] = 1;
        in_s[static_cast<std::size_t>(v)] = 1;
        const auto with = problem.expected_failures(in_s, in_t);
        in_s[static_cast<std::size_t>(v)] = 0;
        const auto without = problem.expected_failures(in_s, in_t);
        if (!with && !without) throw std::logic_error("no feasible completion");
        const bool take = with && (!without || *with <= *without);
        if (take) {
            in_s[static_cast<std::size_t>(v)] = 1;
            out.S.push_back(v);
        }
        out.trace.push_back(take ? *with : *without);
    }
    if (out.trace.back() != 0)
        throw DerandomizationError("scan ended with " + out.trace.back().str() + " uncovered pairs");
    return out;
}

}  // namespace kgossip
