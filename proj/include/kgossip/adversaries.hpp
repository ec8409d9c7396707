#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "distribution.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace kgossip {

/// The token each node broadcasts this round; nullopt means the node is silent
/// (it holds nothing, or its protocol chose not to send).
using BroadcastChoice = std::vector<std::optional<TokenId>>;

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline void check_choices(const TokenDistribution& dist, const BroadcastChoice& choices) {
    if (choices.size() != static_cast<std::size_t>(dist.n))
        throw ContractViolation("broadcast choice must cover every node");
    for (NodeId v = 0; v < dist.n; ++v) {
        const auto& c = choices[static_cast<std::size_t>(v)];
        if (c && (*c < 0 || *c >= dist.k || !dist.at(v).test(*c)))
            throw ContractViolation("node " + std::to_string(v) + " broadcasts token " +
                                    std::to_string(*c) + " it does not hold");
    }
}

namespace detail {
// x -> y carries nothing new when x is silent or y already holds x's token.
inline bool direction_useless(const TokenDistribution& dist, const BroadcastChoice& choices,
                              NodeId x, NodeId y) {
    const auto& c = choices[static_cast<std::size_t>(x)];
    return !c || dist.at(y).test(*c);
}
}  // namespace detail

inline bool is_free_edge(NodeId u, NodeId v, const TokenDistribution& dist,
                         const BroadcastChoice& choices) {
    if (u == v) throw std::invalid_argument("is_free_edge requires distinct endpoints");
    for (NodeId x : {u, v}) {
        const auto& c = choices.at(static_cast<std::size_t>(x));
        if (c && !dist.at(x).test(*c))
            throw ContractViolation("node " + std::to_string(x) + " broadcasts a token it lacks");
    }
    return detail::direction_useless(dist, choices, u, v) &&
           detail::direction_useless(dist, choices, v, u);
}

struct AdversaryRoundReport {
    RoundGraph graph;
    /// Components of the free-edge subgraph, each sorted, ordered by smallest member.
    std::vector<std::vector<NodeId>> components;
    /// One node per component, in line order.
    std::vector<NodeId> representatives;
    int non_free_edge_count = 0;
};

/// Strongly adaptive adversary: all free edges plus a random line through one
/// random representative per free-edge component.
inline AdversaryRoundReport strongly_adaptive_graph(const TokenDistribution& dist,
                                                    const BroadcastChoice& choices, Rng& rng) {
    check_choices(dist, choices);
    const int n = dist.n;

    // accepts[u] bit v: u already holds v's broadcast (or v is silent);
    // accepted_by is its transpose. Free partners of u are their intersection.
    const auto un = static_cast<std::size_t>(n);
    std::vector<TokenSet> accepts(un, TokenSet(un)), accepted_by(un, TokenSet(un));
    for (NodeId v = 0; v < n; ++v) {
        const auto& c = choices[static_cast<std::size_t>(v)];
        for (NodeId u = 0; u < n; ++u)
            if (u != v && (!c || dist.at(u).test(*c))) {
                accepts[static_cast<std::size_t>(u)].set(v);
                accepted_by[static_cast<std::size_t>(v)].set(u);
            }
    }
    std::vector<TokenSet>& free_partners = accepts;
    for (std::size_t u = 0; u < un; ++u) free_partners[u] &= accepted_by[u];

    std::vector<Edge> edges;
    std::size_t free_total = 0;
    for (const auto& f : free_partners) free_total += f.count();
    edges.reserve(free_total / 2 + un);
    for (NodeId u = 0; u < n; ++u)
        free_partners[static_cast<std::size_t>(u)].for_each([&](TokenId v) {
            if (v > u) edges.emplace_back(u, v);
        });

    // Components by bitset search; scanning from the smallest unseen node
    // orders them by smallest member.
    AdversaryRoundReport rep;
    TokenSet unseen = TokenSet::full(un);
    std::vector<NodeId> stack;
    for (NodeId s0 = 0; s0 < n; ++s0) {
        if (!unseen.test(s0)) continue;
        auto& comp = rep.components.emplace_back();
        unseen.reset(s0);
        stack.assign(1, s0);
        while (!stack.empty()) {
            const NodeId x = stack.back();
            stack.pop_back();
            comp.push_back(x);
            TokenSet next = free_partners[static_cast<std::size_t>(x)];
            next &= unseen;
            next.for_each([&](TokenId y) {
                unseen.reset(y);
                stack.push_back(y);
            });
        }
        std::sort(comp.begin(), comp.end());
    }
    for (const auto& c : rep.components)
        rep.representatives.push_back(c[rng.uniform(c.size())]);
    rng.shuffle(rep.representatives);
    const auto free_count = static_cast<std::ptrdiff_t>(edges.size());
    for (std::size_t i = 1; i < rep.representatives.size(); ++i) {
        const NodeId a = rep.representatives[i - 1], b = rep.representatives[i];
        edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(edges.begin() + free_count, edges.end());
    std::inplace_merge(edges.begin(), edges.begin() + free_count, edges.end());
    rep.non_free_edge_count = static_cast<int>(rep.components.size()) - 1;
    rep.graph = RoundGraph(n, std::move(edges));
    return rep;
}

/// Node sequence and token sequence of equal length; validity is checked by
/// verify_half_empty.
struct HalfEmptyConfig {
    std::vector<NodeId> nodes;
    std::vector<TokenId> tokens;

    std::size_t size() const { return nodes.size(); }
};

struct WitnessResult {
    HalfEmptyConfig config;
    /// Components whose representative was silent and so contributed no pair.
    int dropped_silent = 0;
};

/// Constructive witness: the representatives paired with their broadcast tokens.
inline WitnessResult half_empty_witness(const AdversaryRoundReport& report,
                                        const BroadcastChoice& choices) {
    WitnessResult out;
    for (NodeId v : report.representatives) {
        const auto& c = choices.at(static_cast<std::size_t>(v));
        if (!c) {
            ++out.dropped_silent;
            continue;
        }
        out.config.nodes.push_back(v);
        out.config.tokens.push_back(*c);
    }
    auto sorted = out.config.tokens;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ContractViolation("two representatives broadcast the same token; "
                                "they should have been joined by a free edge");
    return out;
}

inline bool verify_half_empty(const HalfEmptyConfig& config, const TokenDistribution& dist) {
    if (config.nodes.size() != config.tokens.size())
        throw std::invalid_argument("half-empty config must pair nodes with tokens");
    const std::size_t m = config.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto& vi = dist.at(config.nodes[i]);
            const auto& vj = dist.at(config.nodes[j]);
            if (vi.test(config.tokens[j]) && vj.test(config.tokens[i])) return false;
        }
    return true;
}

/// Line u=0, then nodes 1..n-1 cyclically rotated left by (round-1).
inline RoundGraph rotating_line_graph(int round, int n) {
    if (n < 2) throw std::invalid_argument("rotating line needs at least two nodes");
    if (round < 1) throw std::invalid_argument("rounds are 1-based");
    const int tail = n - 1;
    const int shift = (round - 1) % tail;
    std::vector<NodeId> order{0};
    for (int i = 0; i < tail; ++i) order.push_back(1 + (shift + i) % tail);
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < order.size(); ++i) edges.emplace_back(order[i - 1], order[i]);
    return RoundGraph(n, std::move(edges));
}

// Oblivious families.

struct StaticPath {};
struct StaticStar {};
struct StaticClique {};
struct RandomConnected {
    double edge_prob = 0.1;
};
struct RandomSpanningTree {};
struct FromFile {
    std::string path;
};
using FamilySpec =
    std::variant<StaticPath, StaticStar, StaticClique, RandomConnected, RandomSpanningTree, FromFile>;

/// Parses `static-path`, `static-star`, `static-clique`, `random:<p>`, `tree`, `file:<path>`.
inline FamilySpec parse_family_spec(const std::string& s) {
    if (s == "static-path") return StaticPath{};
    if (s == "static-star") return StaticStar{};
    if (s == "static-clique") return StaticClique{};
    if (s == "tree") return RandomSpanningTree{};
    if (s.rfind("random:", 0) == 0) {
        double p = 0;
        try {
            std::size_t used = 0;
            p = std::stod(s.substr(7), &used);
            if (used != s.size() - 7) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::invalid_argument("bad edge probability in '" + s + "'");
        }
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("edge probability outside [0,1]");
        return RandomConnected{p};
    }
    if (s.rfind("file:", 0) == 0) return FromFile{s.substr(5)};
    throw std::invalid_argument("unknown graph family '" + s + "'");
}

/// Uniform labeled spanning tree of K_n via a random Pruefer sequence.
inline std::vector<Edge> random_tree_edges(int n, Rng& rng) {
    std::vector<Edge> edges;
    if (n <= 1) return edges;
    if (n == 2) return {{0, 1}};
    std::vector<int> code(static_cast<std::size_t>(n - 2));
    for (auto& c : code) c = rng.uniform_int(n);
    std::vector<int> degree(static_cast<std::size_t>(n), 1);
    for (int c : code) ++degree[static_cast<std::size_t>(c)];
    std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
    for (int v = 0; v < n; ++v)
        if (degree[static_cast<std::size_t>(v)] == 1) leaves.push(v);
    for (int c : code) {
        const int leaf = leaves.top();
        leaves.pop();
        edges.emplace_back(leaf, c);
        if (--degree[static_cast<std::size_t>(c)] == 1) leaves.push(c);
    }
    const int a = leaves.top();
    leaves.pop();
    edges.emplace_back(a, leaves.top());
    return edges;
}

/// Per-round graph source for an oblivious family. Random families key each
/// round's graph by (seed, round), so any round can be produced independently.
class ObliviousAdversary {
public:
    ObliviousAdversary(FamilySpec spec, int n, std::uint64_t seed)
        : spec_(std::move(spec)), n_(n), seed_(seed) {
        if (n < 1) throw std::invalid_argument("node count must be positive");
        if (const auto* rc = std::get_if<RandomConnected>(&spec_))
            if (!(rc->edge_prob >= 0.0 && rc->edge_prob <= 1.0))
                throw std::invalid_argument("edge probability outside [0,1]");
        if (const auto* f = std::get_if<FromFile>(&spec_)) {
            file_ = std::make_shared<GraphSequence>(load_graph_sequence(f->path));
            if (file_->n() != n)
                throw std::invalid_argument("graph file has n=" + std::to_string(file_->n()) +
                                            ", expected " + std::to_string(n));
            if (file_->length() == 0) throw std::invalid_argument("graph file has no rounds");
        } else if (std::holds_alternative<StaticPath>(spec_)) {
            std::vector<Edge> e;
            for (int v = 1; v < n; ++v) e.emplace_back(v - 1, v);
            static_ = std::make_shared<RoundGraph>(n, std::move(e));
        } else if (std::holds_alternative<StaticStar>(spec_)) {
            std::vector<Edge> e;
            for (int v = 1; v < n; ++v) e.emplace_back(0, v);
            static_ = std::make_shared<RoundGraph>(n, std::move(e));
        } else if (std::holds_alternative<StaticClique>(spec_)) {
            std::vector<Edge> e;
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v) e.emplace_back(u, v);
            static_ = std::make_shared<RoundGraph>(n, std::move(e));
        }
    }

    int n() const { return n_; }

    /// Graph for 1-based round r. File sequences repeat cyclically.
    RoundGraph graph(int r) const {
        if (static_) return *static_;
        if (file_) return file_->round(1 + (r - 1) % static_cast<int>(file_->length()));
        Rng rng = Rng::derive(seed_, "oblivious", static_cast<std::uint64_t>(r));
        auto edges = random_tree_edges(n_, rng);
        if (const auto* rc = std::get_if<RandomConnected>(&spec_)) {
            std::vector<char> present(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0);
            auto idx = [&](int u, int v) {
                return static_cast<std::size_t>(std::min(u, v)) * static_cast<std::size_t>(n_) +
                       static_cast<std::size_t>(std::max(u, v));
            };
            for (auto [u, v] : edges) present[idx(u, v)] = 1;
            for (int u = 0; u < n_; ++u)
                for (int v = u + 1; v < n_; ++v)
                    if (rng.bernoulli(rc->edge_prob) && !present[idx(u, v)]) {
                        present[idx(u, v)] = 1;
                        edges.emplace_back(u, v);
                    }
        }
        return RoundGraph(n_, std::move(edges));
    }

private:
    FamilySpec spec_;
    int n_;
    std::uint64_t seed_;
    std::shared_ptr<const RoundGraph> static_;
    std::shared_ptr<const GraphSequence> file_;
};

inline GraphSequence oblivious_sequence(const FamilySpec& spec, int n, int length, Rng& rng) {
    if (length < 0) throw std::invalid_argument("sequence length must be non-negative");
    ObliviousAdversary adv(spec, n, rng.next());
    GraphSequence seq(n);
    for (int r = 1; r <= length; ++r) seq.push_back(adv.graph(r));
    return seq;
}

}  // namespace kgossip
