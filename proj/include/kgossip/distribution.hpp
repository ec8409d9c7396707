#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "token_set.hpp"

namespace kgossip {

/// Per-node token holdings for a run with n nodes and k tokens.
struct TokenDistribution {
    int n = 0;
    int k = 0;
    std::vector<TokenSet> holdings;

    TokenDistribution() = default;
    TokenDistribution(int nodes, int tokens)
        : n(nodes), k(tokens),
          holdings(static_cast<std::size_t>(nodes), TokenSet(static_cast<std::size_t>(tokens))) {}

    const TokenSet& at(NodeId v) const { return holdings[static_cast<std::size_t>(v)]; }
    TokenSet& at(NodeId v) { return holdings[static_cast<std::size_t>(v)]; }

    bool complete() const {
        return std::all_of(holdings.begin(), holdings.end(),
                           [](const TokenSet& s) { return s.full(); });
    }

    /// True when every node holds a superset of what it held in `earlier`.
    bool dominates(const TokenDistribution& earlier) const {
        if (earlier.n != n || earlier.k != k) return false;
        for (std::size_t v = 0; v < holdings.size(); ++v)
            if (!earlier.holdings[v].is_subset_of(holdings[v])) return false;
        return true;
    }

    friend bool operator==(const TokenDistribution&, const TokenDistribution&) = default;
};

/// One directed token transfer in a round (round is 1-based).
struct Transfer {
    int round = 0;
    NodeId from = 0;
    NodeId to = 0;
    TokenId token = 0;

    friend bool operator==(const Transfer&, const Transfer&) = default;
    friend auto operator<=>(const Transfer&, const Transfer&) = default;
};

class ExchangeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Initial distributions.

struct WellMixedInit {
    double p = 0.75;
};
/// owner[t] is the node that initially holds token t.
struct SingletonInit {
    std::vector<NodeId> owner;
};
struct AllAtOneInit {
    NodeId node = 0;
};
struct ExplicitInit {
    std::vector<TokenSet> holdings;
};
using InitSpec = std::variant<WellMixedInit, SingletonInit, AllAtOneInit, ExplicitInit>;

/// Token t at node t mod n.
inline SingletonInit singleton_by_index(int n, int k) {
    SingletonInit s;
    for (int t = 0; t < k; ++t) s.owner.push_back(t % n);
    return s;
}

inline TokenDistribution init_distribution(const InitSpec& spec, int n, int k, Rng& rng) {
    if (n < 1) throw std::invalid_argument("node count must be positive");
    if (k < 0) throw std::invalid_argument("token count must be non-negative");
    TokenDistribution d(n, k);
    if (const auto* wm = std::get_if<WellMixedInit>(&spec)) {
        if (!(wm->p > 0.0 && wm->p <= 1.0))
            throw std::invalid_argument("well-mixed probability must lie in (0,1]");
        for (int v = 0; v < n; ++v)
            for (int t = 0; t < k; ++t)
                if (rng.bernoulli(wm->p)) d.at(v).set(t);
    } else if (const auto* sg = std::get_if<SingletonInit>(&spec)) {
        if (sg->owner.size() != static_cast<std::size_t>(k))
            throw std::invalid_argument("singleton assignment must list one node per token");
        for (int t = 0; t < k; ++t) {
            const NodeId v = sg->owner[static_cast<std::size_t>(t)];
            if (v < 0 || v >= n)
                throw std::invalid_argument("singleton assignment node out of range: " +
                                            std::to_string(v));
            d.at(v).set(t);
        }
    } else if (const auto* one = std::get_if<AllAtOneInit>(&spec)) {
        if (one->node < 0 || one->node >= n)
            throw std::invalid_argument("all-at-one node out of range");
        d.at(one->node) = TokenSet::full(static_cast<std::size_t>(k));
    } else {
        const auto& ex = std::get<ExplicitInit>(spec);
        if (ex.holdings.size() != static_cast<std::size_t>(n))
            throw std::invalid_argument("explicit holdings must list every node");
        for (const auto& s : ex.holdings)
            if (s.width() != static_cast<std::size_t>(k))
                throw std::invalid_argument("explicit holdings width differs from k");
        d.holdings = ex.holdings;
    }
    return d;
}

inline long long missing_total(const TokenDistribution& d) {
    long long m = 0;
    for (const auto& s : d.holdings)
        m += static_cast<long long>(d.k) - static_cast<long long>(s.count());
    return m;
}

/// Applies one round of transfers in place against pre-round holdings.
/// Returns the number of (receiver, token) pairs that are new this round.
inline long long apply_exchanges_in_place(TokenDistribution& d, const RoundGraph& g,
                                          const std::vector<Transfer>& exchanges) {
    if (g.n() != d.n) throw ExchangeError("graph and distribution disagree on n");
    std::vector<std::tuple<NodeId, NodeId, TokenId>> keys;
    keys.reserve(exchanges.size());
    for (const auto& x : exchanges) {
        if (!g.has_edge(x.from, x.to))
            throw ExchangeError("transfer over non-edge (" + std::to_string(x.from) + "," +
                                std::to_string(x.to) + ")");
        if (x.token < 0 || x.token >= d.k) throw ExchangeError("token id out of range");
        if (!d.at(x.from).test(x.token))
            throw ExchangeError("sender " + std::to_string(x.from) + " lacks token " +
                                std::to_string(x.token));
        keys.emplace_back(x.from, x.to, x.token);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw ExchangeError("duplicate identical transfer");

    // Senders were checked against pre-round holdings above; receptions are
    // collected first so a token received this round is never forwarded in it.
    std::vector<std::pair<NodeId, TokenId>> gains;
    for (const auto& x : exchanges)
        if (!d.at(x.to).test(x.token)) gains.emplace_back(x.to, x.token);
    std::sort(gains.begin(), gains.end());
    gains.erase(std::unique(gains.begin(), gains.end()), gains.end());
    for (auto [v, t] : gains) d.at(v).set(t);
    return static_cast<long long>(gains.size());
}

struct ExchangeOutcome {
    TokenDistribution dist;
    long long progress = 0;
};

inline ExchangeOutcome apply_exchanges(const TokenDistribution& d, const RoundGraph& g,
                                       const std::vector<Transfer>& exchanges) {
    ExchangeOutcome out{d, 0};
    out.progress = apply_exchanges_in_place(out.dist, g, exchanges);
    return out;
}

}  // namespace kgossip
