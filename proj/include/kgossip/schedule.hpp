#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "graph.hpp"

namespace kgossip {

enum class ScheduleMode { multiport, broadcast };

inline const char* to_string(ScheduleMode m) {
    return m == ScheduleMode::multiport ? "multiport" : "broadcast";
}

/// Per-round directed token transfers produced by an offline scheduler.
struct Schedule {
    ScheduleMode mode = ScheduleMode::multiport;
    std::vector<Transfer> transfers;

    /// Largest round index used (0 for an empty schedule).
    int length() const {
        int l = 0;
        for (const auto& t : transfers) l = std::max(l, t.round);
        return l;
    }

    void append(const Schedule& other) {
        transfers.insert(transfers.end(), other.transfers.begin(), other.transfers.end());
    }

    void sort() { std::sort(transfers.begin(), transfers.end()); }
};

/// What the schedule must achieve: either everyone holds everything, or a
/// designated sink set holds everything.
struct Goal {
    std::optional<std::vector<NodeId>> sinks;

    static Goal all_nodes() { return {}; }
    static Goal sink_set(std::vector<NodeId> s) { return Goal{std::move(s)}; }
};

enum class Violation { none, bad_round, non_edge, sender_lacks_token, capacity, goal_unmet };

inline const char* to_string(Violation v) {
    switch (v) {
        case Violation::none: return "none";
        case Violation::bad_round: return "bad-round";
        case Violation::non_edge: return "non-edge";
        case Violation::sender_lacks_token: return "sender-lacks-token";
        case Violation::capacity: return "capacity";
        case Violation::goal_unmet: return "goal-unmet";
    }
    return "?";
}

struct Verdict {
    Violation violation = Violation::none;
    /// Offending transfer (absent for goal failures).
    std::optional<Transfer> transfer;
    std::string message;

    bool ok() const { return violation == Violation::none; }
    explicit operator bool() const { return ok(); }
};

/// Replays `schedule` round by round from `init` and checks edge existence,
/// sender holdings at the start of each round, the mode's capacity rule and
/// finally the goal. Reports the first violation in (round, listing) order.
inline Verdict validate_schedule(const Schedule& schedule, const GraphSequence& graphs,
                                 const TokenDistribution& init, const Goal& goal) {
    auto fail = [](Violation v, std::optional<Transfer> t, std::string msg) {
        return Verdict{v, t, std::move(msg)};
    };
    std::vector<std::size_t> order(schedule.transfers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return schedule.transfers[a].round < schedule.transfers[b].round;
    });

    TokenDistribution state = init;
    std::size_t pos = 0;
    while (pos < order.size()) {
        const int r = schedule.transfers[order[pos]].round;
        if (r < 1 || static_cast<std::size_t>(r) > graphs.length())
            return fail(Violation::bad_round, schedule.transfers[order[pos]],
                        "round " + std::to_string(r) + " outside the graph sequence");
        const RoundGraph& g = graphs.round(r);
        std::size_t end = pos;
        while (end < order.size() && schedule.transfers[order[end]].round == r) ++end;

        std::set<std::pair<NodeId, NodeId>> used_directions;
        std::map<NodeId, TokenId> broadcast_token;
        std::vector<std::pair<NodeId, TokenId>> gains;
        for (std::size_t i = pos; i < end; ++i) {
            const Transfer& t = schedule.transfers[order[i]];
            if (!g.has_edge(t.from, t.to))
                return fail(Violation::non_edge, t,
                            "no edge (" + std::to_string(t.from) + "," + std::to_string(t.to) +
                                ") in round " + std::to_string(r));
            if (t.token < 0 || t.token >= init.k || !state.at(t.from).test(t.token))
                return fail(Violation::sender_lacks_token, t,
                            "node " + std::to_string(t.from) + " does not hold token " +
                                std::to_string(t.token) + " at the start of round " +
                                std::to_string(r));
            if (!used_directions.emplace(t.from, t.to).second)
                return fail(Violation::capacity, t,
                            "second token across " + std::to_string(t.from) + "->" +
                                std::to_string(t.to) + " in round " + std::to_string(r));
            if (schedule.mode == ScheduleMode::broadcast) {
                auto [it, inserted] = broadcast_token.emplace(t.from, t.token);
                if (!inserted && it->second != t.token)
                    return fail(Violation::capacity, t,
                                "node " + std::to_string(t.from) +
                                    " broadcasts two tokens in round " + std::to_string(r));
            }
            gains.emplace_back(t.to, t.token);
        }
        for (auto [v, tok] : gains) state.at(v).set(tok);
        pos = end;
    }

    if (goal.sinks) {
        for (NodeId v : *goal.sinks)
            if (v < 0 || v >= init.n || !state.at(v).full())
                return fail(Violation::goal_unmet, std::nullopt,
                            "sink " + std::to_string(v) + " is missing tokens at the end");
    } else {
        for (NodeId v = 0; v < init.n; ++v)
            if (!state.at(v).full())
                return fail(Violation::goal_unmet, std::nullopt,
                            "node " + std::to_string(v) + " is missing tokens at the end");
    }
    return {};
}

}  // namespace kgossip
