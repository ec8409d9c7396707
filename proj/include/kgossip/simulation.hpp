#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "adversaries.hpp"
#include "distribution.hpp"
#include "protocols.hpp"

namespace kgossip {

struct StronglyAdaptive {};
struct RotatingLine {};
using AdversarySpec = std::variant<StronglyAdaptive, RotatingLine, FamilySpec>;

/// `strong`, `rotating-line`, or any oblivious family string.
inline AdversarySpec parse_adversary_spec(const std::string& s) {
    if (s == "strong") return StronglyAdaptive{};
    if (s == "rotating-line") return RotatingLine{};
    return parse_family_spec(s);
}

enum class Protocol { symdiff, symdiff_oriented, det_symdiff, bcast_random, bcast_round_robin, bcast_min_id };

inline Protocol parse_protocol(const std::string& s) {
    if (s == "symdiff") return Protocol::symdiff;
    if (s == "symdiff-oriented") return Protocol::symdiff_oriented;
    if (s == "det-symdiff") return Protocol::det_symdiff;
    if (s == "bcast:random") return Protocol::bcast_random;
    if (s == "bcast:round-robin") return Protocol::bcast_round_robin;
    if (s == "bcast:min-id") return Protocol::bcast_min_id;
    throw std::invalid_argument("unknown protocol '" + s + "'");
}

inline bool is_broadcast(Protocol p) {
    return p == Protocol::bcast_random || p == Protocol::bcast_round_robin ||
           p == Protocol::bcast_min_id;
}

inline BroadcastPolicy policy_of(Protocol p) {
    switch (p) {
        case Protocol::bcast_random: return BroadcastPolicy::uniform_random_held;
        case Protocol::bcast_round_robin: return BroadcastPolicy::round_robin_held;
        case Protocol::bcast_min_id: return BroadcastPolicy::min_id_held;
        default: throw std::invalid_argument("not a broadcast protocol");
    }
}

class ModelOrderError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SimulationConfig {
    AdversarySpec adversary = StronglyAdaptive{};
    Protocol protocol = Protocol::bcast_random;
    int max_rounds = 1000;
    double green_fraction = 0.125;
    std::uint64_t seed = 0;
    /// With the strongly adaptive adversary: check every witness against the
    /// current and all earlier distributions, and the per-round progress bound.
    bool audit = false;
};

struct RoundRecord {
    int round = 0;
    long long progress = 0;
    long long missing_total = 0;
    int groups = 0;
    int inter_group_edges = 0;
    /// -1 when the adversary is not strongly adaptive.
    int components = -1;
    int witness_size = -1;
    RoundColor color = RoundColor::black;
};

struct AuditCounters {
    long long witness_checks = 0;
    long long witness_invalid = 0;
    long long progress_bound_violations = 0;
    /// Rounds with progress m > 0 whose witness was smaller than m/2 + 1.
    long long witness_size_violations = 0;
};

struct RunTrace {
    std::vector<RoundRecord> rounds;
    /// Round after which every node held every token (0 if the initial
    /// distribution was already complete); nullopt on timeout.
    std::optional<int> completion_round;
    long long initial_missing = 0;
    int max_witness = -1;
    AuditCounters audit;

    bool completed() const { return completion_round.has_value(); }
    int count(RoundColor c) const {
        int m = 0;
        for (const auto& r : rounds) m += r.color == c;
        return m;
    }
    /// First round at which at most half of the initial missing pairs remain.
    std::optional<int> half_missing_round() const {
        if (initial_missing == 0) return 0;
        for (const auto& r : rounds)
            if (2 * r.missing_total <= initial_missing) return r.round;
        return std::nullopt;
    }
};

inline void check_model_order(const AdversarySpec& adversary, Protocol protocol) {
    if (std::holds_alternative<StronglyAdaptive>(adversary) && !is_broadcast(protocol))
        throw ModelOrderError(
            "the strongly adaptive adversary fixes the graph after seeing broadcast choices; "
            "SYM-DIFF protocols need the graph first");
}

inline RunTrace run_simulation(const SimulationConfig& cfg, const TokenDistribution& init) {
    check_model_order(cfg.adversary, cfg.protocol);
    const int n = init.n;
    std::optional<ObliviousAdversary> oblivious;
    if (const auto* fam = std::get_if<FamilySpec>(&cfg.adversary))
        oblivious.emplace(*fam, n, derive_key(cfg.seed, "oblivious-family"));
    const bool strong = std::holds_alternative<StronglyAdaptive>(cfg.adversary);
    if (std::holds_alternative<RotatingLine>(cfg.adversary) && n < 2)
        throw std::invalid_argument("rotating-line adversary needs n >= 2");

    RunTrace trace;
    TokenDistribution dist = init;
    trace.initial_missing = missing_total(dist);
    long long missing = trace.initial_missing;
    if (missing == 0) {
        trace.completion_round = 0;
        return trace;
    }
    std::vector<TokenDistribution> history;
    if (cfg.audit && strong) history.push_back(dist);

    for (int r = 1; r <= cfg.max_rounds; ++r) {
        RoundRecord rec;
        rec.round = r;
        std::vector<Transfer> exchanges;
        RoundGraph graph;
        if (strong) {
            const auto choices = choose_broadcasts(policy_of(cfg.protocol), dist, r, cfg.seed);
            Rng adv_rng = Rng::derive(cfg.seed, "strong", static_cast<std::uint64_t>(r));
            auto report = strongly_adaptive_graph(dist, choices, adv_rng);
            const auto witness = half_empty_witness(report, choices);
            rec.components = static_cast<int>(report.components.size());
            rec.witness_size = static_cast<int>(witness.config.size());
            if (cfg.audit) {
                // history holds the distributions at the start of rounds 1..r.
                for (const auto& earlier : history) {
                    ++trace.audit.witness_checks;
                    if (!verify_half_empty(witness.config, earlier)) ++trace.audit.witness_invalid;
                }
            }
            graph = std::move(report.graph);
            exchanges = broadcast_transfers(dist, graph, choices, r);
        } else {
            graph = oblivious ? oblivious->graph(r) : rotating_line_graph(r, n);
            switch (cfg.protocol) {
                case Protocol::symdiff: exchanges = symdiff_exchanges(dist, graph, r, cfg.seed); break;
                case Protocol::det_symdiff: exchanges = det_symdiff_exchanges(dist, graph, r); break;
                case Protocol::symdiff_oriented:
                    exchanges = symdiff_oriented_exchanges(
                        dist, graph, random_legal_orientation(dist, graph, r, cfg.seed), r, cfg.seed);
                    break;
                default: {
                    const auto choices = choose_broadcasts(policy_of(cfg.protocol), dist, r, cfg.seed);
                    exchanges = broadcast_transfers(dist, graph, choices, r);
                }
            }
        }
        const auto part = groups(dist);
        rec.groups = static_cast<int>(part.size());
        rec.inter_group_edges = static_cast<int>(inter_group_edges(part, graph).size());

        const TokenDistribution before = dist;
        rec.progress = apply_exchanges_in_place(dist, graph, exchanges);
        missing -= rec.progress;
        rec.missing_total = missing;
        rec.color = classify_round(before, dist, cfg.green_fraction);

        if (strong && cfg.audit) {
            if (rec.progress > 2LL * (rec.components - 1)) ++trace.audit.progress_bound_violations;
            if (rec.progress > 0 && 2LL * rec.witness_size < rec.progress + 2) {
                // |witness| >= m/2 + 1  <=>  2|witness| >= m + 2
                ++trace.audit.witness_size_violations;
            }
            history.push_back(dist);
        }
        trace.max_witness = std::max(trace.max_witness, rec.witness_size);
        trace.rounds.push_back(rec);
        if (missing == 0) {
            trace.completion_round = r;
            break;
        }
    }
    return trace;
}

}  // namespace kgossip
