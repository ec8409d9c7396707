#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "kgossip/adversaries.hpp"
#include "kgossip/distribution.hpp"
#include "kgossip/protocols.hpp"
#include "kgossip/simulation.hpp"

using namespace kgossip;

namespace {

TokenSet make_set(std::size_t width, std::initializer_list<int> ids) {
    TokenSet s(width);
    for (int i : ids) s.set(i);
    return s;
}

std::vector<NodeId> path_order(const RoundGraph& g) {
    // Walk a Hamiltonian path from its lower-numbered endpoint of degree one.
    NodeId start = -1;
    for (NodeId v = 0; v < g.n(); ++v)
        if (g.neighbors(v).size() == 1) { start = v; break; }
    std::vector<NodeId> order{start};
    NodeId prev = -1, cur = start;
    while (order.size() < static_cast<std::size_t>(g.n())) {
        for (NodeId w : g.neighbors(cur))
            if (w != prev) { prev = cur; cur = w; break; }
        order.push_back(cur);
    }
    return order;
}

}  // namespace

TEST(FreeEdge, SpecCases) {
    TokenDistribution d(2, 2);
    d.at(0) = make_set(2, {0, 1});
    d.at(1) = make_set(2, {0, 1});
    EXPECT_TRUE(is_free_edge(0, 1, d, {0, 1}));

    d.at(0) = make_set(2, {0});
    d.at(1) = make_set(2, {1});
    EXPECT_FALSE(is_free_edge(0, 1, d, {0, 1}));

    d.at(1) = make_set(2, {0});
    EXPECT_TRUE(is_free_edge(0, 1, d, {0, std::nullopt}));
    EXPECT_TRUE(is_free_edge(0, 1, d, {std::nullopt, std::nullopt}));
}

TEST(FreeEdge, Errors) {
    TokenDistribution d(2, 2);
    d.at(0) = make_set(2, {0});
    EXPECT_THROW(is_free_edge(0, 0, d, {0, std::nullopt}), std::invalid_argument);
    EXPECT_THROW(is_free_edge(0, 1, d, {1, std::nullopt}), ContractViolation);
}

TEST(StronglyAdaptive, AllHoldAllGivesClique) {
    const int n = 7;
    TokenDistribution d(n, 3);
    for (auto& s : d.holdings) s = TokenSet::full(3);
    Rng rng(1);
    auto choices = choose_broadcasts(BroadcastPolicy::uniform_random_held, d, 1, 9);
    auto rep = strongly_adaptive_graph(d, choices, rng);
    EXPECT_EQ(rep.graph.edge_count(), static_cast<std::size_t>(n * (n - 1) / 2));
    EXPECT_EQ(rep.components.size(), 1u);
    EXPECT_EQ(rep.non_free_edge_count, 0);
    EXPECT_EQ(half_empty_witness(rep, choices).config.size(), 1u);
}

TEST(StronglyAdaptive, ZeroFreeEdgesGivesLine) {
    const int n = 9;
    Rng init_rng(0);
    auto d = init_distribution(singleton_by_index(n, n), n, n, init_rng);
    auto choices = choose_broadcasts(BroadcastPolicy::min_id_held, d, 1, 0);
    Rng rng(3);
    auto rep = strongly_adaptive_graph(d, choices, rng);
    EXPECT_EQ(rep.components.size(), static_cast<std::size_t>(n));
    EXPECT_EQ(rep.graph.edge_count(), static_cast<std::size_t>(n - 1));
    EXPECT_EQ(rep.non_free_edge_count, n - 1);
    auto order = path_order(rep.graph);
    EXPECT_EQ(order.size(), static_cast<std::size_t>(n));
    auto w = half_empty_witness(rep, choices);
    EXPECT_EQ(w.config.size(), static_cast<std::size_t>(n));
    EXPECT_TRUE(verify_half_empty(w.config, d));
}

TEST(StronglyAdaptive, ReportInvariantsAndProgressBound) {
    for (int seed = 0; seed < 20; ++seed) {
        Rng init_rng = Rng::derive(static_cast<std::uint64_t>(seed), "init");
        auto d = init_distribution(WellMixedInit{0.75}, 64, 64, init_rng);
        auto choices = choose_broadcasts(BroadcastPolicy::uniform_random_held, d, 1,
                                         static_cast<std::uint64_t>(seed));
        Rng rng = Rng::derive(static_cast<std::uint64_t>(seed), "strong");
        auto rep = strongly_adaptive_graph(d, choices, rng);
        const int comps = static_cast<int>(rep.components.size());
        EXPECT_EQ(rep.non_free_edge_count, comps - 1);
        EXPECT_EQ(rep.representatives.size(), rep.components.size());

        std::vector<int> comp_of(64, -1);
        for (int c = 0; c < comps; ++c)
            for (NodeId v : rep.components[static_cast<std::size_t>(c)]) comp_of[static_cast<std::size_t>(v)] = c;
        int non_free = 0;
        for (auto [u, v] : rep.graph.edges()) {
            if (is_free_edge(u, v, d, choices)) {
                EXPECT_EQ(comp_of[static_cast<std::size_t>(u)], comp_of[static_cast<std::size_t>(v)]);
            } else {
                ++non_free;
                EXPECT_NE(comp_of[static_cast<std::size_t>(u)], comp_of[static_cast<std::size_t>(v)]);
            }
        }
        EXPECT_EQ(non_free, comps - 1);
        // Every free pair is present.
        for (NodeId u = 0; u < 64; ++u)
            for (NodeId v = u + 1; v < 64; ++v)
                if (is_free_edge(u, v, d, choices)) {
                    EXPECT_TRUE(rep.graph.has_edge(u, v));
                }

        auto out = apply_exchanges(d, rep.graph, broadcast_transfers(d, rep.graph, choices, 1));
        EXPECT_LE(out.progress, 2LL * (comps - 1));
        auto w = half_empty_witness(rep, choices);
        EXPECT_TRUE(verify_half_empty(w.config, d));
        if (out.progress > 0) {
            EXPECT_GE(2 * static_cast<long long>(w.config.size()), out.progress + 2);
        }
    }
}

TEST(StronglyAdaptive, RejectsUnheldChoice) {
    TokenDistribution d(3, 2);
    d.at(0).set(0);
    Rng rng(1);
    EXPECT_THROW(strongly_adaptive_graph(d, {1, std::nullopt, std::nullopt}, rng), ContractViolation);
    EXPECT_THROW(strongly_adaptive_graph(d, {0, std::nullopt}, rng), ContractViolation);
}

TEST(HalfEmpty, VerifyCases) {
    TokenDistribution d(2, 2);
    d.at(0) = make_set(2, {0, 1});
    d.at(1) = make_set(2, {0, 1});
    EXPECT_TRUE(verify_half_empty({{0}, {0}}, d));
    EXPECT_FALSE(verify_half_empty({{0, 1}, {0, 1}}, d));
    d.at(1) = make_set(2, {1});
    EXPECT_TRUE(verify_half_empty({{0, 1}, {0, 1}}, d));
    EXPECT_THROW(verify_half_empty({{0, 1}, {0}}, d), std::invalid_argument);
}

TEST(HalfEmpty, WitnessValidAtAllEarlierRounds) {
    SimulationConfig cfg;
    cfg.adversary = StronglyAdaptive{};
    cfg.protocol = Protocol::bcast_min_id;
    cfg.max_rounds = 300;
    cfg.audit = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = seed;
        Rng init_rng = Rng::derive(seed, "init");
        auto d = init_distribution(WellMixedInit{0.5}, 16, 16, init_rng);
        auto trace = run_simulation(cfg, d);
        EXPECT_GT(trace.audit.witness_checks, 0);
        EXPECT_EQ(trace.audit.witness_invalid, 0);
        EXPECT_EQ(trace.audit.progress_bound_violations, 0);
        EXPECT_EQ(trace.audit.witness_size_violations, 0);
    }
}

TEST(RotatingLine, FirstRoundsMatchConstruction) {
    EXPECT_EQ(path_order(rotating_line_graph(1, 4)), (std::vector<NodeId>{0, 1, 2, 3}));
    auto second = rotating_line_graph(2, 4);
    EXPECT_TRUE(second.has_edge(0, 2));
    EXPECT_TRUE(second.has_edge(2, 3));
    EXPECT_TRUE(second.has_edge(3, 1));
    EXPECT_EQ(second.edge_count(), 3u);
    // Period n-1.
    EXPECT_EQ(rotating_line_graph(4, 4), rotating_line_graph(1, 4));
}

TEST(RotatingLine, AlwaysHamiltonianPath) {
    for (int n = 2; n <= 12; ++n)
        for (int r = 1; r <= 30; ++r) {
            auto g = rotating_line_graph(r, n);
            EXPECT_EQ(g.edge_count(), static_cast<std::size_t>(n - 1));
            int leaves = 0;
            for (NodeId v = 0; v < n; ++v) {
                EXPECT_LE(g.neighbors(v).size(), 2u);
                leaves += g.neighbors(v).size() == 1;
            }
            EXPECT_EQ(leaves, 2);
            EXPECT_EQ(g.neighbors(0).size(), 1u);
        }
    EXPECT_THROW(rotating_line_graph(1, 1), std::invalid_argument);
    EXPECT_THROW(rotating_line_graph(0, 3), std::invalid_argument);
}

TEST(Oblivious, StaticPath) {
    Rng rng(1);
    auto seq = oblivious_sequence(StaticPath{}, 5, 3, rng);
    ASSERT_EQ(seq.length(), 3u);
    for (int r = 1; r <= 3; ++r)
        EXPECT_EQ(seq.round(r).edges(), (std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 4}}));
}

TEST(Oblivious, StarAndClique) {
    Rng rng(1);
    auto star = oblivious_sequence(StaticStar{}, 6, 1, rng);
    EXPECT_EQ(star.round(1).neighbors(0).size(), 5u);
    auto clique = oblivious_sequence(StaticClique{}, 6, 1, rng);
    EXPECT_EQ(clique.round(1).edge_count(), 15u);
}

TEST(Oblivious, RandomConnectedZeroIsTree) {
    Rng rng(4);
    auto seq = oblivious_sequence(RandomConnected{0.0}, 6, 50, rng);
    for (const auto& g : seq.rounds()) EXPECT_TRUE(g.is_tree());
    auto t = oblivious_sequence(RandomSpanningTree{}, 20, 30, rng);
    for (const auto& g : t.rounds()) EXPECT_TRUE(g.is_tree());
}

TEST(Oblivious, RandomConnectedSweep) {
    Rng rng(8);
    // RoundGraph rejects disconnected input, so construction is the check.
    auto seq = oblivious_sequence(RandomConnected{0.2}, 32, 100, rng);
    EXPECT_EQ(seq.length(), 100u);
    std::size_t total = 0;
    for (const auto& g : seq.rounds()) total += g.edge_count();
    // 31 tree edges plus about 0.2 of the remaining pairs.
    const double mean = static_cast<double>(total) / 100.0;
    EXPECT_GT(mean, 31 + 0.15 * (496 - 31));
    EXPECT_LT(mean, 31 + 0.25 * 496);
}

TEST(Oblivious, RoundsAreIndependentOfQueryOrder) {
    ObliviousAdversary a(RandomConnected{0.3}, 10, 77);
    auto r5 = a.graph(5);
    a.graph(1);
    EXPECT_EQ(a.graph(5), r5);
}

TEST(Oblivious, FamilyParsing) {
    EXPECT_TRUE(std::holds_alternative<StaticPath>(parse_family_spec("static-path")));
    EXPECT_TRUE(std::holds_alternative<RandomSpanningTree>(parse_family_spec("tree")));
    EXPECT_DOUBLE_EQ(std::get<RandomConnected>(parse_family_spec("random:0.25")).edge_prob, 0.25);
    EXPECT_EQ(std::get<FromFile>(parse_family_spec("file:/x/y")).path, "/x/y");
    EXPECT_THROW(parse_family_spec("random:1.5"), std::invalid_argument);
    EXPECT_THROW(parse_family_spec("random:-0.1"), std::invalid_argument);
    EXPECT_THROW(parse_family_spec("random:abc"), std::invalid_argument);
    EXPECT_THROW(parse_family_spec("hypercube"), std::invalid_argument);
    EXPECT_THROW(ObliviousAdversary(RandomConnected{2.0}, 4, 1), std::invalid_argument);
}

TEST(Oblivious, FileSequencesCycle) {
    auto path = std::filesystem::temp_directory_path() / "kgossip_adv_file.txt";
    {
        std::ofstream f(path);
        f << "3 2\nround 1 2\n0 1\n1 2\nround 2 2\n0 1\n0 2\n";
    }
    ObliviousAdversary a(FromFile{path.string()}, 3, 0);
    EXPECT_EQ(a.graph(3), a.graph(1));
    EXPECT_EQ(a.graph(4), a.graph(2));
    EXPECT_THROW(ObliviousAdversary(FromFile{path.string()}, 4, 0), std::invalid_argument);
    {
        std::ofstream f(path);
        f << "3 1\nround 1 1\n0 1\n";
    }
    EXPECT_THROW(ObliviousAdversary(FromFile{path.string()}, 3, 0), ParseError);
    std::filesystem::remove(path);
}
