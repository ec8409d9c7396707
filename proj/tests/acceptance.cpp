// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "kgossip/experiment.hpp"

using namespace kgossip;
namespace fs = std::filesystem;

namespace {

int failed = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failed += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Settings with(std::initializer_list<std::pair<const char*, std::string>> kv) {
    Settings s;
    for (const auto& [k, v] : kv) s.set(k, v);
    return s;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

std::vector<std::string> fields(const std::string& row) {
    std::vector<std::string> out;
    std::stringstream ss(row);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
}

std::string fmt(double v, int digits = 3) { return fmt_double(v, digits); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

// 1 and 2: strongly adaptive adversary against bcast:random.
void strong_adversary() {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = 128;
    const auto base = make_config("strong-adversary", with({{"pairs", "128x128"}, {"audit", "1"}, {"traces", "0"}}));
    const auto runs = run_simulation_sweep(base);
    const double elapsed = seconds_since(t0);

    long long checks = 0, invalid = 0, bound = 0, size_viol = 0, rounds = 0;
    int small_witness = 0;
    const int witness_cap = static_cast<int>(std::ceil(5 * log2n(n)));
    for (const auto& r : runs) {
        checks += r.trace.audit.witness_checks;
        invalid += r.trace.audit.witness_invalid;
        bound += r.trace.audit.progress_bound_violations;
        size_viol += r.trace.audit.witness_size_violations;
        rounds += static_cast<long long>(r.trace.rounds.size());
        small_witness += r.trace.max_witness >= 0 && r.trace.max_witness <= witness_cap;
    }
    report(1, runs.size() == 100 && checks > 0 && invalid == 0 && bound == 0 && elapsed < 120.0,
           std::to_string(runs.size()) + " runs, " + std::to_string(rounds) + " rounds, " + std::to_string(checks) +
               " witness checks, " + std::to_string(invalid) + " invalid, " + std::to_string(bound) +
               " progress-bound violations, " + std::to_string(size_viol) + " undersized witnesses, " +
               fmt(elapsed, 1) + " s (target < 120 s)");

    // Round-count trend across k at fixed n.
    const auto trend = make_config("strong-adversary", with({{"n", "128"}, {"k", "16,32,64"}, {"traces", "0"}}));
    auto all = run_simulation_sweep(trend);
    all.insert(all.end(), runs.begin(), runs.end());
    std::map<int, std::vector<double>> reached;
    std::map<int, long long> missing_left, missing_start, count;
    for (const auto& r : all) {
        ++count[r.k];
        missing_start[r.k] += r.trace.initial_missing;
        missing_left[r.k] += r.trace.rounds.empty() ? r.trace.initial_missing : r.trace.rounds.back().missing_total;
        std::optional<int> at = r.trace.completion_round;
        if (!at) at = r.trace.half_missing_round();
        if (at) reached[r.k].push_back(*at);
    }
    const double frac = static_cast<double>(small_witness) / static_cast<double>(runs.size());
    std::string detail = "max witness <= " + std::to_string(witness_cap) + " in " + fmt(100 * frac, 1) + "% of runs; ";
    bool ratio_ok = true;
    std::vector<int> ks{16, 32, 64, 128};
    std::map<int, double> med;
    for (int k : ks) {
        const bool all_reached = reached[k].size() == static_cast<std::size_t>(count[k]);
        detail += "k=" + std::to_string(k) + " checkpoint reached " + std::to_string(reached[k].size()) + "/" +
                  std::to_string(count[k]) + " (missing " +
                  fmt(100.0 * static_cast<double>(missing_left[k]) / static_cast<double>(missing_start[k]), 1) +
                  "% of initial at cap); ";
        if (!all_reached) ratio_ok = false;
        else med[k] = median(reached[k]);
    }
    if (ratio_ok) {
        for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
            const double ratio = med[ks[i + 1]] / med[ks[i]];
            detail += "ratio " + std::to_string(ks[i + 1]) + "/" + std::to_string(ks[i]) + "=" + fmt(ratio, 2) + "; ";
            ratio_ok &= ratio >= 1.6;
        }
    } else {
        detail += "ratio test undefined: rounds to checkpoint not observed within n*k/log2(n) rounds";
    }
    report(2, frac >= 0.95 && ratio_ok, detail);
}

// 3: rotating line against DET-SYM-DIFF.
void det_symdiff() {
    const auto c = make_config("det-symdiff-lb", with({{"traces", "0"}}));
    const auto rows = lines(run_experiment(c).file("summary.csv"));
    bool ok = rows.size() == 10;
    std::string detail;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        const int n = std::stoi(f[0]), k = std::stoi(f[1]);
        const int need = k * ((n - 2) / 2 + 1);
        const bool done = f[3] == "1";
        const int got = done ? std::stoi(f[4]) : -1;
        ok &= done && got >= need;
        detail += "(" + f[0] + "," + f[1] + "): " + (done ? f[4] : "timeout") + ">=" + std::to_string(need) + " ";
    }
    report(3, ok, detail);
}

// 4: SYM-DIFF on random connected graphs.
void symdiff_scaling() {
    const auto c = make_config("symdiff-scaling", with({{"pairs", "64x64,128x128,256x256"}, {"seeds", "20"},
                                                        {"traces", "0"}}));
    const auto runs = run_simulation_sweep(c);
    std::map<int, int> done;
    std::map<int, int> worst;
    bool ok = runs.size() == 60;
    for (const auto& r : runs) {
        const double bound = 4.0 * (r.n + r.k) * log2n(r.n) * log2n(r.k);
        const bool in = r.trace.completed() && *r.trace.completion_round <= bound;
        ok &= in;
        done[r.n] += in;
        if (r.trace.completed()) worst[r.n] = std::max(worst[r.n], *r.trace.completion_round);
    }
    std::string detail;
    for (auto [n, d] : done)
        detail += "n=k=" + std::to_string(n) + ": " + std::to_string(d) + "/20 within " +
                  fmt(4.0 * 2 * n * log2n(n) * log2n(n), 0) + " (worst " + std::to_string(worst[n]) + ") ";
    report(4, ok, detail);
}

// 5: sampling distribution and transcript growth.
void sampling_distribution() {
    const auto c = make_config("sample-dist", {});
    const auto out = run_experiment(c);
    const auto pairs = lines(out.file("pairs.csv"));
    double worst = 0;
    bool ok = pairs.size() == 51;
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        const double tv = std::stod(fields(pairs[i])[6]);
        worst = std::max(worst, tv);
        ok &= tv <= 0.1;
    }
    const auto bits = lines(out.file("bits.csv"));
    bool mono = bits.size() == 11;
    std::string table;
    double prev = -1;
    for (std::size_t i = 1; i < bits.size(); ++i) {
        const auto f = fields(bits[i]);
        const double b = std::stod(f[4]);
        mono &= std::stod(f[1]) == 0.05 && b >= prev;
        prev = b;
        table += f[0] + ":" + fmt(b, 1) + " ";
    }
    report(5, ok && mono,
           std::to_string(pairs.size() - 1) + " pairs at " + std::to_string(c.trials) + " trials, max TV " +
               fmt(worst, 4) + " (<= 0.1); mean bits by k " + table + (mono ? "(monotone)" : "(NOT monotone)"));
}

// 6: least_diff_index against a linear scan.
void least_diff_oracle() {
    const int trials = 10000;
    Rng rng(606);
    int mismatches = 0;
    for (int i = 0; i < trials; ++i) {
        TokenSet x(256), y(256);
        for (int j = 0; j < 256; ++j) {
            if (rng.bit()) x.set(j);
            if (rng.bit()) y.set(j);
        }
        std::optional<std::size_t> truth;
        for (std::size_t j = 0; j < 256 && !truth; ++j)
            if (x.test(j) != y.test(j)) truth = j;
        Rng shared = rng.split("shared", static_cast<std::uint64_t>(i));
        sampling::Transcript t;
        const auto r = sampling::least_diff_index(x, y, 0.05, shared, t);
        const bool same = r.index.has_value() == truth.has_value() && (!truth || *r.index == *truth);
        mismatches += !same;
    }
    const double upper =
        boost::math::binomial_distribution<>::find_upper_bound_on_p(trials, mismatches, 0.005);
    report(6, upper <= 0.05,
           std::to_string(mismatches) + "/" + std::to_string(trials) + " mismatches, 99% CI upper bound " +
               fmt(upper, 4) + " (<= 0.05)");
}

// 7: gathering within n + k rounds.
void gather() {
    std::string detail;
    bool ok = true;
    for (auto [n, k] : std::vector<std::pair<int, int>>{{16, 8}, {32, 16}}) {
        for (auto mode : {ScheduleMode::multiport, ScheduleMode::broadcast}) {
            int good = 0;
            for (int i = 0; i < 100; ++i) {
                Rng rng = Rng::derive(7, "gather", static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i));
                Rng graph_rng = rng.split("graphs"), init_rng = rng.split("init");
                const auto seq = oblivious_sequence(RandomConnected{0.1}, n, n + k, graph_rng);
                const auto init = make_initial("singleton", n, k, init_rng);
                const NodeId target = rng.uniform_int(n);
                try {
                    const auto g = gather_schedule(seq, init, target, mode);
                    const bool valid = validate_schedule(g.schedule, seq, init, Goal::sink_set({target})).ok();
                    good += g.flow >= k && valid && g.schedule.length() <= n + k;
                } catch (const FlowDeficit&) {
                }
            }
            ok &= good == 100;
            detail += "(" + std::to_string(n) + "," + std::to_string(k) + "," + to_string(mode) +
                      "): " + std::to_string(good) + "/100 ";
        }
    }
    report(7, ok, detail);
}

// 8: Algorithm 1.
void algorithm1_check() {
    const auto c = make_config("offline-multiport", {});
    const int n = 32, k = 32;
    const double bound = (n + k) + (log2n(n) + 1) * 4 * (n + k) * log2n(n);
    int good = 0, worst_retries = 0, longest = 0;
    for (int i = 0; i < 20; ++i) {
        const auto seed = run_seed(c, n, k, i);
        auto inst = make_offline_instance(c, n, k, seed, algorithm1_rounds(n, k, 4));
        Rng rng = Rng::derive(seed, "algorithm1");
        try {
            const auto r = algorithm1(inst.graphs, inst.init, rng, 4);
            int retries = 0;
            for (const auto& p : r.phases) retries = std::max(retries, p.retries);
            worst_retries = std::max(worst_retries, retries);
            longest = std::max(longest, r.schedule.length());
            const bool valid = validate_schedule(r.schedule, inst.graphs, inst.init, Goal::all_nodes()).ok();
            good += valid && r.schedule.length() <= bound && retries <= 3;
        } catch (const std::exception& e) {
            std::cerr << "algorithm1 instance " << i << ": " << e.what() << '\n';
        }
    }
    report(8, good == 20,
           std::to_string(good) + "/20 valid within " + fmt(bound, 0) + " rounds (longest " +
               std::to_string(longest) + "), max retries " + std::to_string(worst_retries));
}

// 9: Algorithm 2.
void algorithm2_check() {
    const auto c = make_config("offline-broadcast", {});
    std::string detail;
    bool ok = true;
    for (auto [n, k] : c.sizes) {
        int good = 0;
        for (int i = 0; i < 20; ++i) {
            const auto seed = run_seed(c, n, k, i);
            auto inst = make_offline_instance(c, n, k, seed, algorithm2_rounds(n, k));
            Rng rng = Rng::derive(seed, "algorithm2");
            try {
                const auto r = algorithm2(inst.graphs, inst.init, rng);
                const double bound =
                    static_cast<double>(r.S.size()) * (n + k) + k * std::ceil(2 * n * std::sqrt(log2n(n) / k));
                const bool valid = validate_schedule(r.schedule, inst.graphs, inst.init, Goal::all_nodes()).ok();
                good += valid && r.schedule.length() <= bound;
            } catch (const std::exception& e) {
                std::cerr << "algorithm2 instance " << i << ": " << e.what() << '\n';
            }
        }
        ok &= good == 20;
        detail += "(" + std::to_string(n) + "," + std::to_string(k) + "): " + std::to_string(good) + "/20 ";
    }
    report(9, ok, detail);
}

// 10: Algorithm 3 exact values and coverage.
void algorithm3_check() {
    const int n = 8, k = 4;
    int exact = 0, compared = 0, steps = 0, scans = 0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        const int window = 1 + static_cast<int>(seed % 3);
        const int q = 1 + static_cast<int>(seed / 3 % 4);
        Rng rng = Rng::derive(10, "enum", seed);
        const auto seq = oblivious_sequence(RandomConnected{0.0}, n, k * window, rng);
        const auto problem = coverage_problem(seq, n, k, q, 1, window);
        std::vector<int> fail_count(1u << n, 0);
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            if (std::popcount(mask) != q) continue;
            for (const auto& R : problem.reach()) {
                bool hit = false;
                for (int v = 0; v < n; ++v) hit |= (mask >> v & 1) && R[static_cast<std::size_t>(v)];
                fail_count[mask] += !hit;
            }
        }
        // Average failures over q-subsets agreeing with `fixed` on nodes below `upto`.
        auto enumerate = [&](std::uint32_t fixed, int upto) {
            BigInt fails = 0, subsets = 0;
            const std::uint32_t low = upto >= 32 ? ~0u : ((1u << upto) - 1);
            for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
                if (std::popcount(mask) != q || (mask & low) != (fixed & low)) continue;
                ++subsets;
                fails += fail_count[mask];
            }
            return Rational(fails, subsets);
        };
        std::vector<char> none(n, 0);
        ++compared;
        exact += *problem.expected_failures(none, none) == enumerate(0, 0);

        DerandomizeOptions opt;
        opt.q = q;
        opt.window = window;
        opt.flood_start = 1;
        try {
            const auto d = algorithm3_derandomize(seq, n, k, opt);
            ++scans;
            std::uint32_t chosen = 0;
            for (NodeId v : d.S) chosen |= 1u << v;
            for (int v = 0; v < n; ++v) {
                ++compared;
                ++steps;
                exact += d.trace[static_cast<std::size_t>(v + 1)] == enumerate(chosen, v + 1);
            }
        } catch (const DerandomizationError&) {
        }
    }
    const bool enum_ok = exact == compared;

    const auto c = make_config("derandomize", {});
    const int bn = 32, bk = 8;
    const double cap = 2 * std::sqrt(bk * log2n(bn));
    int good = 0;
    std::size_t largest = 0;
    for (int i = 0; i < 10; ++i) {
        const auto seed = run_seed(c, bn, bk, i);
        try {
            const auto out = run_derandomize(c, bn, bk, seed);
            const auto f = fields(out.summary_row);
            const std::size_t size = std::stoul(f[4]);
            largest = std::max(largest, size);
            good += out.ok && f[7] == f[8] && size <= cap;
        } catch (const std::exception& e) {
            std::cerr << "derandomize instance " << i << ": " << e.what() << '\n';
        }
    }
    report(10, enum_ok && good == 10,
           std::to_string(exact) + "/" + std::to_string(compared) + " exact matches (24 roots, " +
               std::to_string(steps) + " scan steps over " + std::to_string(scans) + " scans); " +
               std::to_string(good) + "/10 instances covered, |S| <= " + std::to_string(largest) +
               " (cap " + fmt(cap, 2) + ")");
}

// 11: tree decomposition.
void tree_check() {
    Rng rng(1111);
    int good = 0;
    for (int i = 0; i < 1000; ++i) {
        const int s = 2 + rng.uniform_int(19);
        const int n = s + rng.uniform_int(201 - s);
        const RoundGraph tree(n, random_tree_edges(n, rng));
        std::set<Edge> tree_edges(tree.edges().begin(), tree.edges().end());
        const auto parts = tree_decompose(tree, s);
        bool ok = !parts.empty();
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::set<Edge> used;
        std::vector<std::set<NodeId>> node_sets;
        for (const auto& p : parts) {
            std::set<NodeId> nodes(p.nodes.begin(), p.nodes.end());
            ok &= nodes.size() == p.nodes.size();
            const bool base = parts.size() == 1 && static_cast<int>(nodes.size()) == n;
            ok &= base || (static_cast<int>(nodes.size()) >= s && static_cast<int>(nodes.size()) <= 4 * s);
            ok &= p.edges.size() + 1 == nodes.size();
            for (auto e : p.edges) {
                if (e.first > e.second) std::swap(e.first, e.second);
                ok &= tree_edges.count(e) && nodes.count(e.first) && nodes.count(e.second);
                ok &= used.insert(e).second;
            }
            for (NodeId v : nodes) seen[static_cast<std::size_t>(v)] = 1;
            node_sets.push_back(std::move(nodes));
        }
        ok &= std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
        for (std::size_t a = 0; a < node_sets.size() && ok; ++a)
            for (std::size_t b = a + 1; b < node_sets.size(); ++b) {
                int common = 0;
                for (NodeId v : node_sets[a]) common += node_sets[b].count(v) > 0;
                ok &= common <= 1;
            }
        good += ok;
    }
    report(11, good == 1000, std::to_string(good) + "/1000 trees decomposed correctly");
}

// 12: byte-identical reruns of every scenario.
void determinism() {
    const std::vector<std::pair<std::string, Settings>> configs{
        {"symdiff-scaling", with({{"pairs", "32x32,64x64"}, {"seeds", "3"}})},
        {"strong-adversary", with({{"n", "64"}, {"k", "16,32"}, {"seeds", "3"}, {"audit", "1"}})},
        {"det-symdiff-lb", {}},
        {"offline-multiport", with({{"pairs", "16x16"}, {"seeds", "3"}})},
        {"offline-broadcast", with({{"pairs", "32x8"}, {"seeds", "3"}})},
        {"derandomize", with({{"pairs", "32x8"}, {"seeds", "2"}})},
        {"sample-dist", with({{"trials", "5000"}, {"sample_pairs", "10"}, {"bits_trials", "20"}})},
    };
    const auto root = fs::temp_directory_path() / "kgossip_acceptance";
    fs::remove_all(root);
    std::string detail;
    bool ok = true;
    for (const auto& [name, s] : configs) {
        std::vector<std::map<std::string, std::string>> copies;
        for (const char* jobs : {"1", "1", "3"}) {
            Settings o = s;
            o.set("jobs", jobs);
            o.set("out_dir", (root / ("run" + std::to_string(copies.size()))).string());
            const auto c = make_config(name, o);
            write_artifacts(c, run_experiment(c));
            std::map<std::string, std::string> files;
            for (const auto& e : fs::directory_iterator(fs::path(c.out_dir) / name)) {
                std::ifstream f(e.path(), std::ios::binary);
                std::stringstream ss;
                ss << f.rdbuf();
                files[e.path().filename().string()] = ss.str();
            }
            copies.push_back(std::move(files));
        }
        const bool same = !copies[0].empty() && copies[0] == copies[1] && copies[0] == copies[2];
        ok &= same;
        detail += name + (same ? " identical (" + std::to_string(copies[0].size()) + " files) " : " DIFFERS ");
    }
    fs::remove_all(root);
    report(12, ok, detail);
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> checks{strong_adversary, det_symdiff,     symdiff_scaling,
                                                    sampling_distribution, least_diff_oracle, gather,
                                                    algorithm1_check, algorithm2_check, algorithm3_check,
                                                    tree_check,       determinism};
    for (const auto& check : checks) {
        try {
            check();
        } catch (const std::exception& e) {
            std::printf("unexpected error: %s\n", e.what());
            ++failed;
        }
    }
    std::printf("%d criteria failed\n", failed);
    return failed ? 1 : 0;
}
