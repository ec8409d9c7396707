#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "adversaries.hpp"
#include "distribution.hpp"
#include "io.hpp"
#include "offline.hpp"
#include "sampling.hpp"
#include "schedule.hpp"
#include "simulation.hpp"

namespace kgossip {

// Initial-distribution specs.

/// `well-mixed:<p>`, `singleton` (uniform random owner per token),
/// `singleton:index` (token t at node t mod n), `all-at-one[:<node>]`,
/// `file:<path>`.
inline TokenDistribution make_initial(const std::string& spec, int n, int k, Rng& rng) {
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad number in init spec '" + spec + "'");
        }
    };
    if (spec.rfind("well-mixed:", 0) == 0) return init_distribution(WellMixedInit{number(spec.substr(11))}, n, k, rng);
    if (spec == "singleton") {
        SingletonInit s;
        for (int t = 0; t < k; ++t) s.owner.push_back(rng.uniform_int(n));
        return init_distribution(s, n, k, rng);
    }
    if (spec == "singleton:index") return init_distribution(singleton_by_index(n, k), n, k, rng);
    if (spec == "all-at-one") return init_distribution(AllAtOneInit{0}, n, k, rng);
    if (spec.rfind("all-at-one:", 0) == 0)
        return init_distribution(AllAtOneInit{static_cast<NodeId>(number(spec.substr(11)))}, n, k, rng);
    if (spec.rfind("file:", 0) == 0) {
        auto d = load_distribution(spec.substr(5));
        if (d.n != n || d.k != k)
            throw std::invalid_argument("distribution file has n=" + std::to_string(d.n) + ", k=" +
                                        std::to_string(d.k));
        return d;
    }
    throw std::invalid_argument("unknown init spec '" + spec + "'");
}

/// Checks an init spec without needing n and k (file specs must exist).
inline void check_init_spec(const std::string& spec) {
    if (spec.rfind("file:", 0) == 0) {
        (void)load_distribution(spec.substr(5));
        return;
    }
    if (spec.rfind("all-at-one:", 0) == 0) {
        const std::string node = spec.substr(11);
        if (node.empty() || node.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("bad node in init spec '" + spec + "'");
        return;
    }
    Rng r(0);
    (void)make_initial(spec, 2, 1, r);
}

// CSV helpers.

inline std::string fmt_double(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

template <typename T>
std::string fmt_opt(const std::optional<T>& v) {
    return v ? std::to_string(*v) : std::string();
}

inline std::string join(const std::vector<std::string>& parts, char sep = ',') {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += sep;
        s += parts[i];
    }
    return s;
}

// Configuration.

/// Layered key = value settings: scenario defaults, then an optional file,
/// then command-line overrides.
class Settings {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::invalid_argument("missing setting '" + key + "'");
        return it->second;
    }
    long long integer(const std::string& key) const {
        const auto s = str(key);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("setting '" + key + "' is not an integer: '" + s + "'");
        }
    }
    double real(const std::string& key) const {
        const auto s = str(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("setting '" + key + "' is not a number: '" + s + "'");
        }
    }
    std::vector<int> int_list(const std::string& key) const {
        std::vector<int> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                out.push_back(std::stoi(item, &used));
                if (used != item.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw std::invalid_argument("setting '" + key + "' has a bad entry '" + item + "'");
            }
        }
        return out;
    }

    /// `key = value` per line; '#' starts a comment.
    void merge_file(std::istream& in) {
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            const auto eq = line.find('=');
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                if (b == std::string::npos) return std::string();
                return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
            };
            if (trim(line).empty()) continue;
            if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
            const auto key = trim(line.substr(0, eq));
            if (key.empty()) throw ParseError("empty key", lineno);
            set(key, trim(line.substr(eq + 1)));
        }
    }
    void merge(const Settings& o) {
        for (const auto& [k, v] : o.values_) values_[k] = v;
    }

private:
    std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
    std::string scenario;
    /// (n, k) combinations, in run order.
    std::vector<std::pair<int, int>> sizes;
    std::string adversary;
    std::string protocol;
    std::string init;
    int seeds = 1;
    std::uint64_t seed = 1;
    /// 0 selects the scenario's formula.
    long long max_rounds = 0;
    std::string out_dir = "out";
    int jobs = 1;
    bool traces = true;
    bool audit = false;
    double eps = 0.1;
    std::string generator = "true-random";
    long long trials = 0;
    int sample_pairs = 0;
    int c1 = 4;
    std::vector<int> bits_k;
    double bits_eps = 0.05;
    long long bits_trials = 0;
    bool timeout_expected = false;
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"symdiff-scaling", "strong-adversary", "det-symdiff-lb",
                                                "offline-multiport", "offline-broadcast", "derandomize",
                                                "sample-dist"};
    return names;
}

inline Settings scenario_defaults(const std::string& scenario) {
    Settings s;
    s.set("seeds", "10");
    s.set("seed", "1");
    s.set("max_rounds", "0");
    s.set("out_dir", "out");
    s.set("jobs", "1");
    s.set("traces", "1");
    s.set("audit", "0");
    s.set("adversary", "random:0.1");
    s.set("protocol", "symdiff");
    s.set("init", "singleton");
    s.set("eps", "0.1");
    s.set("gen", "true-random");
    s.set("trials", "0");
    s.set("sample_pairs", "0");
    s.set("c1", "4");
    s.set("bits_k", "");
    s.set("bits_eps", "0.05");
    s.set("bits_trials", "0");
    if (scenario == "symdiff-scaling") {
        s.set("pairs", "32x32,64x64,128x128");
        s.set("adversary", "random:0.05");
        s.set("init", "well-mixed:0.5");
    } else if (scenario == "strong-adversary") {
        s.set("n", "128");
        s.set("k", "16,32,64,128");
        s.set("seeds", "100");
        s.set("adversary", "strong");
        s.set("protocol", "bcast:random");
        s.set("init", "well-mixed:0.75");
    } else if (scenario == "det-symdiff-lb") {
        s.set("n", "8,10,16");
        s.set("k", "4,5,8");
        s.set("seeds", "1");
        s.set("adversary", "rotating-line");
        s.set("protocol", "det-symdiff");
        s.set("init", "all-at-one:0");
    } else if (scenario == "offline-multiport") {
        s.set("pairs", "32x32");
        s.set("seeds", "20");
    } else if (scenario == "offline-broadcast") {
        s.set("pairs", "32x8,64x16");
        s.set("seeds", "20");
    } else if (scenario == "derandomize") {
        s.set("pairs", "32x8");
        s.set("seeds", "10");
    } else if (scenario == "sample-dist") {
        s.set("n", "1");
        s.set("k", "6");
        s.set("seeds", "1");
        s.set("trials", "200000");
        s.set("sample_pairs", "50");
        s.set("bits_k", "2,4,8,16,32,64,128,256,512,1024");
        s.set("bits_trials", "200");
    } else {
        throw std::invalid_argument("unknown scenario '" + scenario + "'");
    }
    return s;
}

/// `64x64,128x128` or the cross product of `n` and `k` lists.
inline std::vector<std::pair<int, int>> parse_sizes(const Settings& s) {
    std::vector<std::pair<int, int>> out;
    if (s.has("pairs") && !s.str("pairs").empty() && !(s.has("n") && s.has("k"))) {
        std::stringstream ss(s.str("pairs"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto x = item.find('x');
            try {
                if (x == std::string::npos) throw std::invalid_argument("no x");
                out.emplace_back(std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1)));
            } catch (const std::exception&) {
                throw std::invalid_argument("bad size pair '" + item + "', expected NxK");
            }
        }
    } else {
        for (int n : s.int_list("n"))
            for (int k : s.int_list("k")) out.emplace_back(n, k);
    }
    if (out.empty()) throw std::invalid_argument("no (n, k) sizes configured");
    for (auto [n, k] : out)
        if (n < 1 || k < 1) throw std::invalid_argument("n and k must be positive");
    return out;
}

/// Resolves layered settings and checks every spec string.
inline ExperimentConfig make_config(const std::string& scenario, const Settings& overrides) {
    Settings s = scenario_defaults(scenario);
    // An explicit n or k list replaces the default pair list, and vice versa.
    if (overrides.has("pairs")) {
        Settings t;
        for (const auto& [k, v] : s.values())
            if (k != "n" && k != "k") t.set(k, v);
        s = t;
    }
    if (overrides.has("n") || overrides.has("k")) {
        if (!s.has("n") && !overrides.has("n")) throw std::invalid_argument("set both n and k, or pairs");
        if (!s.has("k") && !overrides.has("k")) throw std::invalid_argument("set both n and k, or pairs");
        Settings t;
        for (const auto& [k, v] : s.values())
            if (k != "pairs") t.set(k, v);
        s = t;
    }
    s.merge(overrides);
    ExperimentConfig c;
    c.scenario = scenario;
    c.sizes = parse_sizes(s);
    c.adversary = s.str("adversary");
    c.protocol = s.str("protocol");
    c.init = s.str("init");
    c.seeds = static_cast<int>(s.integer("seeds"));
    c.seed = static_cast<std::uint64_t>(s.integer("seed"));
    c.max_rounds = s.integer("max_rounds");
    c.out_dir = s.str("out_dir");
    c.jobs = static_cast<int>(s.integer("jobs"));
    c.traces = s.integer("traces") != 0;
    c.audit = s.integer("audit") != 0;
    c.eps = s.real("eps");
    c.generator = s.str("gen");
    c.trials = s.integer("trials");
    c.sample_pairs = static_cast<int>(s.integer("sample_pairs"));
    c.c1 = static_cast<int>(s.integer("c1"));
    if (!s.str("bits_k").empty()) c.bits_k = s.int_list("bits_k");
    c.bits_eps = s.real("bits_eps");
    c.bits_trials = s.integer("bits_trials");
    c.timeout_expected = scenario == "strong-adversary";

    if (c.seeds < 1) throw std::invalid_argument("seeds must be positive");
    if (c.jobs < 1) throw std::invalid_argument("jobs must be positive");
    if (c.max_rounds < 0) throw std::invalid_argument("max_rounds must be non-negative");
    const bool simulation = scenario == "symdiff-scaling" || scenario == "strong-adversary" ||
                            scenario == "det-symdiff-lb";
    if (simulation) {
        check_model_order(parse_adversary_spec(c.adversary), parse_protocol(c.protocol));
        check_init_spec(c.init);
    } else if (scenario != "sample-dist") {
        (void)parse_family_spec(c.adversary);
        check_init_spec(c.init);
    } else {
        (void)sampling::parse_generator(c.generator);
        if (!(c.eps > 0 && c.eps < 1) || !(c.bits_eps > 0 && c.bits_eps < 1))
            throw std::invalid_argument("eps must lie in (0,1)");
        if (c.trials < 1) throw std::invalid_argument("trials must be positive");
        for (auto [n, k] : c.sizes)
            if (k > 16) throw std::invalid_argument("sample-dist enumerates 4^k pairs; keep k <= 16");
    }
    return c;
}

/// Seed of run `index` at size (n, k).
inline std::uint64_t run_seed(const ExperimentConfig& c, int n, int k, int index) {
    return derive_key(c.seed, "run", static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k),
                      static_cast<std::uint64_t>(index));
}

/// Runs body(i) for i in [0, count) on `jobs` threads; results land in index order.
template <typename R>
std::vector<R> parallel_map(int count, int jobs, const std::function<R(int)>& body) {
    std::vector<R> out(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i; (i = next.fetch_add(1)) < count;) {
            try {
                out[static_cast<std::size_t>(i)] = body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min(jobs, count));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// Simulation scenarios.

inline long long default_max_rounds(const ExperimentConfig& c, int n, int k) {
    if (c.max_rounds > 0) return c.max_rounds;
    const double ln = std::max(1.0, log2n(n)), lk = std::max(1.0, log2n(k));
    if (c.scenario == "strong-adversary") return ceil_to_ll(static_cast<double>(n) * k / ln);
    if (c.scenario == "det-symdiff-lb") return 4LL * n * k;
    return ceil_to_ll(4.0 * (n + k) * ln * lk);
}

struct SimRun {
    int n = 0, k = 0, index = 0;
    std::uint64_t seed = 0;
    long long max_rounds = 0;
    RunTrace trace;
};

inline RunTrace simulate_run(const std::string& adversary, const std::string& protocol, const std::string& init,
                             int n, int k, std::uint64_t seed, long long max_rounds, bool audit) {
    SimulationConfig cfg;
    cfg.adversary = parse_adversary_spec(adversary);
    cfg.protocol = parse_protocol(protocol);
    cfg.max_rounds = static_cast<int>(max_rounds);
    cfg.seed = seed;
    cfg.audit = audit;
    Rng init_rng = Rng::derive(seed, "init");
    return run_simulation(cfg, make_initial(init, n, k, init_rng));
}

inline std::vector<SimRun> run_simulation_sweep(const ExperimentConfig& c) {
    std::vector<SimRun> runs;
    for (auto [n, k] : c.sizes)
        for (int i = 0; i < c.seeds; ++i)
            runs.push_back({n, k, i, run_seed(c, n, k, i), default_max_rounds(c, n, k), {}});
    auto traces = parallel_map<RunTrace>(static_cast<int>(runs.size()), c.jobs, [&](int i) {
        const auto& r = runs[static_cast<std::size_t>(i)];
        return simulate_run(c.adversary, c.protocol, c.init, r.n, r.k, r.seed, r.max_rounds, c.audit);
    });
    for (std::size_t i = 0; i < runs.size(); ++i) runs[i].trace = std::move(traces[i]);
    return runs;
}

inline const char* kTraceHeader = "round,progress,missing_total,groups,inter_group_edges,components,witness_size,color";
inline const char* kSimSummaryHeader =
    "n,k,seed,completed,completion_round,rounds_run,half_missing_round,red,green,blue,black,max_witness,"
    "witness_invalid,progress_bound_violations";

inline std::string trace_csv(const RunTrace& t) {
    std::string s = std::string(kTraceHeader) + "\n";
    for (const auto& r : t.rounds) {
        s += std::to_string(r.round) + ',' + std::to_string(r.progress) + ',' + std::to_string(r.missing_total) +
             ',' + std::to_string(r.groups) + ',' + std::to_string(r.inter_group_edges) + ',';
        s += (r.components >= 0 ? std::to_string(r.components) : std::string()) + ',';
        s += (r.witness_size >= 0 ? std::to_string(r.witness_size) : std::string()) + ',';
        s += std::string(to_string(r.color)) + '\n';
    }
    return s;
}

inline std::string sim_summary_row(const SimRun& r) {
    const auto& t = r.trace;
    return join({std::to_string(r.n), std::to_string(r.k), std::to_string(r.seed), t.completed() ? "1" : "0",
                 fmt_opt(t.completion_round), std::to_string(t.rounds.size()), fmt_opt(t.half_missing_round()),
                 std::to_string(t.count(RoundColor::red)), std::to_string(t.count(RoundColor::green)),
                 std::to_string(t.count(RoundColor::blue)), std::to_string(t.count(RoundColor::black)),
                 t.max_witness >= 0 ? std::to_string(t.max_witness) : std::string(),
                 std::to_string(t.audit.witness_invalid), std::to_string(t.audit.progress_bound_violations)});
}

// Offline scenarios.

struct OfflineInstance {
    GraphSequence graphs;
    TokenDistribution init;
};

inline OfflineInstance make_offline_instance(const ExperimentConfig& c, int n, int k, std::uint64_t seed,
                                             long long length) {
    Rng rng(seed);
    Rng graph_rng = rng.split("graphs");
    Rng init_rng = rng.split("init");
    return {oblivious_sequence(parse_family_spec(c.adversary), n, static_cast<int>(length), graph_rng),
            make_initial(c.init, n, k, init_rng)};
}

/// Rounds Algorithm 1 may need: the gather window, every phase window, and
/// room for the last phase's full retry chain.
inline long long algorithm1_rounds(int n, int k, int c1, int max_retries = 3) {
    const long long logn = std::max(1, ceil_log2(static_cast<std::uint64_t>(n)));
    const long long w = static_cast<long long>(c1) * (n + k) * logn;
    return (n + k) + (logn + 1) * w + ((1LL << max_retries) - 1) * w;
}

inline double algorithm1_length_bound(int n, int k, int c1 = 4) {
    const double l = log2n(n);
    return (n + k) + (l + 1) * c1 * (n + k) * l;
}

inline long long algorithm2_rounds(int n, int k) {
    if (k <= std::sqrt(log2n(n))) return static_cast<long long>(k) * n;
    return static_cast<long long>(algorithm2_set_size(n, k)) * (n + k) +
           static_cast<long long>(k) * flood_window(n, k);
}

inline const char* kMultiportHeader =
    "n,k,seed,v0,gather_length,length,length_bound,phases,max_retries,valid,phase_flows";
inline const char* kPhaseHeader = "n,k,seed,phase,sinks,required,flow,window,retries,start_round,end_round";
inline const char* kBroadcastHeader = "n,k,seed,small_k,set_size,window,flood_start,length,length_bound,valid";
inline const char* kDerandomizeHeader =
    "n,k,seed,q,set_size,root_probability,root_probability_value,covered_pairs,total_pairs,length,valid";

inline std::string phase_rows(int n, int k, std::uint64_t seed, const Algorithm1Result& r) {
    std::string s;
    for (const auto& p : r.phases)
        s += join({std::to_string(n), std::to_string(k), std::to_string(seed), std::to_string(p.index),
                   std::to_string(p.sinks), std::to_string(p.required), std::to_string(p.flow),
                   std::to_string(p.window), std::to_string(p.retries), std::to_string(p.start_round),
                   std::to_string(p.end_round)}) +
             "\n";
    return s;
}

inline std::string multiport_row(int n, int k, std::uint64_t seed, const Algorithm1Result& r, bool valid) {
    int max_retries = 0;
    std::vector<std::string> flows;
    for (const auto& p : r.phases) {
        max_retries = std::max(max_retries, p.retries);
        flows.push_back(std::to_string(p.flow));
    }
    return join({std::to_string(n), std::to_string(k), std::to_string(seed), std::to_string(r.v0),
                 std::to_string(r.gather.schedule.length()), std::to_string(r.schedule.length()),
                 fmt_double(algorithm1_length_bound(n, k), 1), std::to_string(r.phases.size()),
                 std::to_string(max_retries), valid ? "1" : "0", join(flows, ';')});
}

struct OfflineRunOutput {
    std::string summary_row;
    std::string extra_rows;
    bool ok = false;
};

inline OfflineRunOutput run_offline_multiport(const ExperimentConfig& c, int n, int k, std::uint64_t seed) {
    auto inst = make_offline_instance(c, n, k, seed, algorithm1_rounds(n, k, c.c1));
    Rng rng = Rng::derive(seed, "algorithm1");
    const auto r = algorithm1(inst.graphs, inst.init, rng, c.c1);
    const bool valid = validate_schedule(r.schedule, inst.graphs, inst.init, Goal::all_nodes()).ok();
    return {multiport_row(n, k, seed, r, valid), phase_rows(n, k, seed, r),
            valid && r.schedule.length() <= algorithm1_length_bound(n, k, c.c1)};
}

inline std::string broadcast_row(int n, int k, std::uint64_t seed, const Algorithm2Result& r, bool valid) {
    return join({std::to_string(n), std::to_string(k), std::to_string(seed), r.small_k ? "1" : "0",
                 std::to_string(r.S.size()), std::to_string(r.window), std::to_string(r.flood_start),
                 std::to_string(r.schedule.length()), std::to_string(r.length_bound), valid ? "1" : "0"});
}

inline OfflineRunOutput run_offline_broadcast(const ExperimentConfig& c, int n, int k, std::uint64_t seed) {
    auto inst = make_offline_instance(c, n, k, seed, algorithm2_rounds(n, k));
    Rng rng = Rng::derive(seed, "algorithm2");
    const auto r = algorithm2(inst.graphs, inst.init, rng);
    const bool valid = validate_schedule(r.schedule, inst.graphs, inst.init, Goal::all_nodes()).ok();
    return {broadcast_row(n, k, seed, r, valid), {}, valid && r.schedule.length() <= r.length_bound};
}

inline OfflineRunOutput run_derandomize(const ExperimentConfig& c, int n, int k, std::uint64_t seed) {
    const int q = algorithm3_set_size(n, k);
    const long long length = static_cast<long long>(q) * (n + k) + static_cast<long long>(k) * flood_window(n, k);
    auto inst = make_offline_instance(c, n, k, seed, length);
    const auto d = algorithm3_derandomize(inst.graphs, n, k);
    int covered = 0;
    for (TokenId t = 0; t < k; ++t)
        for (NodeId u = 0; u < n; ++u)
            covered += broadcast_distance(inst.graphs, d.flood_start + t * d.window, d.window, d.S, u).has_value();
    Rng rng = Rng::derive(seed, "algorithm2");
    Algorithm2Options opt;
    opt.preselected = d.S;
    opt.gather_slots = d.q;
    const auto r = algorithm2(inst.graphs, inst.init, rng, opt);
    const bool valid = validate_schedule(r.schedule, inst.graphs, inst.init, Goal::all_nodes()).ok();
    const std::string row =
        join({std::to_string(n), std::to_string(k), std::to_string(seed), std::to_string(d.q),
              std::to_string(d.S.size()), d.root.str(), fmt_double(static_cast<double>(d.root), 9),
              std::to_string(covered), std::to_string(n * k), std::to_string(r.schedule.length()),
              valid ? "1" : "0"});
    return {row, {}, valid && covered == n * k};
}

// Sampling scenario.

inline const char* kSamplePairsHeader = "k,a,b,symdiff_size,trials,empty_count,tv_distance,mean_bits";
inline const char* kSampleBitsHeader = "k,eps,generator,trials,mean_bits,max_bits,seed_bits,mean_least_diff_bits";

/// Empirical output distribution of sample_symdiff on (a, b).
struct SampleStats {
    long long trials = 0;
    std::map<TokenId, long long> counts;
    long long empty = 0;
    double mean_bits = 0;
    long long max_bits = 0;
    long long seed_bits = 0;

    /// Total-variation distance from uniform on `target` (empty outputs count as mass off the target).
    double tv_from_uniform(const std::vector<TokenId>& target) const {
        if (target.empty()) return empty == trials ? 0.0 : 1.0;
        const double u = 1.0 / static_cast<double>(target.size());
        double tv = static_cast<double>(empty) / static_cast<double>(trials);
        for (TokenId t : target) {
            auto it = counts.find(t);
            const double f = it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(trials);
            tv += std::abs(f - u);
        }
        for (const auto& [t, c] : counts)
            if (!std::binary_search(target.begin(), target.end(), t))
                tv += static_cast<double>(c) / static_cast<double>(trials);
        return tv / 2;
    }
};

inline SampleStats sample_trials(const TokenSet& a, const TokenSet& b, double eps,
                                 const sampling::GeneratorSpec& gen, long long trials, std::uint64_t seed) {
    SampleStats s;
    s.trials = trials;
    double bits = 0;
    for (long long i = 0; i < trials; ++i) {
        Rng rng = Rng::derive(seed, "trial", static_cast<std::uint64_t>(i));
        const auto out = sampling::sample_symdiff(a, b, eps, gen, rng);
        if (out.element) ++s.counts[*out.element];
        else ++s.empty;
        const long long tb = out.transcript.total();
        bits += static_cast<double>(tb);
        s.max_bits = std::max(s.max_bits, tb);
        s.seed_bits = out.seed_bits;
    }
    s.mean_bits = trials ? bits / static_cast<double>(trials) : 0.0;
    return s;
}

inline TokenSet set_from_mask(int k, std::uint64_t mask) {
    TokenSet s(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        if (mask >> i & 1) s.set(i);
    return s;
}

/// (a, b) masks with nonempty symmetric difference, `count` of them drawn
/// uniformly without replacement (all of them when count is 0 or too large).
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> sample_pair_subset(int k, int count, Rng& rng) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> all;
    const std::uint64_t m = std::uint64_t{1} << k;
    for (std::uint64_t a = 0; a < m; ++a)
        for (std::uint64_t b = 0; b < m; ++b)
            if (a != b) all.emplace_back(a, b);
    if (count <= 0 || static_cast<std::size_t>(count) >= all.size()) return all;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (int i : rng.sample_without_replacement(static_cast<int>(all.size()), count))
        out.push_back(all[static_cast<std::size_t>(i)]);
    return out;
}

inline std::string mask_string(int k, std::uint64_t mask) {
    std::vector<std::string> ids;
    for (int i = 0; i < k; ++i)
        if (mask >> i & 1) ids.push_back(std::to_string(i));
    return ids.empty() ? std::string("-") : join(ids, ';');
}

struct ExperimentOutput {
    /// File name (relative to out_dir/scenario) and contents, in write order.
    std::vector<std::pair<std::string, std::string>> files;
    int runs = 0;
    int failures = 0;
    bool timeout_expected = false;

    int exit_code() const { return failures == 0 || timeout_expected ? 0 : 1; }
    const std::string& file(const std::string& name) const {
        for (const auto& [n, c] : files)
            if (n == name) return c;
        throw std::out_of_range("no artifact " + name);
    }
};

/// Builds every artifact in memory.
inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
    ExperimentOutput out;
    out.timeout_expected = c.timeout_expected;
    const auto& s = c.scenario;
    if (s == "symdiff-scaling" || s == "strong-adversary" || s == "det-symdiff-lb") {
        const auto runs = run_simulation_sweep(c);
        std::string summary = std::string(kSimSummaryHeader) + "\n";
        for (const auto& r : runs) {
            summary += sim_summary_row(r) + "\n";
            ++out.runs;
            out.failures += !r.trace.completed();
            if (c.traces)
                out.files.emplace_back("trace_n" + std::to_string(r.n) + "_k" + std::to_string(r.k) + "_s" +
                                           std::to_string(r.index) + ".csv",
                                       trace_csv(r.trace));
        }
        out.files.emplace_back("summary.csv", summary);
        return out;
    }
    if (s == "offline-multiport" || s == "offline-broadcast" || s == "derandomize") {
        struct Job {
            int n, k;
            std::uint64_t seed;
        };
        std::vector<Job> jobs;
        for (auto [n, k] : c.sizes)
            for (int i = 0; i < c.seeds; ++i) jobs.push_back({n, k, run_seed(c, n, k, i)});
        const auto results = parallel_map<OfflineRunOutput>(static_cast<int>(jobs.size()), c.jobs, [&](int i) {
            const auto& j = jobs[static_cast<std::size_t>(i)];
            if (s == "offline-multiport") return run_offline_multiport(c, j.n, j.k, j.seed);
            if (s == "offline-broadcast") return run_offline_broadcast(c, j.n, j.k, j.seed);
            return run_derandomize(c, j.n, j.k, j.seed);
        });
        const char* header = s == "offline-multiport" ? kMultiportHeader
                             : s == "offline-broadcast" ? kBroadcastHeader
                                                        : kDerandomizeHeader;
        std::string summary = std::string(header) + "\n", extra = std::string(kPhaseHeader) + "\n";
        for (const auto& r : results) {
            summary += r.summary_row + "\n";
            extra += r.extra_rows;
            ++out.runs;
            out.failures += !r.ok;
        }
        out.files.emplace_back("summary.csv", summary);
        if (s == "offline-multiport") out.files.emplace_back("phases.csv", extra);
        return out;
    }
    // sample-dist
    const auto gen = sampling::parse_generator(c.generator);
    std::string pairs_csv = std::string(kSamplePairsHeader) + "\n";
    for (auto [n, k] : c.sizes) {
        (void)n;
        Rng pick = Rng::derive(c.seed, "pairs", static_cast<std::uint64_t>(k));
        const auto pairs = sample_pair_subset(k, c.sample_pairs, pick);
        const auto rows = parallel_map<std::string>(static_cast<int>(pairs.size()), c.jobs, [&](int i) {
            const auto [am, bm] = pairs[static_cast<std::size_t>(i)];
            const TokenSet a = set_from_mask(k, am), b = set_from_mask(k, bm);
            const auto st = sample_trials(a, b, c.eps, gen, c.trials,
                                          derive_key(c.seed, "pair", static_cast<std::uint64_t>(k), am, bm));
            const auto target = (a ^ b).to_vector();
            return join({std::to_string(k), mask_string(k, am), mask_string(k, bm), std::to_string(target.size()),
                         std::to_string(c.trials), std::to_string(st.empty),
                         fmt_double(st.tv_from_uniform(target)), fmt_double(st.mean_bits, 3)});
        });
        for (const auto& r : rows) pairs_csv += r + "\n";
        out.runs += static_cast<int>(rows.size());
    }
    out.files.emplace_back("pairs.csv", pairs_csv);
    if (!c.bits_k.empty()) {
        std::string bits = std::string(kSampleBitsHeader) + "\n";
        const auto rows = parallel_map<std::string>(static_cast<int>(c.bits_k.size()), c.jobs, [&](int i) {
            const int k = c.bits_k[static_cast<std::size_t>(i)];
            Rng rng = Rng::derive(c.seed, "bits", static_cast<std::uint64_t>(k));
            double total = 0, sub = 0;
            long long maxb = 0, seed_bits = 0;
            const long long trials = std::max<long long>(1, c.bits_trials);
            for (long long t = 0; t < trials; ++t) {
                TokenSet a(static_cast<std::size_t>(k)), b(static_cast<std::size_t>(k));
                for (int j = 0; j < k; ++j) {
                    if (rng.bit()) a.set(j);
                    if (rng.bit()) b.set(j);
                }
                Rng run = rng.split("run", static_cast<std::uint64_t>(t));
                const auto o = sampling::sample_symdiff(a, b, c.bits_eps, gen, run);
                total += static_cast<double>(o.transcript.total());
                sub += static_cast<double>(o.transcript.total() - o.seed_bits);
                maxb = std::max(maxb, o.transcript.total());
                seed_bits = o.seed_bits;
            }
            return join({std::to_string(k), fmt_double(c.bits_eps, 4), c.generator, std::to_string(trials),
                         fmt_double(total / static_cast<double>(trials), 3), std::to_string(maxb),
                         std::to_string(seed_bits), fmt_double(sub / static_cast<double>(trials), 3)});
        });
        for (const auto& r : rows) bits += r + "\n";
        out.files.emplace_back("bits.csv", bits);
    }
    return out;
}

/// Writes artifacts under out_dir/scenario/.
inline void write_artifacts(const ExperimentConfig& c, const ExperimentOutput& out) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(c.out_dir) / c.scenario;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& [name, content] : out.files) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << content;
        if (!f) throw std::runtime_error("write failed for " + (dir / name).string());
    }
}

}  // namespace kgossip
