// Command-line front end: simulate, offline, sample, experiment.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgossip/experiment.hpp"

using namespace kgossip;

namespace {

const char* kColumnsHelp = R"(CSV columns
  simulate / symdiff-scaling / strong-adversary / det-symdiff-lb
    trace_*.csv  : round,progress,missing_total,groups,inter_group_edges,components,witness_size,color
    summary.csv  : n,k,seed,completed,completion_round,rounds_run,half_missing_round,red,green,blue,black,max_witness,witness_invalid,progress_bound_violations
  offline --mode multiport / offline-multiport
    summary.csv  : n,k,seed,v0,gather_length,length,length_bound,phases,max_retries,valid,phase_flows
    phases.csv   : n,k,seed,phase,sinks,required,flow,window,retries,start_round,end_round
  offline --mode broadcast / offline-broadcast
    summary.csv  : n,k,seed,small_k,set_size,window,flood_start,length,length_bound,valid
  offline --mode derandomize / derandomize
    summary.csv  : n,k,seed,q,set_size,root_probability,root_probability_value,covered_pairs,total_pairs,length,valid
  sample
    histogram    : element,count,frequency   (element "empty" for the empty verdict)
    statistics   : trials,mean_bits,max_bits,seed_bits,tv_distance
  sample-dist
    pairs.csv    : k,a,b,symdiff_size,trials,empty_count,tv_distance,mean_bits
    bits.csv     : k,eps,generator,trials,mean_bits,max_bits,seed_bits,mean_least_diff_bits
Empty fields mean "not applicable" or "not reached".)";

std::vector<int> parse_ids(const std::string& s, int k) {
    std::vector<int> out;
    if (s.empty() || s == "-") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad element id '" + item + "'");
        }
        if (used != item.size() || v < 0 || v >= k)
            throw std::invalid_argument("element id '" + item + "' outside [0," + std::to_string(k) + ")");
        out.push_back(v);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-gossip simulation laboratory"};
    app.footer(kColumnsHelp);
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int jobs = 1;
    app.add_option("--seed", seed, "Base seed; all randomness derives from it")->capture_default_str();
    app.add_option("--out-dir", out_dir, "Directory for CSV artifacts")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads for sweeps")->capture_default_str()->check(CLI::PositiveNumber);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run one dissemination simulation");
    int sim_n = 32, sim_k = 32, sim_max = 1000;
    std::string sim_adv = "random:0.05", sim_proto = "symdiff", sim_init = "well-mixed:0.5";
    bool sim_audit = false;
    double sim_green = 0.125;
    std::string sim_trace;
    sim->add_option("--n", sim_n, "Nodes")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--k", sim_k, "Tokens")->capture_default_str()->check(CLI::NonNegativeNumber);
    sim->add_option("--adversary", sim_adv,
                    "strong | rotating-line | static-path | static-star | static-clique | random:<p> | tree | "
                    "file:<path>")
        ->capture_default_str();
    sim->add_option("--protocol", sim_proto,
                    "symdiff | symdiff-oriented | det-symdiff | bcast:random | bcast:round-robin | bcast:min-id")
        ->capture_default_str();
    sim->add_option("--init", sim_init,
                    "well-mixed:<p> | singleton | singleton:index | all-at-one[:<node>] | file:<path>")
        ->capture_default_str();
    sim->add_option("--max-rounds", sim_max, "Round cap")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--green-fraction", sim_green, "Fraction of missing tokens that makes a round green")
        ->capture_default_str();
    sim->add_flag("--audit", sim_audit, "Check witnesses and progress bounds every round (strong adversary)");
    sim->add_option("--trace", sim_trace, "Trace CSV path (default <out-dir>/simulate/trace.csv)");

    // offline
    auto* off = app.add_subcommand("offline", "Compute an offline schedule for a known graph sequence");
    std::string off_mode = "multiport", off_graphs, off_init, off_out;
    int off_k = 0, off_c1 = 4;
    bool off_validate = false;
    off->add_option("--mode", off_mode, "multiport | broadcast | derandomize")
        ->capture_default_str()
        ->check(CLI::IsMember({"multiport", "broadcast", "derandomize"}));
    off->add_option("--graphs", off_graphs, "Graph-sequence file")->required();
    off->add_option("--init", off_init, "Distribution file, or an init spec (needs --k)")->required();
    off->add_option("--k", off_k, "Tokens, when --init is a spec")->check(CLI::PositiveNumber);
    off->add_option("--out", off_out, "Schedule output file");
    off->add_option("--c1", off_c1, "Algorithm 1 window constant")->capture_default_str()->check(CLI::PositiveNumber);
    off->add_flag("--validate", off_validate, "Validate the schedule; exit 2 if it fails");

    // sample
    auto* samp = app.add_subcommand("sample", "Two-party symmetric-difference sampling");
    int s_k = 8;
    double s_eps = 0.1;
    std::string s_a, s_b, s_gen = "true-random";
    long long s_trials = 10000;
    samp->add_option("--k", s_k, "Universe size")->capture_default_str()->check(CLI::PositiveNumber);
    samp->add_option("--eps", s_eps, "Statistical distance budget in (0,1)")->capture_default_str();
    samp->add_option("--A", s_a, "Alice's set, comma-separated ids");
    samp->add_option("--B", s_b, "Bob's set, comma-separated ids");
    samp->add_option("--gen", s_gen, "true-random | prf | prf:<seedbits>")->capture_default_str();
    samp->add_option("--trials", s_trials, "Protocol runs")->capture_default_str()->check(CLI::PositiveNumber);

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a registered experiment scenario");
    std::string scenario, config_file;
    exp->add_option("scenario", scenario, "Scenario name")
        ->required()
        ->check(CLI::IsMember(scenario_names()));
    exp->add_option("--config", config_file, "key = value settings file (flags override it)");
    std::map<std::string, std::string> exp_flags;
    const std::vector<std::pair<std::string, std::string>> keys{
        {"n", "Node counts, comma-separated"},
        {"k", "Token counts, comma-separated"},
        {"pairs", "Explicit NxK sizes, comma-separated"},
        {"seeds", "Runs per size"},
        {"adversary", "Adversary or graph family spec"},
        {"protocol", "Protocol spec"},
        {"init", "Initial distribution spec"},
        {"max_rounds", "Round cap (0 = scenario default)"},
        {"eps", "Sampling eps"},
        {"gen", "Sequence generator"},
        {"trials", "Sampling trials per pair"},
        {"sample_pairs", "Number of (A,B) pairs sampled"},
        {"bits_k", "Universe sizes for the transcript-bits table"},
        {"bits_trials", "Trials per universe size"},
        {"bits_eps", "Eps for the transcript-bits table"},
        {"traces", "Write per-run trace CSVs (1/0)"},
        {"audit", "Audit strong-adversary rounds (1/0)"},
        {"c1", "Algorithm 1 window constant"}};
    for (const auto& [key, help] : keys) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        exp->add_option_function<std::string>(flag, [&exp_flags, key = key](const std::string& v) { exp_flags[key] = v; },
                                              help);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            SimulationConfig cfg;
            cfg.adversary = parse_adversary_spec(sim_adv);
            cfg.protocol = parse_protocol(sim_proto);
            cfg.max_rounds = sim_max;
            cfg.seed = seed;
            cfg.audit = sim_audit;
            cfg.green_fraction = sim_green;
            Rng init_rng = Rng::derive(seed, "init");
            const auto trace = run_simulation(cfg, make_initial(sim_init, sim_n, sim_k, init_rng));
            std::string path = sim_trace;
            if (path.empty()) {
                std::filesystem::create_directories(std::filesystem::path(out_dir) / "simulate");
                path = (std::filesystem::path(out_dir) / "simulate" / "trace.csv").string();
            }
            write_text(path, trace_csv(trace));
            SimRun r{sim_n, sim_k, 0, seed, sim_max, trace};
            std::cout << kSimSummaryHeader << '\n' << sim_summary_row(r) << '\n';
            return trace.completed() ? 0 : 1;
        }

        if (*off) {
            const auto graphs = load_graph_sequence(off_graphs);
            const int n = graphs.n();
            TokenDistribution init;
            if (std::ifstream(off_init).good() && off_init.find(':') == std::string::npos) {
                init = load_distribution(off_init);
            } else {
                if (off_k < 1) throw std::invalid_argument("--k is required with an init spec");
                Rng init_rng = Rng::derive(seed, "init");
                init = make_initial(off_init, n, off_k, init_rng);
            }
            if (init.n != n) throw std::invalid_argument("distribution and graph sequence disagree on n");
            const int k = init.k;
            Schedule schedule;
            std::string summary;
            if (off_mode == "multiport") {
                Rng rng = Rng::derive(seed, "algorithm1");
                const auto r = algorithm1(graphs, init, rng, off_c1);
                schedule = r.schedule;
                const bool valid = validate_schedule(schedule, graphs, init, Goal::all_nodes()).ok();
                summary = std::string(kMultiportHeader) + "\n" + multiport_row(n, k, seed, r, valid) + "\n\n" +
                          kPhaseHeader + "\n" + phase_rows(n, k, seed, r);
            } else if (off_mode == "broadcast") {
                Rng rng = Rng::derive(seed, "algorithm2");
                const auto r = algorithm2(graphs, init, rng);
                schedule = r.schedule;
                const bool valid = validate_schedule(schedule, graphs, init, Goal::all_nodes()).ok();
                summary = std::string(kBroadcastHeader) + "\n" + broadcast_row(n, k, seed, r, valid) + "\n";
            } else {
                const auto d = algorithm3_derandomize(graphs, n, k);
                Rng rng = Rng::derive(seed, "algorithm2");
                Algorithm2Options opt;
                opt.preselected = d.S;
                opt.gather_slots = d.q;
                const auto r = algorithm2(graphs, init, rng, opt);
                schedule = r.schedule;
                int covered = 0;
                for (TokenId t = 0; t < k; ++t)
                    for (NodeId u = 0; u < n; ++u)
                        covered += broadcast_distance(graphs, d.flood_start + t * d.window, d.window, d.S, u)
                                       .has_value();
                const bool valid = validate_schedule(schedule, graphs, init, Goal::all_nodes()).ok();
                summary = std::string(kDerandomizeHeader) + "\n" +
                          join({std::to_string(n), std::to_string(k), std::to_string(seed), std::to_string(d.q),
                                std::to_string(d.S.size()), d.root.str(), fmt_double(static_cast<double>(d.root), 9),
                                std::to_string(covered), std::to_string(n * k), std::to_string(schedule.length()),
                                valid ? "1" : "0"}) +
                          "\n";
            }
            if (!off_out.empty()) {
                std::ofstream f(off_out, std::ios::binary);
                if (!f) throw std::runtime_error("cannot write " + off_out);
                write_schedule(f, schedule);
            }
            std::cout << summary;
            if (off_validate) {
                const auto v = validate_schedule(schedule, graphs, init, Goal::all_nodes());
                if (!v.ok()) {
                    std::cerr << "schedule invalid (" << to_string(v.violation) << "): " << v.message << '\n';
                    return 2;
                }
                std::cerr << "schedule valid\n";
            }
            return 0;
        }

        if (*samp) {
            const auto gen = sampling::parse_generator(s_gen);
            TokenSet a(static_cast<std::size_t>(s_k)), b(static_cast<std::size_t>(s_k));
            for (int v : parse_ids(s_a, s_k)) a.set(v);
            for (int v : parse_ids(s_b, s_k)) b.set(v);
            (void)sampling::make_params(s_k, s_eps);
            const auto st = sample_trials(a, b, s_eps, gen, s_trials, seed);
            std::cout << "element,count,frequency\n";
            for (const auto& [t, c] : st.counts)
                std::cout << t << ',' << c << ',' << fmt_double(static_cast<double>(c) / s_trials) << '\n';
            if (st.empty)
                std::cout << "empty," << st.empty << ',' << fmt_double(static_cast<double>(st.empty) / s_trials)
                          << '\n';
            std::cout << "\ntrials,mean_bits,max_bits,seed_bits,tv_distance\n"
                      << s_trials << ',' << fmt_double(st.mean_bits, 3) << ',' << st.max_bits << ',' << st.seed_bits
                      << ',' << fmt_double(st.tv_from_uniform((a ^ b).to_vector())) << '\n';
            return 0;
        }

        Settings overrides;
        if (!config_file.empty()) {
            std::ifstream f(config_file);
            if (!f) throw std::runtime_error("cannot open " + config_file);
            overrides.merge_file(f);
        }
        for (const auto& [k, v] : exp_flags) overrides.set(k, v);
        if (app.get_option("--seed")->count()) overrides.set("seed", std::to_string(seed));
        if (app.get_option("--out-dir")->count()) overrides.set("out_dir", out_dir);
        if (app.get_option("--jobs")->count()) overrides.set("jobs", std::to_string(jobs));
        const auto cfg = make_config(scenario, overrides);
        const auto out = run_experiment(cfg);
        write_artifacts(cfg, out);
        std::cout << scenario << ": " << out.runs << " runs, " << out.failures << " not completed"
                  << (cfg.timeout_expected ? " (timeouts expected)" : "") << "; artifacts in "
                  << (std::filesystem::path(cfg.out_dir) / scenario).string() << '\n';
        return out.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
