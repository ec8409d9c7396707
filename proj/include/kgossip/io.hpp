#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "graph.hpp"
#include "schedule.hpp"

namespace kgossip {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace detail {

// Line reader that skips blank lines and '#' comments, tracking line numbers.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& out, bool keep_blank = false) {
        while (std::getline(in_, out)) {
            ++line_;
            if (auto hash = out.find('#'); hash != std::string::npos) out.erase(hash);
            if (!keep_blank && out.find_first_not_of(" \t\r") == std::string::npos) continue;
            return true;
        }
        return false;
    }
    std::string require(const char* what, bool keep_blank = false) {
        std::string l;
        if (!next(l, keep_blank)) throw ParseError(std::string("unexpected end of input, expected ") + what, line_ + 1);
        return l;
    }
    int line() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

template <typename... T>
void read_fields(const std::string& line, int lineno, const char* what, T&... out) {
    std::istringstream ss(line);
    if (!((ss >> out) && ...)) throw ParseError(std::string("malformed ") + what, lineno);
    std::string extra;
    if (ss >> extra) throw ParseError(std::string("trailing data in ") + what, lineno);
}

/// Reads the next line and parses it; errors carry that line's number.
template <typename... T>
void read_record(LineReader& rd, const char* expected, const char* what, T&... out) {
    const std::string line = rd.require(expected);
    read_fields(line, rd.line(), what, out...);
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return f;
}

}  // namespace detail

// Graph-sequence file:
//   n L
//   round r m      (L blocks)
//   u v            (m lines per block, 0-based)
inline GraphSequence read_graph_sequence(std::istream& in) {
    detail::LineReader rd(in);
    int n = 0, rounds = 0;
    detail::read_record(rd, "header", "header 'n L'", n, rounds);
    if (n < 1 || rounds < 0) throw ParseError("invalid header values", rd.line());
    GraphSequence seq(n);
    for (int r = 1; r <= rounds; ++r) {
        std::string tag;
        int idx = 0, m = 0;
        detail::read_record(rd, "round header", "round header 'round r m'", tag,
                            idx, m);
        if (tag != "round") throw ParseError("expected 'round'", rd.line());
        if (idx != r) throw ParseError("rounds must be numbered consecutively from 1", rd.line());
        if (m < 0) throw ParseError("negative edge count", rd.line());
        std::vector<Edge> edges;
        edges.reserve(static_cast<std::size_t>(m));
        for (int e = 0; e < m; ++e) {
            int u = 0, v = 0;
            detail::read_record(rd, "edge", "edge 'u v'", u, v);
            edges.emplace_back(u, v);
        }
        try {
            seq.push_back(RoundGraph(n, std::move(edges)));
        } catch (const GraphError& e) {
            throw ParseError(std::string("round ") + std::to_string(r) + ": " + e.what(), rd.line());
        }
    }
    return seq;
}

inline void write_graph_sequence(std::ostream& out, const GraphSequence& seq) {
    out << seq.n() << ' ' << seq.length() << '\n';
    for (std::size_t r = 0; r < seq.length(); ++r) {
        const auto& g = seq.rounds()[r];
        out << "round " << r + 1 << ' ' << g.edge_count() << '\n';
        for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
    }
}

// Distribution file:
//   n k
//   <space-separated token ids>   (n lines, possibly empty)
inline TokenDistribution read_distribution(std::istream& in) {
    detail::LineReader rd(in);
    int n = 0, k = 0;
    detail::read_record(rd, "header", "header 'n k'", n, k);
    if (n < 1 || k < 0) throw ParseError("invalid header values", rd.line());
    TokenDistribution d(n, k);
    for (int v = 0; v < n; ++v) {
        std::string line;
        if (!rd.next(line, true)) {
            // Trailing empty nodes may be omitted.
            break;
        }
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            std::size_t used = 0;
            int t = 0;
            try {
                t = std::stoi(tok, &used);
            } catch (const std::exception&) {
                throw ParseError("bad token id '" + tok + "'", rd.line());
            }
            if (used != tok.size() || t < 0 || t >= k)
                throw ParseError("token id '" + tok + "' out of range", rd.line());
            d.at(v).set(t);
        }
    }
    return d;
}

inline void write_distribution(std::ostream& out, const TokenDistribution& d) {
    out << d.n << ' ' << d.k << '\n';
    for (const auto& s : d.holdings) {
        bool first = true;
        s.for_each([&](TokenId t) {
            if (!first) out << ' ';
            out << t;
            first = false;
        });
        out << '\n';
    }
}

// Schedule file:
//   mode multiport|broadcast
//   r u v t
inline Schedule read_schedule(std::istream& in) {
    detail::LineReader rd(in);
    std::string tag, mode;
    detail::read_record(rd, "mode header", "header 'mode <m>'", tag, mode);
    if (tag != "mode") throw ParseError("expected 'mode'", rd.line());
    Schedule s;
    if (mode == "multiport") s.mode = ScheduleMode::multiport;
    else if (mode == "broadcast") s.mode = ScheduleMode::broadcast;
    else throw ParseError("unknown mode '" + mode + "'", rd.line());
    std::string line;
    while (rd.next(line)) {
        Transfer t;
        detail::read_fields(line, rd.line(), "transfer 'r u v t'", t.round, t.from, t.to, t.token);
        s.transfers.push_back(t);
    }
    return s;
}

inline void write_schedule(std::ostream& out, const Schedule& s) {
    out << "mode " << to_string(s.mode) << '\n';
    for (const auto& t : s.transfers)
        out << t.round << ' ' << t.from << ' ' << t.to << ' ' << t.token << '\n';
}

inline GraphSequence load_graph_sequence(const std::string& path) {
    auto f = detail::open_input(path);
    return read_graph_sequence(f);
}
inline TokenDistribution load_distribution(const std::string& path) {
    auto f = detail::open_input(path);
    return read_distribution(f);
}
inline Schedule load_schedule(const std::string& path) {
    auto f = detail::open_input(path);
    return read_schedule(f);
}

}  // namespace kgossip
