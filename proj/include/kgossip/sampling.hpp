#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "rng.hpp"
#include "token_set.hpp"

namespace kgossip::sampling {

/// Parameters of the symmetric-difference sampler for universe size k and
/// statistical-distance budget eps.
struct SamplingParams {
    int k = 0;
    double eps = 0;
    /// Length of the generated sequence: ceil(k * log2(3k / eps)).
    long long d = 0;
    /// Generator error eps / (3 k d).
    double alpha = 0;
    /// Error budget handed to the least-differing-index subprotocol: eps / 3.
    double subprotocol_error = 0;
};

inline SamplingParams make_params(int k, double eps) {
    if (k < 1) throw std::invalid_argument("universe size must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
    SamplingParams p;
    p.k = k;
    p.eps = eps;
    p.d = ceil_to_ll(static_cast<double>(k) * std::log2(3.0 * k / eps));
    p.alpha = eps / (3.0 * k * static_cast<double>(p.d));
    p.subprotocol_error = eps / 3.0;
    return p;
}

enum class Direction { alice_to_bob, bob_to_alice };

/// Bit-level record of a two-party exchange.
struct Transcript {
    struct Message {
        Direction direction;
        long long bits;
    };
    long long bits_alice_to_bob = 0;
    long long bits_bob_to_alice = 0;
    std::vector<Message> messages;

    void send(Direction d, long long bits) {
        (d == Direction::alice_to_bob ? bits_alice_to_bob : bits_bob_to_alice) += bits;
        messages.push_back({d, bits});
    }
    long long total() const { return bits_alice_to_bob + bits_bob_to_alice; }
};

// Sequence generators.

struct GeneratorSpec {
    enum class Kind { true_random, keyed_prf } kind = Kind::true_random;
    /// Seed length for keyed_prf; 0 selects the default 4 * ceil(log2(k d / alpha)).
    int seed_bits = 0;
};

/// `true-random`, `prf`, or `prf:<seedbits>`.
inline GeneratorSpec parse_generator(const std::string& s) {
    if (s == "true-random") return {};
    if (s == "prf") return {GeneratorSpec::Kind::keyed_prf, 0};
    if (s.rfind("prf:", 0) == 0) {
        int bits = 0;
        try {
            std::size_t used = 0;
            bits = std::stoi(s.substr(4), &used);
            if (used != s.size() - 4) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::invalid_argument("bad seed length in '" + s + "'");
        }
        if (bits < 1) throw std::invalid_argument("seed length must be positive");
        return {GeneratorSpec::Kind::keyed_prf, bits};
    }
    throw std::invalid_argument("unknown generator '" + s + "'");
}

inline int default_seed_bits(const SamplingParams& p) {
    const double v = static_cast<double>(p.k) * static_cast<double>(p.d) / p.alpha;
    return 4 * static_cast<int>(ceil_to_ll(std::log2(v)));
}

/// Bits Alice sends to let Bob reconstruct the sequence.
inline long long seed_cost_bits(const GeneratorSpec& g, const SamplingParams& p) {
    if (g.kind == GeneratorSpec::Kind::true_random)
        return p.d * std::max(1, ceil_log2(static_cast<std::uint64_t>(p.k)));
    return g.seed_bits > 0 ? g.seed_bits : default_seed_bits(p);
}

/// Length-d sequence over [0,k).
struct SequenceSample {
    std::vector<int> entries;
};

/// Draws a seed with `rng` and expands it. The true-random generator is its
/// own seed; the keyed stand-in expands a `seed_bits`-bit seed through a
/// keyed hash, so only 2^seed_bits distinct sequences are reachable.
inline SequenceSample generate_sequence(const GeneratorSpec& g, const SamplingParams& p, Rng& rng) {
    SequenceSample x;
    x.entries.resize(static_cast<std::size_t>(p.d));
    if (g.kind == GeneratorSpec::Kind::true_random) {
        for (auto& e : x.entries) e = rng.uniform_int(p.k);
        return x;
    }
    const int bits = g.seed_bits > 0 ? g.seed_bits : default_seed_bits(p);
    std::uint64_t key = 0x243f6a8885a308d3ULL;
    for (int done = 0; done < bits; done += 64) {
        std::uint64_t w = rng.next();
        if (bits - done < 64) w &= (std::uint64_t{1} << (bits - done)) - 1;
        key = mix64(key ^ w) + static_cast<std::uint64_t>(done);
    }
    Rng expand(key);
    for (auto& e : x.entries) e = expand.uniform_int(p.k);
    return x;
}

/// sigma(i) = i-th distinct value in first-appearance order; values never
/// seen follow in increasing order.
struct Permutation {
    std::vector<int> forward;

    int operator()(int i) const { return forward[static_cast<std::size_t>(i)]; }
    bool is_bijection() const {
        std::vector<char> seen(forward.size(), 0);
        for (int v : forward) {
            if (v < 0 || static_cast<std::size_t>(v) >= forward.size() || seen[static_cast<std::size_t>(v)])
                return false;
            seen[static_cast<std::size_t>(v)] = 1;
        }
        return true;
    }
};

inline Permutation permutation_from_sequence(const SequenceSample& x, int k) {
    Permutation s;
    s.forward.reserve(static_cast<std::size_t>(k));
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (int e : x.entries) {
        if (e < 0 || e >= k) throw std::out_of_range("sequence entry outside [0,k)");
        if (!seen[static_cast<std::size_t>(e)]) {
            seen[static_cast<std::size_t>(e)] = 1;
            s.forward.push_back(e);
        }
    }
    for (int v = 0; v < k; ++v)
        if (!seen[static_cast<std::size_t>(v)]) s.forward.push_back(v);
    return s;
}

/// Probability that a fixed j in D precedes every other element of D in a
/// uniform length-d sequence over [k]: (1/|D|)(1 - (1 - |D|/k)^d).
inline double first_appearance_probability(int k, long long d, int target_set_size) {
    if (target_set_size < 1 || target_set_size > k)
        throw std::invalid_argument("target set size must lie in [1,k]");
    if (d < 0) throw std::invalid_argument("sequence length must be non-negative");
    const double ds = target_set_size;
    return (1.0 / ds) * (1.0 - std::pow(1.0 - ds / k, static_cast<double>(d)));
}

/// Bits charged per equality test: one parity per repetition plus a one-bit reply.
inline constexpr int kFingerprintRepetitions = 7;

/// Random-subset parity test on x[lo, hi) vs y[lo, hi). Alice sends one
/// parity bit per repetition; Bob answers with one verdict bit. Equal
/// segments always pass; unequal ones pass with probability 2^-repetitions.
inline bool segment_equal(const TokenSet& x, const TokenSet& y, std::size_t lo, std::size_t hi,
                          int repetitions, Rng& shared, Transcript* t) {
    bool equal = true;
    if (lo < hi) {
        const std::size_t first_word = lo / 64, last_word = (hi - 1) / 64;
        for (int rep = 0; rep < repetitions; ++rep) {
            int px = 0, py = 0;
            for (std::size_t w = first_word; w <= last_word; ++w) {
                std::uint64_t range = ~std::uint64_t{0};
                if (w == first_word) range &= ~std::uint64_t{0} << (lo % 64);
                if (w == last_word && hi % 64) range &= (std::uint64_t{1} << (hi % 64)) - 1;
                const std::uint64_t mask = shared.next() & range;
                px ^= std::popcount(x.word(w) & mask) & 1;
                py ^= std::popcount(y.word(w) & mask) & 1;
            }
            if (px != py) equal = false;
        }
    }
    if (t) {
        t->send(Direction::alice_to_bob, repetitions);
        t->send(Direction::bob_to_alice, 1);
    }
    return equal;
}

/// Whole-string equality with the default repetition count.
inline bool fingerprint_equal(const TokenSet& x, const TokenSet& y, Rng& shared,
                              Transcript* t = nullptr, int repetitions = kFingerprintRepetitions) {
    if (x.width() != y.width()) throw std::invalid_argument("fingerprint inputs differ in length");
    return segment_equal(x, y, 0, x.width(), repetitions, shared, t);
}

struct LeastDiffResult {
    /// Least differing index, or nullopt for the equal verdict.
    std::optional<std::size_t> index;
    int search_iterations = 0;
    /// Set when every search iteration failed verification and Alice sent
    /// her whole string.
    bool used_fallback = false;
};

inline int amplified_repetitions(double error) {
    return static_cast<int>(ceil_to_ll(std::log2(1.0 / error))) + 7;
}

/// Least index where x and y differ, with error at most `error`.
///
/// A full-string amplified fingerprint decides equality first. Otherwise a
/// binary search over segments runs with 7-parity tests; the candidate is
/// accepted only if Alice's bit there differs from Bob's and the prefix before
/// it passes an amplified fingerprint. Failed candidates restart the search
/// with fresh shared randomness; after enough failures to push their joint
/// probability under error/2 Alice sends x outright.
inline LeastDiffResult least_diff_index(const TokenSet& x, const TokenSet& y, double error,
                                        Rng& shared, Transcript& t) {
    if (x.width() != y.width()) throw std::invalid_argument("inputs differ in length");
    if (!(error > 0.0 && error < 1.0)) throw std::invalid_argument("error must lie in (0,1)");
    const std::size_t k = x.width();
    LeastDiffResult out;
    const int amplified = amplified_repetitions(error);
    if (k == 0 || segment_equal(x, y, 0, k, amplified, shared, &t)) return out;

    const int steps = std::max(1, ceil_log2(k));
    const double step_pass = std::pow(1.0 - std::ldexp(1.0, -kFingerprintRepetitions), steps);
    const double iteration_fail = 1.0 - step_pass;
    const int max_iterations =
        std::max(1, static_cast<int>(ceil_to_ll(std::log(error / 2.0) / std::log(iteration_fail))));

    for (int it = 0; it < max_iterations; ++it) {
        ++out.search_iterations;
        std::size_t lo = 0, hi = k;
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (segment_equal(x, y, lo, mid, kFingerprintRepetitions, shared, &t)) lo = mid;
            else hi = mid;
        }
        const std::size_t i = lo;
        t.send(Direction::alice_to_bob, 1);  // x_i
        t.send(Direction::bob_to_alice, 1);  // differs?
        if (x.test(static_cast<TokenId>(i)) == y.test(static_cast<TokenId>(i))) continue;
        if (i == 0 || segment_equal(x, y, 0, i, amplified, shared, &t)) {
            out.index = i;
            return out;
        }
    }
    out.used_fallback = true;
    t.send(Direction::alice_to_bob, static_cast<long long>(k));
    t.send(Direction::bob_to_alice, std::max(1, ceil_log2(k)));
    for (std::size_t i = 0; i < k; ++i)
        if (x.test(static_cast<TokenId>(i)) != y.test(static_cast<TokenId>(i))) {
            out.index = i;
            break;
        }
    return out;
}

struct SampleOutcome {
    /// Sampled element of a XOR b, or nullopt for the empty verdict.
    std::optional<TokenId> element;
    Transcript transcript;
    long long seed_bits = 0;
};

/// Two-party sampler: Alice draws and sends a generator seed, both sides
/// build sigma from the expanded sequence and permute their characteristic
/// vectors, then the least differing position i* is located with error
/// eps/3 and sigma(i*) is the output.
inline SampleOutcome sample_symdiff(const TokenSet& a, const TokenSet& b, double eps,
                                    const GeneratorSpec& gen, Rng& rng) {
    if (a.width() != b.width()) throw std::invalid_argument("sets differ in universe size");
    const int k = static_cast<int>(a.width());
    const SamplingParams params = make_params(k, eps);
    SampleOutcome out;
    out.seed_bits = seed_cost_bits(gen, params);
    out.transcript.send(Direction::alice_to_bob, out.seed_bits);
    Rng alice = rng.split("seed");
    const auto x = generate_sequence(gen, params, alice);
    const auto sigma = permutation_from_sequence(x, k);

    TokenSet pa(static_cast<std::size_t>(k)), pb(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        if (a.test(sigma(i))) pa.set(i);
        if (b.test(sigma(i))) pb.set(i);
    }
    Rng shared = rng.split("shared");
    const auto r = least_diff_index(pa, pb, params.subprotocol_error, shared, out.transcript);
    if (r.index) out.element = sigma(static_cast<int>(*r.index));
    return out;
}

}  // namespace kgossip::sampling
