#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace kgossip {

using NodeId = int;
using TokenId = int;

/// Fixed-width set of token ids backed by 64-bit words (up to 256 ids inline).
///
/// All binary operations require both operands to have the same width; a
/// width mismatch is a programming error and throws std::invalid_argument.
class TokenSet {
public:
    TokenSet() = default;
    explicit TokenSet(std::size_t width)
        : width_(width), words_((width + 63) / 64, 0) {}

    static TokenSet full(std::size_t width) {
        TokenSet s(width);
        for (auto& w : s.words_) w = ~std::uint64_t{0};
        s.trim();
        return s;
    }

    std::size_t width() const { return width_; }
    std::size_t word_count() const { return words_.size(); }
    std::uint64_t word(std::size_t i) const { return words_[i]; }

    bool test(TokenId t) const {
        check_index(t);
        return (words_[t >> 6] >> (t & 63)) & 1U;
    }
    void set(TokenId t) {
        check_index(t);
        words_[t >> 6] |= std::uint64_t{1} << (t & 63);
    }
    void reset(TokenId t) {
        check_index(t);
        words_[t >> 6] &= ~(std::uint64_t{1} << (t & 63));
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    bool empty() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }
    bool full() const { return count() == width_; }

    bool is_subset_of(const TokenSet& o) const {
        check_width(o);
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }

    TokenSet& operator|=(const TokenSet& o) {
        check_width(o);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    TokenSet& operator&=(const TokenSet& o) {
        check_width(o);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    TokenSet& operator^=(const TokenSet& o) {
        check_width(o);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
        return *this;
    }
    /// Set difference: removes every element of `o`.
    TokenSet& operator-=(const TokenSet& o) {
        check_width(o);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
        return *this;
    }

    friend TokenSet operator|(TokenSet a, const TokenSet& b) { return a |= b; }
    friend TokenSet operator&(TokenSet a, const TokenSet& b) { return a &= b; }
    friend TokenSet operator^(TokenSet a, const TokenSet& b) { return a ^= b; }
    friend TokenSet operator-(TokenSet a, const TokenSet& b) { return a -= b; }
    friend bool operator==(const TokenSet& a, const TokenSet& b) {
        return a.width_ == b.width_ && std::equal(a.words_.begin(), a.words_.end(), b.words_.begin());
    }
    friend std::strong_ordering operator<=>(const TokenSet& a, const TokenSet& b) {
        if (auto c = a.width_ <=> b.width_; c != 0) return c;
        return std::lexicographical_compare_three_way(a.words_.begin(), a.words_.end(), b.words_.begin(),
                                                      b.words_.end());
    }

    /// Size of the symmetric difference without materializing it.
    std::size_t xor_count(const TokenSet& o) const {
        check_width(o);
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            c += static_cast<std::size_t>(std::popcount(words_[i] ^ o.words_[i]));
        return c;
    }

    /// Smallest element, if any.
    std::optional<TokenId> first() const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i])
                return static_cast<TokenId>(i * 64 + std::countr_zero(words_[i]));
        return std::nullopt;
    }

    /// The `rank`-th smallest element (0-based). Requires rank < count().
    TokenId nth(std::size_t rank) const {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            auto w = words_[i];
            auto pc = static_cast<std::size_t>(std::popcount(w));
            if (rank < pc) {
                for (std::size_t r = 0; r < rank; ++r) w &= w - 1;
                return static_cast<TokenId>(i * 64 + std::countr_zero(w));
            }
            rank -= pc;
        }
        throw std::out_of_range("TokenSet::nth: rank exceeds cardinality");
    }

    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            auto w = words_[i];
            while (w) {
                f(static_cast<TokenId>(i * 64 + std::countr_zero(w)));
                w &= w - 1;
            }
        }
    }

    std::vector<TokenId> to_vector() const {
        std::vector<TokenId> out;
        out.reserve(count());
        for_each([&](TokenId t) { out.push_back(t); });
        return out;
    }

    std::size_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ width_;
        for (auto w : words_) {
            h ^= w;
            h *= 0x100000001b3ULL;
            h ^= h >> 29;
        }
        return static_cast<std::size_t>(h);
    }

    std::string to_string() const {
        std::string s = "{";
        bool first_elem = true;
        for_each([&](TokenId t) {
            if (!first_elem) s += ',';
            s += std::to_string(t);
            first_elem = false;
        });
        return s + "}";
    }

private:
    void check_index(TokenId t) const {
        if (t < 0 || static_cast<std::size_t>(t) >= width_) [[unlikely]]
            index_error(t);
    }
    [[noreturn, gnu::cold, gnu::noinline]] void index_error(TokenId t) const {
        throw std::out_of_range("token id " + std::to_string(t) + " outside [0," +
                                std::to_string(width_) + ")");
    }
    void check_width(const TokenSet& o) const {
        if (o.width_ != width_)
            throw std::invalid_argument("TokenSet width mismatch");
    }
    void trim() {
        if (width_ % 64 && !words_.empty())
            words_.back() &= (std::uint64_t{1} << (width_ % 64)) - 1;
    }

    std::size_t width_ = 0;
    boost::container::small_vector<std::uint64_t, 4> words_;
};

struct TokenSetHash {
    std::size_t operator()(const TokenSet& s) const { return s.hash(); }
};

}  // namespace kgossip
