#pragma once

#include "ctqw/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctqw {

enum class SequenceKind { Periodic, Fibonacci, ThueMorse, RudinShapiro, Random };

/// Short protocol tags used on the command line and in CSV output.
inline std::string_view to_tag(SequenceKind kind)
{
    switch (kind) {
    case SequenceKind::Periodic: return "pe";
    case SequenceKind::Fibonacci: return "fb";
    case SequenceKind::ThueMorse: return "tm";
    case SequenceKind::RudinShapiro: return "rs";
    case SequenceKind::Random: return "rd";
    }
    return "?";
}

inline SequenceKind kind_from_tag(std::string_view tag)
{
    if (tag == "pe") return SequenceKind::Periodic;
    if (tag == "fb") return SequenceKind::Fibonacci;
    if (tag == "tm") return SequenceKind::ThueMorse;
    if (tag == "rs") return SequenceKind::RudinShapiro;
    if (tag == "rd") return SequenceKind::Random;
    throw std::invalid_argument("unknown sequence kind '" + std::string(tag) + "' (expected pe, fb, tm, rs or rd)");
}

/// Name of the pseudo-random engine behind SequenceKind::Random. Recorded in run manifests.
inline constexpr std::string_view random_generator_name =
    "std::mt19937_64 seeded with the raw seed; symbol = top bit of each 64-bit draw";

/**
 * Immutable 0/1 control word together with how it was produced.
 *
 * Random words carry their seed so they can be regenerated; deterministic
 * words never do.
 */
class BinarySequence {
public:
    BinarySequence(std::vector<std::uint8_t> symbols, SequenceKind kind, std::optional<std::uint64_t> seed = {})
        : symbols_(std::move(symbols))
        , kind_(kind)
        , seed_(seed)
    {
        if (symbols_.empty()) {
            throw std::invalid_argument("binary sequence must hold at least one symbol");
        }
        for (auto s : symbols_) {
            if (s > 1) {
                throw std::invalid_argument("binary sequence symbols must be 0 or 1");
            }
        }
        if ((kind_ == SequenceKind::Random) != seed_.has_value()) {
            throw std::invalid_argument("only random sequences carry a seed, and they must");
        }
    }

    std::span<const std::uint8_t> symbols() const { return symbols_; }
    std::size_t size() const { return symbols_.size(); }
    std::uint8_t operator[](std::size_t i) const { return symbols_[i]; }
    SequenceKind kind() const { return kind_; }
    std::optional<std::uint64_t> seed() const { return seed_; }

    std::string to_string() const
    {
        std::string out;
        out.reserve(symbols_.size());
        for (auto s : symbols_) out.push_back(s ? '1' : '0');
        return out;
    }

    friend bool operator==(const BinarySequence&, const BinarySequence&) = default;

private:
    std::vector<std::uint8_t> symbols_;
    SequenceKind kind_;
    std::optional<std::uint64_t> seed_;
};

namespace detail {

    // Rewrites the whole word until it is at least min_length long. Letters are
    // small integers; rules[letter] is the replacement word.
    template <std::size_t Letters>
    std::vector<std::uint8_t> iterate_substitution(const std::array<std::vector<std::uint8_t>, Letters>& rules,
                                                   std::uint8_t axiom, std::size_t min_length)
    {
        std::vector<std::uint8_t> word{axiom};
        std::vector<std::uint8_t> next;
        while (word.size() < min_length) {
            next.clear();
            for (auto letter : word) {
                const auto& image = rules[letter];
                next.insert(next.end(), image.begin(), image.end());
            }
            word.swap(next);
        }
        word.resize(min_length);
        return word;
    }

} // namespace detail

/**
 * Prefix of length min_length of the fixed point of a substitution rule.
 *
 *   Fibonacci      0 -> 01, 1 -> 0
 *   Thue-Morse     0 -> 01, 1 -> 10
 *   Rudin-Shapiro  A -> AB, B -> AC, C -> DB, D -> DC, then A,B -> 0 and C,D -> 1
 *   Periodic       alternating word starting with periodic_start (default 1)
 */
inline BinarySequence generate_substitution(SequenceKind kind, std::size_t min_length, std::uint8_t periodic_start = 1)
{
    if (min_length == 0) {
        throw std::invalid_argument("sequence length must be at least 1");
    }
    switch (kind) {
    case SequenceKind::Fibonacci: {
        const std::array<std::vector<std::uint8_t>, 2> rules{{{0, 1}, {0}}};
        return {detail::iterate_substitution(rules, 0, min_length), kind};
    }
    case SequenceKind::ThueMorse: {
        const std::array<std::vector<std::uint8_t>, 2> rules{{{0, 1}, {1, 0}}};
        return {detail::iterate_substitution(rules, 0, min_length), kind};
    }
    case SequenceKind::RudinShapiro: {
        // A=0 B=1 C=2 D=3
        const std::array<std::vector<std::uint8_t>, 4> rules{{{0, 1}, {0, 2}, {3, 1}, {3, 2}}};
        auto word = detail::iterate_substitution(rules, 0, min_length);
        for (auto& letter : word) letter = letter >= 2 ? 1 : 0;
        return {std::move(word), kind};
    }
    case SequenceKind::Periodic: {
        if (periodic_start > 1) {
            throw std::invalid_argument("periodic start symbol must be 0 or 1");
        }
        std::vector<std::uint8_t> word(min_length);
        for (std::size_t i = 0; i < min_length; ++i) {
            word[i] = static_cast<std::uint8_t>((i % 2 == 0) ? periodic_start : 1 - periodic_start);
        }
        return {std::move(word), kind};
    }
    case SequenceKind::Random:
        break;
    }
    throw std::invalid_argument("random sequences need a seed; use generate_random");
}

/// Fair-coin word; see random_generator_name for the exact construction.
inline BinarySequence generate_random(std::uint64_t seed, std::size_t length)
{
    if (length == 0) {
        throw std::invalid_argument("sequence length must be at least 1");
    }
    std::mt19937_64 engine(seed);
    std::vector<std::uint8_t> word(length);
    for (auto& s : word) s = static_cast<std::uint8_t>(engine() >> 63);
    return {std::move(word), SequenceKind::Random, seed};
}

/// Convenience dispatcher over both generators.
inline BinarySequence generate(SequenceKind kind, std::size_t length, std::uint64_t seed = 0,
                               std::uint8_t periodic_start = 1)
{
    return kind == SequenceKind::Random ? generate_random(seed, length)
                                        : generate_substitution(kind, length, periodic_start);
}

/**
 * Pearson correlation between x[0..L-1-k] and x[k..L-1].
 *
 * Uses the standard Cov / sqrt(Var_a Var_b) normalization, so the result lies in [-1, 1].
 */
inline double autocorrelation(const BinarySequence& seq, std::size_t lag)
{
    const std::size_t n = seq.size();
    if (lag < 1 || n < 3 || lag > n - 2) {
        throw std::invalid_argument("autocorrelation lag must satisfy 1 <= k <= length - 2");
    }
    const std::size_t m = n - lag;
    // Binary data: all sums are exact integers.
    std::uint64_t sum_a = 0, sum_b = 0, sum_ab = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const unsigned a = seq[i];
        const unsigned b = seq[i + lag];
        sum_a += a;
        sum_b += b;
        sum_ab += a & b;
    }
    const double count = static_cast<double>(m);
    const double mean_a = static_cast<double>(sum_a) / count;
    const double mean_b = static_cast<double>(sum_b) / count;
    // For 0/1 data, E[a^2] = E[a].
    const double var_a = mean_a - mean_a * mean_a;
    const double var_b = mean_b - mean_b * mean_b;
    if (sum_a == 0 || sum_a == m || sum_b == 0 || sum_b == m) {
        throw DegenerateSequence("autocorrelation undefined: a lagged window is constant");
    }
    const double cov = static_cast<double>(sum_ab) / count - mean_a * mean_b;
    return cov / std::sqrt(var_a * var_b);
}

/// Fraction of the L - m + 1 overlapping length-m blocks whose symbols are all equal.
inline double binary_persistence(const BinarySequence& seq, std::size_t order)
{
    const std::size_t n = seq.size();
    if (order < 1 || order > n) {
        throw std::invalid_argument("persistence order must satisfy 1 <= m <= length");
    }
    // run = length of the constant run ending at i; a block ending at i is
    // identical iff run >= m.
    std::size_t identical = 0;
    std::size_t run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        run = (i > 0 && seq[i] == seq[i - 1]) ? run + 1 : 1;
        if (i + 1 >= order && run >= order) ++identical;
    }
    return static_cast<double>(identical) / static_cast<double>(n - order + 1);
}

/// Excess of BP(m) over the fair-coin expectation 2^(1-m).
inline double relative_persistence(const BinarySequence& seq, std::size_t order)
{
    const double bp = binary_persistence(seq, order);
    return bp - std::ldexp(1.0, 1 - static_cast<int>(order));
}

struct SequenceMetrics {
    std::map<std::size_t, double> ac; ///< lag -> autocorrelation
    std::map<std::size_t, double> bp; ///< order -> binary persistence
    std::map<std::size_t, double> rp; ///< order -> relative persistence
};

inline SequenceMetrics compute_metrics(const BinarySequence& seq, std::size_t max_lag, std::size_t max_order)
{
    SequenceMetrics out;
    for (std::size_t k = 1; k <= max_lag; ++k) out.ac[k] = autocorrelation(seq, k);
    for (std::size_t m = 1; m <= max_order; ++m) {
        out.bp[m] = binary_persistence(seq, m);
        out.rp[m] = out.bp[m] - std::ldexp(1.0, 1 - static_cast<int>(m));
    }
    return out;
}

/// Seed-averaged metrics of `count` random words with seeds base_seed, base_seed+1, ...
inline SequenceMetrics random_ensemble_metrics(std::uint64_t base_seed, std::size_t count, std::size_t length,
                                               std::size_t max_lag, std::size_t max_order)
{
    if (count == 0) {
        throw std::invalid_argument("random ensemble needs at least one member");
    }
    SequenceMetrics mean;
    for (std::size_t i = 0; i < count; ++i) {
        const auto one = compute_metrics(generate_random(base_seed + i, length), max_lag, max_order);
        for (auto [k, v] : one.ac) mean.ac[k] += v;
        for (auto [m, v] : one.bp) mean.bp[m] += v;
        for (auto [m, v] : one.rp) mean.rp[m] += v;
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (auto* table : {&mean.ac, &mean.bp, &mean.rp}) {
        for (auto& [key, v] : *table) v *= inv;
    }
    return mean;
}

} // namespace ctqw
