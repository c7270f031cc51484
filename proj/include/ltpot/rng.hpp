#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace ltpot {

namespace detail {
    constexpr std::uint64_t Fnv1a(std::string_view text)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : text) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    constexpr std::uint64_t SplitMix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31U);
    }
} // namespace detail

// A labeled random stream. Identical (seed, label) pairs give identical draw
// sequences; substreams are derived from the parent's identity, not from its
// current position, so they can be handed out before a parallel fan-out.
//
// All derived draws (bounded integers, reals, normals, shuffles) are computed
// here rather than through <random> distributions so sequences are identical
// across standard library implementations.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::string_view label)
        : key_(detail::SplitMix64(seed ^ detail::SplitMix64(detail::Fnv1a(label))))
        , engine_(key_)
    {
    }

    [[nodiscard]] RngStream Substream(std::string_view label) const
    {
        return RngStream(key_, label, 0);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return engine_(); }

    // Uniform integer in [0, n). n must be positive.
    std::size_t Index(std::size_t n)
    {
        auto const bound = static_cast<std::uint64_t>(n);
        std::uint64_t const threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t const r = engine_();
            if (r >= threshold) { return static_cast<std::size_t>(r % bound); }
        }
    }

    // Uniform real in [0, 1).
    double Uniform()
    {
        return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
    }

    double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

    bool Bernoulli(double p) { return Uniform() < p; }

    double Normal()
    {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = 0.0;
        do { u1 = Uniform(); } while (u1 <= 0.0);
        double const u2 = Uniform();
        double const r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void Shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = Index(i);
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    RngStream(std::uint64_t parentKey, std::string_view label, int /*derived*/)
        : key_(detail::SplitMix64(parentKey + 0x632be59bd9b4e019ULL * detail::Fnv1a(label)))
        , engine_(key_)
    {
    }

    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

} // namespace ltpot
