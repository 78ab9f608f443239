#pragma once

#include <cstdint>
#include <limits>

namespace causeway {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator, fully specified so fixtures reproduce in any
/// language:
///
///   output_k  = mix64(key + (k + 1) * 0x9E3779B97F4A7C15)   for k = 0, 1, ...
///   uniform   = (output >> 11) * 2^-53                        in [0, 1)
///   derive(seed, stream) = mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019))
///
/// Independent streams (rows, bootstrap replicates) use derived keys so work
/// can be split across threads without changing results.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
        return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL));
    }

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    constexpr double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// floor(uniform * n); n > 0.
    constexpr std::uint64_t next_below(std::uint64_t n) noexcept {
        auto v = static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
        return v < n ? v : n - 1;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    constexpr result_type operator()() noexcept { return next_u64(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace causeway
