#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace corm {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// block index plus (chain, stream) words, so every (seed, chain, stream)
/// triple owns an independent, reproducible sequence.
class Philox {
public:
    using result_type = std::uint32_t;

    Philox(std::uint64_t seed = 0, std::uint32_t chain = 0, std::uint32_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

    std::uint64_t seed() const { return seed_; }
    std::uint32_t chain() const { return chain_; }
    std::uint32_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint32_t chain_;
    std::uint32_t stream_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int position_ = 4;
};

using Rng = Philox;

namespace rand {

/// Uniform on the open interval (0, 1) with 53 random bits.
double uniform(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
double normal(Rng& rng);
double exponential(Rng& rng, double rate = 1.0);
/// Gamma with the given shape and *rate*.
double gamma(Rng& rng, double shape, double rate = 1.0);
double beta(Rng& rng, double a, double b);
std::uint64_t poisson(Rng& rng, double mean);
/// Inverse-CDF draw from unnormalized nonnegative weights.
std::size_t categorical(Rng& rng, std::span<const double> weights);
/// Same, but weights given on the log scale.
std::size_t categorical_log(Rng& rng, std::span<const double> log_weights);

} // namespace rand

} // namespace corm
