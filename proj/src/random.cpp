#include "corm/random.hpp"

#include "corm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace corm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

Philox::Philox(std::uint64_t seed, std::uint32_t chain, std::uint32_t stream)
    : seed_(seed), chain_(chain), stream_(stream) {}

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

void Philox::refill() {
    const std::array<std::uint32_t, 4> counter{static_cast<std::uint32_t>(block_index_),
                                               static_cast<std::uint32_t>(block_index_ >> 32), chain_, stream_};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    buffer_ = block(counter, key);
    ++block_index_;
    position_ = 0;
}

Philox::result_type Philox::operator()() {
    if (position_ == 4) refill();
    return buffer_[position_++];
}

namespace rand {

double uniform(Rng& rng) {
    const std::uint64_t a = rng() >> 5;
    const std::uint64_t b = rng() >> 6;
    return (static_cast<double>(a * 67108864u + b) + 0.5) / 9007199254740992.0;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform(rng); }

double normal(Rng& rng) {
    // Marsaglia polar method on our own uniforms keeps streams platform-stable.
    for (;;) {
        const double x = 2.0 * uniform(rng) - 1.0;
        const double y = 2.0 * uniform(rng) - 1.0;
        const double r = x * x + y * y;
        if (r < 1.0 && r > 0.0) return x * std::sqrt(-2.0 * std::log(r) / r);
    }
}

double exponential(Rng& rng, double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential: rate must be positive");
    return -std::log(uniform(rng)) / rate;
}

double gamma(Rng& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("gamma: shape and rate must be positive");
    if (shape < 1.0) {
        // Boost to shape + 1 and rescale in log space so tiny shapes do not underflow to zero.
        const double g = gamma(rng, shape + 1.0, 1.0);
        const double log_u = std::log(uniform(rng));
        const double value = std::exp(std::log(g) + log_u / shape) / rate;
        return std::max(value, std::numeric_limits<double>::min());
    }
    // Marsaglia and Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double beta(Rng& rng, double a, double b) {
    const double x = gamma(rng, a);
    const double y = gamma(rng, b);
    return x / (x + y);
}

std::uint64_t poisson(Rng& rng, double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson: mean must be finite and nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        // Count unit-rate arrivals before `mean`.
        std::uint64_t k = 0;
        double t = exponential(rng);
        while (t < mean) {
            ++k;
            t += exponential(rng);
        }
        return k;
    }
    // Split off a gamma-distributed arrival time (Ahrens-Dieter style recursion).
    const auto m = static_cast<std::uint64_t>(0.875 * mean);
    const double arrival = gamma(rng, static_cast<double>(m));
    if (arrival > mean) {
        // Remaining count is binomial(m - 1, mean / arrival).
        const double p = mean / arrival;
        std::uint64_t k = 0;
        for (std::uint64_t i = 0; i + 1 < m; ++i) k += uniform(rng) < p ? 1 : 0;
        return k;
    }
    return m + poisson(rng, mean - arrival);
}

std::size_t categorical(Rng& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("categorical: weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw DomainError("categorical: all weights are zero");
    const double target = uniform(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        acc += weights[i];
        if (target < acc) return i;
    }
    return last_positive;
}

std::size_t categorical_log(Rng& rng, std::span<const double> log_weights) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) {
        if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
            throw DomainError("categorical_log: invalid log weight");
        peak = std::max(peak, lw);
    }
    if (!std::isfinite(peak)) throw DomainError("categorical_log: all weights are zero");
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - peak);
    return categorical(rng, w);
}

} // namespace rand

} // namespace corm
