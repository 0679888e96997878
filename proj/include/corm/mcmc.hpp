#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace corm {

/// Random-walk scale on the log scale, adapted by Robbins-Monro toward a
/// target acceptance rate with gain (iteration + 1)^-0.6 until frozen.
struct AdaptiveStep {
    double log_step = std::log(0.5);
    double target = 0.44;
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    bool frozen = false;

    double step() const { return std::exp(log_step); }
    void record(bool accept) {
        ++proposals;
        if (accept) ++accepted;
        if (!frozen) log_step += ((accept ? 1.0 : 0.0) - target) * std::pow(static_cast<double>(proposals), -0.6);
    }
    double acceptance_rate() const {
        return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals)
                         : std::numeric_limits<double>::quiet_NaN();
    }
};

/// Prior on the score shape: either held fixed or exponential with a rate.
struct PhiPrior {
    enum class Kind { Fixed, Exponential };
    Kind kind = Kind::Exponential;
    double rate = 1.0;

    static PhiPrior fixed() { return {Kind::Fixed, 0.0}; }
    static PhiPrior exponential(double rate = 1.0) { return {Kind::Exponential, rate}; }
    bool is_fixed() const { return kind == Kind::Fixed; }
    double log_density(double phi) const {
        if (!(phi > 0.0)) return -std::numeric_limits<double>::infinity();
        return std::log(rate) - rate * phi;
    }
};

/// Per-sweep scalar summaries shared by both samplers.
struct SweepSummary {
    std::size_t clusters = 0;
    double phi = 0.0;
    std::vector<double> v;
    double log_residual_mass = 0.0;
    std::vector<double> deviance;
};

/// Named acceptance rates of the adaptive targets.
struct AcceptanceReport {
    std::vector<std::string> names;
    std::vector<double> rates;
};

} // namespace corm
