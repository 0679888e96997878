#pragma once

#include "corm/trace.hpp"

#include <span>
#include <string>
#include <vector>

namespace corm {

/// Effective sample size by Geyer's initial monotone sequence estimator.
/// Returns NaN for a constant (degenerate) series.
double effective_sample_size(std::span<const double> x);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Shortest interval holding ceil(mass * n) of the sample points.
Interval hpd_interval(std::vector<double> sample, double mass = 0.95);
double median(std::vector<double> sample);

struct DiagnosticsReport {
    std::size_t records = 0;
    double ess_clusters = 0.0;
    double ess_phi = 0.0;
    double mean_clusters = 0.0;
    double median_phi = 0.0;
    Interval hpd_phi;
    std::vector<std::string> acceptance_names;
    std::vector<double> acceptance_rates;  // averaged over chains
};

/// ESS is summed over chains; HPD and median pool the chains.
DiagnosticsReport diagnose(const Trace& trace);
std::string format_report(const DiagnosticsReport& report);

} // namespace corm
