#include "corm/diagnostics.hpp"

#include "corm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace corm {

double effective_sample_size(std::span<const double> x) {
    const std::size_t n = x.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (n < 4) return nan;
    double mean = 0.0;
    for (double t : x) mean += t;
    mean /= static_cast<double>(n);
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
        return s / static_cast<double>(n);
    };
    const double g0 = autocov(0);
    if (!(g0 > 1e-300 * std::max(1.0, mean * mean))) return nan;
    // Sum of the initial positive, monotone sequence of paired autocovariances.
    double variance = -g0;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
        double pair = (m == 0 ? g0 : autocov(2 * m)) + autocov(2 * m + 1);
        if (!(pair > 0.0)) break;
        pair = std::min(pair, previous);
        previous = pair;
        variance += 2.0 * pair;
    }
    return static_cast<double>(n) * g0 / variance;
}

Interval hpd_interval(std::vector<double> sample, double mass) {
    if (sample.empty()) throw DomainError("hpd_interval: empty sample");
    if (!(mass > 0.0 && mass <= 1.0)) throw DomainError("hpd_interval: mass must lie in (0, 1]");
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n))));
    Interval best{sample.front(), sample.back()};
    for (std::size_t i = 0; i + k <= n; ++i)
        if (sample[i + k - 1] - sample[i] < best.hi - best.lo) best = {sample[i], sample[i + k - 1]};
    return best;
}

double median(std::vector<double> sample) {
    if (sample.empty()) throw DomainError("median: empty sample");
    const std::size_t h = sample.size() / 2;
    std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(h), sample.end());
    const double upper = sample[h];
    if (sample.size() % 2) return upper;
    const double lower = *std::max_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lower + upper);
}

DiagnosticsReport diagnose(const Trace& trace) {
    if (trace.records.empty()) throw DomainError("diagnostics: trace has no records");
    DiagnosticsReport r;
    r.records = trace.records.size();
    std::vector<double> all_phi;
    double ess_k = 0.0, ess_phi = 0.0, sum_k = 0.0;
    bool any_k = false, any_phi = false;
    for (std::size_t c = 0; c < trace.chains; ++c) {
        std::vector<double> ks, phis;
        for (const TraceRecord* rec : trace.chain_records(c)) {
            ks.push_back(static_cast<double>(rec->summary.clusters));
            phis.push_back(rec->summary.phi);
            sum_k += ks.back();
        }
        all_phi.insert(all_phi.end(), phis.begin(), phis.end());
        if (const double e = effective_sample_size(ks); std::isfinite(e)) {
            ess_k += e;
            any_k = true;
        }
        if (const double e = effective_sample_size(phis); std::isfinite(e)) {
            ess_phi += e;
            any_phi = true;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.ess_clusters = any_k ? ess_k : nan;
    r.ess_phi = any_phi ? ess_phi : nan;
    r.mean_clusters = sum_k / static_cast<double>(r.records);
    r.median_phi = median(all_phi);
    r.hpd_phi = hpd_interval(all_phi, 0.95);
    for (const auto& f : trace.footers)
        for (std::size_t i = 0; i < f.acceptance.names.size(); ++i) {
            const auto it = std::find(r.acceptance_names.begin(), r.acceptance_names.end(), f.acceptance.names[i]);
            if (it == r.acceptance_names.end()) {
                r.acceptance_names.push_back(f.acceptance.names[i]);
                r.acceptance_rates.push_back(f.acceptance.rates[i] / static_cast<double>(trace.footers.size()));
            } else {
                r.acceptance_rates[static_cast<std::size_t>(it - r.acceptance_names.begin())] +=
                    f.acceptance.rates[i] / static_cast<double>(trace.footers.size());
            }
        }
    return r;
}

std::string format_report(const DiagnosticsReport& r) {
    std::ostringstream out;
    auto ess = [](double e) {
        if (std::isnan(e)) return std::string("degenerate (constant series)");
        std::ostringstream s;
        s.precision(1);
        s << std::fixed << e;
        return s.str();
    };
    out << "records            " << r.records << '\n';
    out << "mean K             " << r.mean_clusters << '\n';
    out << "ESS(K)             " << ess(r.ess_clusters) << '\n';
    out << "ESS(phi)           " << ess(r.ess_phi) << '\n';
    out << "median phi         " << r.median_phi << '\n';
    out << "95% HPD phi        [" << r.hpd_phi.lo << ", " << r.hpd_phi.hi << "]\n";
    for (std::size_t i = 0; i < r.acceptance_names.size(); ++i) {
        std::string name = "acceptance " + r.acceptance_names[i];
        name.resize(std::max<std::size_t>(name.size() + 1, 19), ' ');
        out << name << r.acceptance_rates[i] << '\n';
    }
    return out.str();
}

} // namespace corm
