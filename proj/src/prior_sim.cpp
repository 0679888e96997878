#include "corm/prior_sim.hpp"

#include "corm/errors.hpp"

#include <boost/math/interpolators/cubic_hermite.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace corm {

namespace {

double zero_weight(double) { return 0.0; }

} // namespace

double CoRMRealization::mass(std::size_t j, double lo, double hi) const {
    if (j >= scores.size()) throw DomainError("realization: dimension index out of range");
    double acc = 0.0;
    for (std::size_t i = 0; i < jumps.size(); ++i)
        if (locations[i] >= lo && locations[i] < hi) acc += scores[j][i] * jumps[i];
    return acc;
}

// Cubic Hermite interpolant of log x against log U(x) with exact slopes
// d log x / d log U = -U / (x nu(x)).
struct PriorSimulator::Table {
    using Interp = boost::math::interpolators::cubic_hermite<std::vector<double>>;
    std::unique_ptr<Interp> interp;
    double min_log_level = 0.0;
    double max_log_level = 0.0;
};

PriorSimulator::PriorSimulator(const CoRMSpec& spec, Truncation truncation, LocationSampler locations)
    : spec_(spec), truncation_(truncation), locations_(std::move(locations)) {
    if (!locations_) locations_ = [](Rng& rng) { return rand::uniform(rng); };
    const LevyIntensity& nu = spec_.directing();
    const double alpha = spec_.centring_mass();

    if (truncation_.kind == Truncation::Kind::ResidualMass) {
        if (!(truncation_.epsilon > 0.0 && truncation_.epsilon < 1.0))
            throw DomainError("truncation: residual fraction must lie in (0,1)");
        if (!nu.exponentially_damped() && std::isinf(nu.upper())) {
            warnings_.push_back("directing intensity has an undamped power tail; truncating at " +
                                std::to_string(truncation_.jumps) + " jumps instead of a residual mass");
            truncation_.kind = Truncation::Kind::JumpCount;
        }
    }

    if (truncation_.kind == Truncation::Kind::ResidualMass) {
        // Solve int_0^x z nu*(z) dz = eps * int min(1, z) nu*(z) dz for x below min(1, sup).
        const double knee = std::min(1.0, nu.upper());
        auto small_mass = [&](double x) {
            return nu.integrate([](double z) { return std::log(z); }, 0.0, x, 1.0, 1.0, 1e-10).value;
        };
        const double total = small_mass(knee) + (nu.upper() > 1.0 ? nu.tail_integral(1.0) : 0.0);
        const double target = truncation_.epsilon * total;
        const double log_x = numerics::bisect(
            [&](double u) { return std::log(small_mass(std::exp(u))) - std::log(target); }, std::log(knee) - 700.0,
            std::log(knee) - 1e-9, 1e-10);
        threshold_ = std::exp(log_x);
        threshold_level_ = nu.tail_integral(threshold_);
    }

    closed_inverse_ = nu.closed_form_tail();
    if (closed_inverse_) return;

    // Lowest jump the table must resolve.
    double x_low = threshold_;
    if (truncation_.kind == Truncation::Kind::JumpCount) {
        const double n = static_cast<double>(truncation_.jumps);
        x_low = nu.inverse_tail((n + 10.0 * std::sqrt(n) + 50.0) / alpha);
    }
    x_low *= 0.5;

    // Grid: geometric in x up to the knee, then geometric toward the support end.
    std::vector<double> xs;
    const double knee = std::isfinite(nu.upper()) ? 0.5 * nu.upper() : 1.0;
    const int per_decade = 48;
    const int n_low = std::max(2, static_cast<int>(std::ceil(std::log10(knee / x_low) * per_decade)));
    for (int i = 0; i < n_low; ++i) xs.push_back(x_low * std::pow(knee / x_low, static_cast<double>(i) / n_low));
    if (std::isfinite(nu.upper())) {
        const double top = nu.upper();
        const int n_high = 6 * per_decade;
        for (int i = 0; i <= n_high; ++i) xs.push_back(top - (top - knee) * std::pow(1e-6, static_cast<double>(i) / n_high));
    } else {
        for (double x = knee; x < 1e6; x *= std::pow(10.0, 1.0 / per_decade)) {
            xs.push_back(x);
            if (nu.tail_integral(x) < 1e-14) break;
        }
    }

    // Tail integrals accumulated from the top.
    std::vector<double> tails(xs.size());
    tails.back() = nu.tail_integral(xs.back());
    for (std::size_t i = xs.size() - 1; i-- > 0;)
        tails[i] = tails[i + 1] + nu.integrate(zero_weight, xs[i], xs[i + 1], 0.0, 0.0, 1e-12).value;

    // Refine where log U moves quickly so cubic Hermite stays accurate.
    constexpr double max_log_step = 0.02;
    std::vector<double> fine_x{xs.back()}, fine_tail{tails.back()};
    for (std::size_t i = xs.size() - 1; i-- > 0;) {
        const double jump = tails[i + 1] > 0.0 ? std::log(tails[i] / tails[i + 1]) : 0.0;
        const int pieces = std::isfinite(jump) ? std::max(1, static_cast<int>(std::ceil(jump / max_log_step))) : 1;
        for (int k = pieces - 1; k > 0; --k) {
            const double x = xs[i] * std::pow(xs[i + 1] / xs[i], static_cast<double>(k) / pieces);
            fine_x.push_back(x);
            fine_tail.push_back(tails[i + 1] + nu.integrate(zero_weight, x, xs[i + 1], 0.0, 0.0, 1e-12).value);
        }
        fine_x.push_back(xs[i]);
        fine_tail.push_back(tails[i]);
    }
    std::reverse(fine_x.begin(), fine_x.end());
    std::reverse(fine_tail.begin(), fine_tail.end());
    xs = std::move(fine_x);
    tails = std::move(fine_tail);

    std::vector<double> t, y, dy;
    for (std::size_t i = xs.size(); i-- > 0;) {
        if (!(tails[i] > 0.0)) continue;
        const double lt = std::log(tails[i]);
        if (!t.empty() && !(lt > t.back())) continue;
        t.push_back(lt);
        y.push_back(std::log(xs[i]));
        dy.push_back(-tails[i] / (xs[i] * nu.density(xs[i])));
    }
    auto table = std::make_shared<Table>();
    table->min_log_level = t.front();
    table->max_log_level = t.back();
    table->interp = std::make_unique<Table::Interp>(std::move(t), std::move(y), std::move(dy));
    table_ = std::move(table);
}

double PriorSimulator::inverse_tail(double level) const {
    const LevyIntensity& nu = spec_.directing();
    if (closed_inverse_) return nu.inverse_tail(level);
    const double ll = std::log(level);
    if (ll < table_->min_log_level || ll > table_->max_log_level) return nu.inverse_tail(level);
    return std::exp((*table_->interp)(ll));
}

CoRMRealization PriorSimulator::sample(Rng& rng) const {
    CoRMRealization out;
    out.truncation_level = threshold_;
    out.warnings = warnings_;
    out.scores.assign(spec_.d(), {});
    const double alpha = spec_.centring_mass();
    const bool by_count = truncation_.kind == Truncation::Kind::JumpCount;
    const double max_level = threshold_level_;

    double arrival = 0.0;
    for (std::size_t i = 0;; ++i) {
        if (by_count && i >= truncation_.jumps) break;
        if (i >= truncation_.max_jumps) throw ConvergenceError("sample_corm: jump budget exhausted before truncation");
        arrival += rand::exponential(rng);
        const double level = arrival / alpha;
        if (!by_count && level > max_level) break;
        const double jump = inverse_tail(level);
        if (!(jump > 0.0)) break;
        out.jumps.push_back(jump);
    }
    if (by_count && !out.jumps.empty()) out.truncation_level = out.jumps.back();

    const std::size_t n = out.jumps.size();
    out.locations.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.locations[i] = locations_(rng);
    for (auto& row : out.scores) {
        row.resize(n);
        for (double& m : row) m = rand::gamma(rng, spec_.phi());
    }
    return out;
}

CoRMRealization sample_corm(const CoRMSpec& spec, const Truncation& truncation, Rng& rng) {
    if (truncation.kind == Truncation::Kind::JumpCount && truncation.jumps == 0) {
        CoRMRealization empty;
        empty.scores.assign(spec.d(), {});
        return empty;
    }
    return PriorSimulator(spec, truncation).sample(rng);
}

NormalizedWeights normalize(const CoRMRealization& realization) {
    NormalizedWeights out;
    for (const auto& row : realization.scores) {
        std::vector<double> w(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) w[i] = row[i] * realization.jumps[i];
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        if (!(total > 0.0)) throw DomainError("normalize: a dimension has zero total mass");
        for (double& x : w) x /= total;
        const double again = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& x : w) x /= again;
        out.weights.push_back(std::move(w));
    }
    return out;
}

std::vector<double> score_ratio_sample(double phi, std::size_t n, Rng& rng) {
    if (!(phi > 0.0)) throw DomainError("score_ratio_sample: shape must be positive");
    std::vector<double> out(n);
    for (double& r : out) {
        const double m1 = rand::gamma(rng, phi);
        const double m2 = rand::gamma(rng, phi);
        r = m1 / m2;
    }
    return out;
}

void write_realization_csv(std::ostream& out, const CoRMRealization& realization) {
    out << "jump_index,J,location";
    for (std::size_t j = 0; j < realization.dimension(); ++j) out << ",m_" << (j + 1);
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < realization.size(); ++i) {
        out << i << ',' << realization.jumps[i] << ',' << realization.locations[i];
        for (std::size_t j = 0; j < realization.dimension(); ++j) out << ',' << realization.scores[j][i];
        out << '\n';
    }
}

} // namespace corm
