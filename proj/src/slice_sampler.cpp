#include "corm/slice_sampler.hpp"

#include "corm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const PowerKernel& power_kernel(const CoRMSpec& spec) {
    const auto* k = std::get_if<PowerKernel>(&spec.directing().form());
    if (!k || !(k->b > 0.0) || k->a != 0.0)
        throw UnsupportedError("slice sampler: directing intensity must be c z^(-1-sigma) (1 - b z)^gamma on (0, 1/b)");
    return *k;
}

double log_tilt(const std::vector<double>& v, double phi, double z) {
    double s = 0.0;
    for (double x : v) s += std::log1p(x * z);
    return -phi * s;
}

// Integral of w^(-1-sigma) over (a1, a2) and an inverse-CDF draw from it.
double power_mass(double sigma, double a1, double a2) {
    return sigma == 0.0 ? std::log(a2 / a1) : (std::pow(a1, -sigma) - std::pow(a2, -sigma)) / sigma;
}
double power_draw(double sigma, double a1, double a2, double u) {
    if (sigma == 0.0) return a1 * std::exp(u * std::log(a2 / a1));
    const double p1 = std::pow(a1, -sigma);
    const double p2 = std::pow(a2, -sigma);
    return std::pow(p1 - u * (p1 - p2), -1.0 / sigma);
}

// Integral of (1-w)^gamma over (b1, b2) and an inverse-CDF draw from it.
double gap_mass(double gamma, double b1, double b2) {
    const double e = gamma + 1.0;
    return (std::pow(1.0 - b1, e) - std::pow(1.0 - b2, e)) / e;
}
double gap_draw(double gamma, double b1, double b2, double u) {
    const double e = gamma + 1.0;
    const double t1 = std::pow(1.0 - b2, e);
    const double t2 = std::pow(1.0 - b1, e);
    return 1.0 - std::pow(t1 + u * (t2 - t1), 1.0 / e);
}

// Exact draw from w^(-1-sigma) (1-w)^gamma on (wl, wh) inside (0, 1), using
// z^(-1-sigma) below one half and (1-w)^gamma above as envelopes.
double sample_power(double sigma, double gamma, double wl, double wh, Rng& rng, std::size_t& budget) {
    constexpr double mid = 0.5;
    double mass_a = 0.0, mass_b = 0.0, top_a = 0.0, top_b = 0.0, a2 = 0.0, b1 = 0.0;
    if (wl < mid) {
        a2 = std::min(wh, mid);
        top_a = gamma >= 0.0 ? std::pow(1.0 - wl, gamma) : std::pow(1.0 - a2, gamma);
        mass_a = top_a * power_mass(sigma, wl, a2);
    }
    if (wh > mid) {
        b1 = std::max(wl, mid);
        top_b = std::pow(b1, -1.0 - sigma);
        mass_b = top_b * gap_mass(gamma, b1, wh);
    }
    const double p_a = mass_a / (mass_a + mass_b);
    if (!(p_a >= 0.0 && p_a <= 1.0)) throw DomainError("truncated directing draw: degenerate interval");
    for (;;) {
        if (budget-- == 0) throw ConvergenceError("rejection sampler exceeded its iteration cap");
        if (rand::uniform(rng) < p_a) {
            const double w = power_draw(sigma, wl, a2, rand::uniform(rng));
            if (rand::uniform(rng) * top_a <= std::pow(1.0 - w, gamma)) return w;
        } else {
            const double w = gap_draw(gamma, b1, wh, rand::uniform(rng));
            if (rand::uniform(rng) * top_b <= std::pow(w, -1.0 - sigma)) return w;
        }
    }
}

} // namespace

bool slice_supported(const CoRMSpec& spec) {
    const auto* k = std::get_if<PowerKernel>(&spec.directing().form());
    return k && k->b > 0.0 && k->a == 0.0;
}

double residual_laplace(const CoRMSpec& spec, const std::vector<double>& v, double L) {
    if (!(L >= 0.0)) throw DomainError("residual_laplace: threshold must be nonnegative");
    if (L == 0.0) return 0.0;
    const double phi = spec.phi();
    auto weight = [&](double z) {
        const double one_minus = -std::expm1(log_tilt(v, phi, z));
        return one_minus > 0.0 ? std::log(one_minus) : kNegInf;
    };
    return spec.directing().integrate(weight, 0.0, L, 1.0, 0.0).value;
}

double repopulation_mean(const CoRMSpec& spec, const std::vector<double>& v, double lo, double hi) {
    if (!(lo > 0.0)) throw DomainError("repopulation_mean: lower limit must be positive");
    if (!(hi > lo)) return 0.0;
    const double phi = spec.phi();
    return spec.directing().integrate([&](double z) { return log_tilt(v, phi, z); }, lo, hi).value;
}

double sample_tilted_z(const CoRMSpec& spec, double lo, double hi, const std::vector<double>& v, Rng& rng,
                       std::size_t max_iterations) {
    const PowerKernel& k = power_kernel(spec);
    const double top = 1.0 / k.b;
    if (!(lo > 0.0) || !(hi > lo) || hi > top) throw DomainError("sample_tilted_z: need 0 < lo < hi <= support end");
    const double phi = spec.phi();
    const double base = log_tilt(v, phi, lo);
    std::size_t budget = max_iterations;
    for (;;) {
        const double z = sample_power(k.sigma, k.gamma, k.b * lo, std::min(1.0, k.b * hi), rng, budget) / k.b;
        if (std::log(rand::uniform(rng)) <= log_tilt(v, phi, z) - base) return z;
    }
}

double sample_jump_height(const CoRMSpec& spec, double lo, double tilt, Rng& rng, std::size_t max_iterations) {
    const PowerKernel& k = power_kernel(spec);
    if (!(lo > 0.0) || !(lo * k.b < 1.0)) throw DomainError("sample_jump_height: lower limit outside the support");
    if (!(tilt >= 0.0)) throw DomainError("sample_jump_height: tilt must be nonnegative");
    std::size_t budget = max_iterations;
    for (;;) {
        const double z = sample_power(k.sigma, k.gamma, k.b * lo, 1.0, rng, budget) / k.b;
        if (std::log(rand::uniform(rng)) <= -tilt * (z - lo)) return z;
    }
}

double SliceState::threshold() const {
    double l = std::numeric_limits<double>::infinity();
    for (const auto& row : u)
        for (double x : row) l = std::min(l, x);
    return l;
}

std::size_t SliceState::allocated() const {
    std::size_t n = 0;
    for (const auto& c : counts) {
        int total = 0;
        for (int x : c) total += x;
        if (total > 0) ++n;
    }
    return n;
}

void SliceState::check(const Dataset& data) const {
    const std::size_t k_total = jumps.size();
    if (counts.size() != k_total || atoms.size() != k_total) throw InvariantError("slice state: size mismatch");
    if (scores.size() != data.d() || allocation.size() != data.d() || u.size() != data.d() || v.size() != data.d())
        throw InvariantError("slice state: dimension mismatch");
    const double L = threshold();
    std::vector<std::vector<int>> tally(k_total, std::vector<int>(data.d(), 0));
    for (std::size_t j = 0; j < data.d(); ++j) {
        if (scores[j].size() != k_total) throw InvariantError("slice state: score row length mismatch");
        if (allocation[j].size() != data.groups[j].size() || u[j].size() != data.groups[j].size())
            throw InvariantError("slice state: group size mismatch");
        for (std::size_t i = 0; i < allocation[j].size(); ++i) {
            const std::size_t k = allocation[j][i];
            if (k >= k_total) throw InvariantError("slice state: allocation out of range");
            if (!(u[j][i] > 0.0) || !(u[j][i] < jumps[k])) throw InvariantError("slice state: slice above its jump");
            ++tally[k][j];
        }
        for (double m : scores[j])
            if (!(m > 0.0)) throw InvariantError("slice state: scores must be positive");
        if (!(v[j] > 0.0)) throw InvariantError("slice state: v must be positive");
    }
    if (tally != counts) throw InvariantError("slice state: counts disagree with allocations");
    for (double J : jumps)
        if (!(J > L)) throw InvariantError("slice state: active jump at or below the threshold");
}

SliceSampler::SliceSampler(const CoRMSpec& spec, const KernelModel& kernel, Dataset data, SliceOptions options,
                           Rng& rng)
    : spec_(spec), kernel_(kernel), data_(std::move(data)), options_(options) {
    data_.validate();
    power_kernel(spec_);
    if (spec_.d() != data_.d()) throw DomainError("slice sampler: prior dimension differs from the number of groups");
    if (kernel_.dimension() != data_.p) throw DomainError("slice sampler: kernel dimension differs from the data");
    const std::size_t d = data_.d();
    const double top = spec_.directing().upper();
    state_.phi = spec_.phi();
    state_.v.resize(d);
    for (std::size_t j = 0; j < d; ++j) state_.v[j] = static_cast<double>(data_.groups[j].size());

    // One jump carrying every observation, then the unallocated jumps above L.
    ClusterStats all = kernel_.empty_stats();
    for (const auto& g : data_.groups)
        for (const auto& y : g) all.add(y);
    add_jump(0.5 * top, std::vector<double>(d, 1.0), kernel_.draw_atom(all, rng));
    state_.allocation.resize(d);
    state_.u.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        state_.allocation[j].assign(data_.groups[j].size(), 0);
        for (std::size_t i = 0; i < data_.groups[j].size(); ++i) state_.u[j].push_back(rand::uniform(rng) * 0.5 * top);
        state_.counts[0][j] = static_cast<int>(data_.groups[j].size());
    }
    repopulate(state_.threshold(), top, rng);
    scaled_steps_.assign(d, AdaptiveStep{});
    v_steps_.assign(d, AdaptiveStep{});
    birth_tally_.frozen = true;
    death_tally_.frozen = true;
    update_scores(rng);
}

void SliceSampler::add_jump(double jump, std::vector<double> scores, Atom atom) {
    state_.jumps.push_back(jump);
    if (state_.scores.empty()) state_.scores.resize(data_.d());
    for (std::size_t j = 0; j < data_.d(); ++j) state_.scores[j].push_back(scores[j]);
    state_.atoms.push_back(std::move(atom));
    state_.counts.emplace_back(data_.d(), 0);
}

void SliceSampler::remove_jump(std::size_t k) {
    const auto at = static_cast<std::ptrdiff_t>(k);
    state_.jumps.erase(state_.jumps.begin() + at);
    for (auto& row : state_.scores) row.erase(row.begin() + at);
    state_.atoms.erase(state_.atoms.begin() + at);
    state_.counts.erase(state_.counts.begin() + at);
    for (auto& row : state_.allocation)
        for (auto& c : row)
            if (c > k) --c;
}

void SliceSampler::repopulate(double lo, double hi, Rng& rng) {
    if (!(hi > lo)) return;
    const double mean = spec_.centring_mass() * repopulation_mean(spec_, state_.v, lo, hi);
    const std::uint64_t n = rand::poisson(rng, mean);
    for (std::uint64_t r = 0; r < n; ++r) {
        const double z = sample_tilted_z(spec_, lo, hi, state_.v, rng, options_.max_rejections);
        std::vector<double> m(data_.d());
        for (std::size_t j = 0; j < data_.d(); ++j) m[j] = rand::gamma(rng, state_.phi, 1.0 + state_.v[j] * z);
        add_jump(z, std::move(m), kernel_.draw_prior(rng));
    }
}

std::vector<ClusterStats> SliceSampler::cluster_stats() const {
    std::vector<ClusterStats> out(state_.size(), kernel_.empty_stats());
    for (std::size_t j = 0; j < data_.d(); ++j)
        for (std::size_t i = 0; i < data_.groups[j].size(); ++i) out[state_.allocation[j][i]].add(data_.groups[j][i]);
    return out;
}

double SliceSampler::residual(const CoRMSpec& spec, const std::vector<double>& v) const {
    return spec.centring_mass() * residual_laplace(spec, v, state_.threshold());
}

double SliceSampler::tail_mass() const {
    const double L = state_.threshold();
    if (L != tail_cache_level_ || state_.phi != tail_cache_phi_) {
        tail_cache_ = spec_.centring_mass() * spec_.directing().tail_integral(L);
        tail_cache_level_ = L;
        tail_cache_phi_ = state_.phi;
    }
    return tail_cache_;
}

std::vector<double> SliceSampler::allocation_probabilities(std::size_t j, std::size_t i) const {
    const Vector& y = data_.groups.at(j).at(i);
    std::vector<double> lw(state_.size(), kNegInf);
    for (std::size_t k = 0; k < state_.size(); ++k) {
        if (!(state_.jumps[k] > state_.u[j][i])) continue;
        lw[k] = std::log(state_.scores[j][k]);
        if (options_.use_likelihood) lw[k] += kernel_.log_density(y, state_.atoms[k]);
    }
    const double m = *std::max_element(lw.begin(), lw.end());
    if (!std::isfinite(m)) throw InvariantError("slice allocation: no eligible jump");
    double total = 0.0;
    for (double& w : lw) total += (w = std::exp(w - m));
    for (double& w : lw) w /= total;
    return lw;
}

void SliceSampler::update_allocations(Rng& rng) {
    for (std::size_t j = 0; j < data_.d(); ++j)
        for (std::size_t i = 0; i < data_.groups[j].size(); ++i) {
            const std::size_t pick = rand::categorical(rng, allocation_probabilities(j, i));
            --state_.counts[state_.allocation[j][i]][j];
            ++state_.counts[pick][j];
            state_.allocation[j][i] = pick;
        }
}

void SliceSampler::update_atoms(Rng& rng) {
    const std::vector<ClusterStats> stats = cluster_stats();
    for (std::size_t k = 0; k < state_.size(); ++k) state_.atoms[k] = kernel_.draw_atom(stats[k], rng);
}

void SliceSampler::update_jumps(Rng& rng) {
    const double L = state_.threshold();
    std::vector<double> lower(state_.size(), L);
    for (std::size_t j = 0; j < data_.d(); ++j)
        for (std::size_t i = 0; i < data_.groups[j].size(); ++i) {
            double& lo = lower[state_.allocation[j][i]];
            lo = std::max(lo, state_.u[j][i]);
        }
    for (std::size_t k = 0; k < state_.size(); ++k) {
        double tilt = 0.0;
        for (std::size_t j = 0; j < data_.d(); ++j) tilt += state_.v[j] * state_.scores[j][k];
        state_.jumps[k] = sample_jump_height(spec_, lower[k], tilt, rng, options_.max_rejections);
    }
}

void SliceSampler::update_scores(Rng& rng) {
    for (std::size_t j = 0; j < data_.d(); ++j)
        for (std::size_t k = 0; k < state_.size(); ++k)
            state_.scores[j][k] =
                rand::gamma(rng, state_.phi + state_.counts[k][j], 1.0 + state_.v[j] * state_.jumps[k]);
}

double SliceSampler::birth_ratio(double jump, const std::vector<double>& scores) const {
    double s = 0.0;
    for (std::size_t j = 0; j < data_.d(); ++j) s += state_.v[j] * jump * scores[j];
    const double b = static_cast<double>(state_.size() - state_.allocated());
    return std::exp(-s) * tail_mass() / (b + 1.0);
}

double SliceSampler::death_ratio(std::size_t k) const {
    double s = 0.0;
    for (std::size_t j = 0; j < data_.d(); ++j) s += state_.v[j] * state_.jumps.at(k) * state_.scores[j][k];
    const double b = static_cast<double>(state_.size() - state_.allocated());
    return std::exp(s) * b / tail_mass();
}

void SliceSampler::birth_death(Rng& rng) {
    const double L = state_.threshold();
    for (std::size_t move = 0; move < options_.birth_death_moves; ++move) {
        if (rand::uniform(rng) < 0.5) {
            const double jump = sample_jump_height(spec_, L, 0.0, rng, options_.max_rejections);
            std::vector<double> m(data_.d());
            for (double& x : m) x = rand::gamma(rng, state_.phi);
            const bool accept = rand::uniform(rng) < birth_ratio(jump, m);
            birth_tally_.record(accept);
            if (accept) add_jump(jump, std::move(m), kernel_.draw_prior(rng));
        } else {
            std::vector<std::size_t> empty;
            for (std::size_t k = 0; k < state_.size(); ++k) {
                int total = 0;
                for (int c : state_.counts[k]) total += c;
                if (total == 0) empty.push_back(k);
            }
            if (empty.empty()) continue;
            const std::size_t k = empty[std::min(empty.size() - 1, static_cast<std::size_t>(rand::uniform(rng) *
                                                                                             static_cast<double>(empty.size())))];
            const bool accept = rand::uniform(rng) < death_ratio(k);
            death_tally_.record(accept);
            if (accept) remove_jump(k);
        }
    }
}

void SliceSampler::update_u(Rng& rng) {
    const double old_level = state_.threshold();
    for (std::size_t j = 0; j < data_.d(); ++j)
        for (std::size_t i = 0; i < data_.groups[j].size(); ++i)
            state_.u[j][i] = rand::uniform(rng) * state_.jumps[state_.allocation[j][i]];
    const double level = state_.threshold();
    if (level > old_level) {
        for (std::size_t k = state_.size(); k-- > 0;)
            if (!(state_.jumps[k] > level)) remove_jump(k);
    } else if (level < old_level) {
        repopulate(level, old_level, rng);
    }
}

double SliceSampler::log_v_target_scaled(std::size_t j, double vj) const {
    if (!(vj > 0.0)) return kNegInf;
    const double phi = state_.phi;
    const double now = state_.v.at(j);
    double out = -(static_cast<double>(state_.size()) + 1.0) * std::log(vj);
    for (double m : state_.scores[j]) {
        const double ratio = now * m / vj;
        out += (phi - 1.0) * std::log(ratio) - ratio;
    }
    std::vector<double> v = state_.v;
    v[j] = vj;
    return out - residual(spec_, v);
}

double SliceSampler::log_v_target(std::size_t j, double vj) const {
    if (!(vj > 0.0)) return kNegInf;
    double mass = 0.0;
    for (std::size_t k = 0; k < state_.size(); ++k) mass += state_.scores[j][k] * state_.jumps[k];
    std::vector<double> v = state_.v;
    v[j] = vj;
    const double n = static_cast<double>(data_.groups.at(j).size());
    return (n - 1.0) * std::log(vj) - vj * mass - residual(spec_, v);
}

double SliceSampler::log_phi_target(double phi) const {
    const double prior = options_.phi_prior.log_density(phi);
    if (!std::isfinite(prior)) return prior;
    const CoRMSpec spec = phi == state_.phi ? spec_ : spec_.with_phi(phi);
    double out = prior;
    const double lg = std::lgamma(phi);
    for (const auto& row : state_.scores)
        for (double m : row) out += (phi - 1.0) * std::log(m) - lg;
    for (double J : state_.jumps) out += spec.directing().log_density(J);
    const double L = state_.threshold();
    const double tail = phi == state_.phi ? tail_mass() : spec.centring_mass() * spec.directing().tail_integral(L);
    return out - tail - residual(spec, state_.v);
}

void SliceSampler::update_v(std::size_t j, Rng& rng) {
    // Stage 1: v_j with the rescaled scores v_j m_{j,k} held fixed.
    {
        AdaptiveStep& step = scaled_steps_.at(j);
        const double u = std::log(state_.v[j]);
        const double u_new = u + step.step() * rand::normal(rng);
        const double log_ratio =
            log_v_target_scaled(j, std::exp(u_new)) + u_new - log_v_target_scaled(j, state_.v[j]) - u;
        const bool accept = std::log(rand::uniform(rng)) < log_ratio;
        step.record(accept);
        if (accept) {
            const double scale = state_.v[j] / std::exp(u_new);
            for (double& m : state_.scores[j]) m *= scale;
            state_.v[j] = std::exp(u_new);
        }
    }
    // Stage 2: v_j with the scores held fixed.
    {
        AdaptiveStep& step = v_steps_.at(j);
        const double u = std::log(state_.v[j]);
        const double u_new = u + step.step() * rand::normal(rng);
        const double log_ratio = log_v_target(j, std::exp(u_new)) + u_new - log_v_target(j, state_.v[j]) - u;
        const bool accept = std::log(rand::uniform(rng)) < log_ratio;
        step.record(accept);
        if (accept) state_.v[j] = std::exp(u_new);
    }
}

void SliceSampler::update_phi(Rng& rng) {
    if (options_.phi_prior.is_fixed()) return;
    const double u = std::log(state_.phi);
    const double u_new = u + phi_step_.step() * rand::normal(rng);
    const double phi_new = std::exp(u_new);
    const double log_ratio = log_phi_target(phi_new) + u_new - log_phi_target(state_.phi) - u;
    const bool accept = std::log(rand::uniform(rng)) < log_ratio;
    phi_step_.record(accept);
    if (accept) set_phi(phi_new);
}

void SliceSampler::sweep(Rng& rng) {
    update_allocations(rng);
    update_atoms(rng);
    update_jumps(rng);
    update_scores(rng);
    birth_death(rng);
    update_u(rng);
    if (options_.update_v)
        for (std::size_t j = 0; j < data_.d(); ++j) update_v(j, rng);
    update_phi(rng);
}

void SliceSampler::set_v(const std::vector<double>& v) {
    if (v.size() != data_.d()) throw DomainError("set_v: wrong length");
    for (double x : v)
        if (!(x > 0.0)) throw DomainError("set_v: v must be positive");
    state_.v = v;
}

void SliceSampler::set_phi(double phi) {
    spec_ = spec_.with_phi(phi);
    state_.phi = phi;
}

void SliceSampler::set_state(SliceState state) {
    state.check(data_);
    if (state.phi != state_.phi) spec_ = spec_.with_phi(state.phi);
    state_ = std::move(state);
}

void SliceSampler::freeze_adaptation() {
    for (auto& s : scaled_steps_) s.frozen = true;
    for (auto& s : v_steps_) s.frozen = true;
    phi_step_.frozen = true;
}

double SliceSampler::residual_mass(std::size_t j) const {
    const double L = state_.threshold();
    const double phi = state_.phi;
    const double vj = state_.v.at(j);
    auto weight = [&](double z) { return std::log(phi * z) - std::log1p(vj * z) + log_tilt(state_.v, phi, z); };
    return spec_.centring_mass() * spec_.directing().integrate(weight, 0.0, L, 1.0, 0.0).value;
}

MixtureSnapshot SliceSampler::snapshot() const {
    MixtureSnapshot out;
    for (const auto& atom : state_.atoms) out.components.emplace_back(atom.mean, atom.cov);
    out.components.push_back(kernel_.predictive_component(kernel_.empty_stats()));
    for (std::size_t j = 0; j < data_.d(); ++j) {
        std::vector<double> w;
        for (std::size_t k = 0; k < state_.size(); ++k) w.push_back(state_.scores[j][k] * state_.jumps[k]);
        w.push_back(residual_mass(j));
        double total = 0.0;
        for (double x : w) total += x;
        for (double& x : w) x /= total;
        out.weights.push_back(std::move(w));
    }
    return out;
}

SweepSummary SliceSampler::summary() const {
    SweepSummary s;
    s.clusters = state_.allocated();
    s.phi = state_.phi;
    s.v = state_.v;
    const MixtureSnapshot snap = snapshot();
    double residual_weight = 0.0;
    for (std::size_t j = 0; j < data_.d(); ++j) {
        residual_weight += snap.weights[j].back();
        double dev = 0.0;
        for (const auto& y : data_.groups[j]) dev -= 2.0 * std::log(snap.density(j, y));
        s.deviance.push_back(dev);
    }
    s.log_residual_mass = std::log(residual_weight / static_cast<double>(data_.d()));
    return s;
}

AcceptanceReport SliceSampler::acceptance() const {
    AcceptanceReport r;
    for (std::size_t j = 0; j < data_.d(); ++j) {
        r.names.push_back("v" + std::to_string(j + 1) + "_scaled");
        r.rates.push_back(scaled_steps_[j].acceptance_rate());
        r.names.push_back("v" + std::to_string(j + 1));
        r.rates.push_back(v_steps_[j].acceptance_rate());
    }
    if (!options_.phi_prior.is_fixed()) {
        r.names.push_back("phi");
        r.rates.push_back(phi_step_.acceptance_rate());
    }
    r.names.push_back("birth");
    r.rates.push_back(birth_tally_.acceptance_rate());
    r.names.push_back("death");
    r.rates.push_back(death_tally_.acceptance_rate());
    return r;
}

} // namespace corm
