#include "corm/marginal_sampler.hpp"

#include "corm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corm {

namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

std::vector<int> unit(std::size_t d, std::size_t j) {
    std::vector<int> e(d, 0);
    e[j] = 1;
    return e;
}

double log_sum_exp(const std::vector<double>& x) {
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double t : x) s += std::exp(t - m);
    return m + std::log(s);
}

std::vector<double> normalized(const std::vector<double>& log_w) {
    const double z = log_sum_exp(log_w);
    if (!std::isfinite(z)) throw InvariantError("allocation weights are all zero");
    std::vector<double> p(log_w.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(log_w[k] - z);
    return p;
}

} // namespace

double kappa_ratio(const CoRMSpec& spec, const std::vector<int>& a, std::size_t j, const std::vector<double>& v) {
    if (j >= spec.d()) throw DomainError("kappa_ratio: group index out of range");
    std::vector<int> up = a;
    ++up.at(j);
    return std::exp(log_kappa(spec, up, v) - log_kappa(spec, a, v));
}

double new_cluster_weight(const CoRMSpec& spec, std::size_t j, const std::vector<double>& v) {
    if (j >= spec.d()) throw DomainError("new_cluster_weight: group index out of range");
    return kappa(spec, unit(spec.d(), j), v);
}

void MarginalState::check(const Dataset& data) const {
    const std::size_t k_total = counts.size();
    if (stats.size() != k_total) throw InvariantError("marginal state: statistics size mismatch");
    if (!atoms.empty() && atoms.size() != k_total) throw InvariantError("marginal state: atom count mismatch");
    std::vector<std::vector<int>> tally(k_total, std::vector<int>(data.d(), 0));
    for (std::size_t j = 0; j < allocation.size(); ++j)
        for (std::size_t k : allocation[j]) {
            if (k >= k_total) throw InvariantError("marginal state: allocation out of range");
            ++tally[k][j];
        }
    for (std::size_t k = 0; k < k_total; ++k) {
        if (tally[k] != counts[k]) throw InvariantError("marginal state: counts disagree with allocations");
        int n = 0;
        for (int c : counts[k]) n += c;
        if (n == 0) throw InvariantError("marginal state: empty cluster");
        if (stats[k].n != static_cast<std::size_t>(n)) throw InvariantError("marginal state: statistics disagree");
    }
    for (double x : v)
        if (!(x > 0.0)) throw InvariantError("marginal state: v must be positive");
}

MarginalSampler::MarginalSampler(const CoRMSpec& spec, const KernelModel& kernel, Dataset data, MarginalOptions options,
                                 Rng& rng)
    : spec_(spec), kernel_(kernel), data_(std::move(data)), options_(options) {
    data_.validate();
    if (spec_.d() != data_.d()) throw DomainError("marginal sampler: prior dimension differs from the number of groups");
    if (kernel_.dimension() != data_.p) throw DomainError("marginal sampler: kernel dimension differs from the data");
    if (options_.auxiliary == 0) throw DomainError("marginal sampler: need at least one auxiliary atom");
    const std::size_t d = data_.d();
    state_.phi = spec_.phi();
    state_.v.resize(d);
    for (std::size_t j = 0; j < d; ++j) state_.v[j] = static_cast<double>(data_.groups[j].size());
    std::vector<std::vector<std::size_t>> all_one(d);
    for (std::size_t j = 0; j < d; ++j) all_one[j].assign(data_.groups[j].size(), 0);
    v_steps_.assign(d, AdaptiveStep{});
    set_allocation(all_one, rng);
}

void MarginalSampler::invalidate() {
    kappa_cache_.clear();
    psi_cache_ = std::numeric_limits<double>::quiet_NaN();
}

void MarginalSampler::set_v(const std::vector<double>& v) {
    if (v.size() != spec_.d()) throw DomainError("set_v: wrong length");
    for (double x : v)
        if (!(x >= 0.0)) throw DomainError("set_v: v must be nonnegative");
    state_.v = v;
    invalidate();
}

void MarginalSampler::set_phi(double phi) {
    spec_ = spec_.with_phi(phi);
    state_.phi = phi;
    invalidate();
}

void MarginalSampler::freeze_adaptation() {
    for (auto& s : v_steps_) s.frozen = true;
    phi_step_.frozen = true;
}

void MarginalSampler::set_allocation(const std::vector<std::vector<std::size_t>>& allocation, Rng& rng) {
    if (allocation.size() != data_.d()) throw DomainError("set_allocation: wrong number of groups");
    std::size_t k_total = 0;
    for (std::size_t j = 0; j < allocation.size(); ++j) {
        if (allocation[j].size() != data_.groups[j].size()) throw DomainError("set_allocation: wrong group size");
        for (std::size_t k : allocation[j]) k_total = std::max(k_total, k + 1);
    }
    state_.allocation = allocation;
    state_.counts.assign(k_total, std::vector<int>(data_.d(), 0));
    state_.stats.assign(k_total, kernel_.empty_stats());
    for (std::size_t j = 0; j < allocation.size(); ++j)
        for (std::size_t i = 0; i < allocation[j].size(); ++i) {
            ++state_.counts[allocation[j][i]][j];
            state_.stats[allocation[j][i]].add(data_.groups[j][i]);
        }
    for (const auto& s : state_.stats)
        if (s.n == 0) throw DomainError("set_allocation: labels must be contiguous from 0");
    state_.atoms.clear();
    if (!kernel_.conjugate())
        for (const auto& s : state_.stats) state_.atoms.push_back(kernel_.draw_atom(s, rng));
}

double MarginalSampler::log_kappa_cached(const std::vector<int>& a) const {
    if (auto it = kappa_cache_.find(a); it != kappa_cache_.end()) return it->second;
    const double value = log_kappa(spec_, a, state_.v);
    kappa_cache_.emplace(a, value);
    return value;
}

double MarginalSampler::log_new_weight(std::size_t j) const {
    return std::log(spec_.centring_mass()) + log_kappa_cached(unit(spec_.d(), j));
}

// -alpha psi(v) + sum_k log kappa_{a_k}(v) under `spec`.
double MarginalSampler::log_kappa_sum(const CoRMSpec& spec, const std::vector<double>& v, bool use_cache) const {
    double out = 0.0;
    if (use_cache) {
        if (std::isnan(psi_cache_)) psi_cache_ = laplace_exponent(spec_, state_.v);
        out -= spec_.centring_mass() * psi_cache_;
        for (const auto& a : state_.counts) out += log_kappa_cached(a);
        return out;
    }
    out -= spec.centring_mass() * laplace_exponent(spec, v);
    for (const auto& a : state_.counts) out += log_kappa(spec, a, v);
    return out;
}

double MarginalSampler::log_v_density(std::size_t j, double vj) const {
    if (!(vj > 0.0)) return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(data_.groups.at(j).size());
    if (vj == state_.v[j]) return (n - 1.0) * std::log(vj) + log_kappa_sum(spec_, state_.v, true);
    std::vector<double> v = state_.v;
    v[j] = vj;
    return (n - 1.0) * std::log(vj) + log_kappa_sum(spec_, v, false);
}

double MarginalSampler::log_phi_density(double phi) const {
    const double prior = options_.phi_prior.log_density(phi);
    if (!std::isfinite(prior)) return prior;
    if (phi == state_.phi) return prior + log_kappa_sum(spec_, state_.v, true);
    return prior + log_kappa_sum(spec_.with_phi(phi), state_.v, false);
}

void MarginalSampler::remove_observation(std::size_t j, std::size_t i, Atom* freed) {
    const std::size_t k = state_.allocation[j][i];
    --state_.counts[k][j];
    state_.stats[k].remove(data_.groups[j][i]);
    state_.allocation[j][i] = kUnassigned;
    if (state_.stats[k].n > 0) return;
    if (freed && !state_.atoms.empty()) *freed = std::move(state_.atoms[k]);
    state_.counts.erase(state_.counts.begin() + static_cast<std::ptrdiff_t>(k));
    state_.stats.erase(state_.stats.begin() + static_cast<std::ptrdiff_t>(k));
    if (!state_.atoms.empty()) state_.atoms.erase(state_.atoms.begin() + static_cast<std::ptrdiff_t>(k));
    for (auto& row : state_.allocation)
        for (auto& c : row)
            if (c != kUnassigned && c > k) --c;
}

void MarginalSampler::add_to_cluster(std::size_t j, std::size_t i, std::size_t k) {
    state_.allocation[j][i] = k;
    ++state_.counts[k][j];
    state_.stats[k].add(data_.groups[j][i]);
}

void MarginalSampler::open_cluster(std::size_t j, std::size_t i, Atom atom) {
    state_.counts.emplace_back(data_.d(), 0);
    state_.stats.push_back(kernel_.empty_stats());
    if (!kernel_.conjugate()) state_.atoms.push_back(std::move(atom));
    add_to_cluster(j, i, state_.counts.size() - 1);
}

std::vector<double> MarginalSampler::log_weights(std::size_t j, const Vector& y, const std::vector<Atom>& auxiliary,
                                                 bool with_kernel) const {
    const std::size_t k_total = state_.clusters();
    std::vector<double> lw;
    lw.reserve(k_total + std::max<std::size_t>(1, auxiliary.size()));
    for (std::size_t k = 0; k < k_total; ++k) {
        std::vector<int> up = state_.counts[k];
        ++up[j];
        double w = log_kappa_cached(up) - log_kappa_cached(state_.counts[k]);
        if (with_kernel)
            w += kernel_.conjugate() ? kernel_.log_predictive(y, state_.stats[k]) : kernel_.log_density(y, state_.atoms[k]);
        lw.push_back(w);
    }
    const double fresh = log_new_weight(j);
    if (kernel_.conjugate()) {
        lw.push_back(fresh + (with_kernel ? kernel_.log_prior_predictive(y) : 0.0));
    } else {
        if (auxiliary.empty()) throw DomainError("allocation: non-conjugate kernels need auxiliary atoms");
        const double share = std::log(static_cast<double>(auxiliary.size()));
        for (const auto& atom : auxiliary) lw.push_back(fresh - share + (with_kernel ? kernel_.log_density(y, atom) : 0.0));
    }
    return lw;
}

std::vector<double> MarginalSampler::allocation_probabilities(std::size_t j, std::size_t i,
                                                              const std::vector<Atom>& auxiliary, bool with_kernel) const {
    MarginalSampler copy = *this;
    copy.remove_observation(j, i, nullptr);
    return normalized(copy.log_weights(j, data_.groups[j][i], auxiliary, with_kernel));
}

void MarginalSampler::update_allocation(std::size_t j, std::size_t i, Rng& rng) {
    const Vector& y = data_.groups[j][i];
    std::vector<Atom> auxiliary;
    if (kernel_.conjugate()) {
        remove_observation(j, i, nullptr);
    } else {
        const std::size_t k = state_.allocation[j][i];
        const bool singleton = state_.stats[k].n == 1;
        Atom freed;
        remove_observation(j, i, &freed);
        auxiliary.reserve(options_.auxiliary);
        if (singleton) auxiliary.push_back(std::move(freed));
        while (auxiliary.size() < options_.auxiliary) auxiliary.push_back(kernel_.draw_prior(rng));
    }
    const std::vector<double> lw = log_weights(j, y, auxiliary, true);
    const std::size_t pick = rand::categorical_log(rng, lw);
    const std::size_t k_total = state_.clusters();
    if (pick < k_total) {
        add_to_cluster(j, i, pick);
    } else {
        open_cluster(j, i, kernel_.conjugate() ? Atom{} : std::move(auxiliary[pick - k_total]));
    }
}

void MarginalSampler::update_atoms(Rng& rng) {
    if (kernel_.conjugate()) return;
    for (std::size_t k = 0; k < state_.clusters(); ++k) state_.atoms[k] = kernel_.draw_atom(state_.stats[k], rng);
}

void MarginalSampler::update_v(std::size_t j, Rng& rng) {
    AdaptiveStep& step = v_steps_.at(j);
    const double u = std::log(state_.v[j]);
    const double u_new = u + step.step() * rand::normal(rng);
    const double v_new = std::exp(u_new);
    const double current = log_v_density(j, state_.v[j]) + u;
    std::vector<double> v = state_.v;
    v[j] = v_new;
    const double n = static_cast<double>(data_.groups[j].size());
    // Evaluate the proposal with fresh kappas so they can be kept on acceptance.
    std::map<std::vector<int>, double> fresh;
    double proposed = (n - 1.0) * std::log(v_new) - spec_.centring_mass() * laplace_exponent(spec_, v) + u_new;
    for (const auto& a : state_.counts) {
        auto it = fresh.find(a);
        if (it == fresh.end()) it = fresh.emplace(a, log_kappa(spec_, a, v)).first;
        proposed += it->second;
    }
    const bool accept = std::log(rand::uniform(rng)) < proposed - current;
    step.record(accept);
    if (!accept) return;
    state_.v = v;
    kappa_cache_ = std::move(fresh);
    psi_cache_ = std::numeric_limits<double>::quiet_NaN();
}

void MarginalSampler::update_phi(Rng& rng) {
    if (options_.phi_prior.is_fixed()) return;
    const double u = std::log(state_.phi);
    const double u_new = u + phi_step_.step() * rand::normal(rng);
    const double phi_new = std::exp(u_new);
    const double current = log_phi_density(state_.phi) + u;
    const CoRMSpec proposal = spec_.with_phi(phi_new);
    std::map<std::vector<int>, double> fresh;
    double proposed = options_.phi_prior.log_density(phi_new) + u_new -
                      proposal.centring_mass() * laplace_exponent(proposal, state_.v);
    for (const auto& a : state_.counts) {
        auto it = fresh.find(a);
        if (it == fresh.end()) it = fresh.emplace(a, log_kappa(proposal, a, state_.v)).first;
        proposed += it->second;
    }
    const bool accept = std::log(rand::uniform(rng)) < proposed - current;
    phi_step_.record(accept);
    if (!accept) return;
    spec_ = proposal;
    state_.phi = phi_new;
    kappa_cache_ = std::move(fresh);
    psi_cache_ = std::numeric_limits<double>::quiet_NaN();
}

void MarginalSampler::sweep(Rng& rng) {
    for (std::size_t j = 0; j < data_.d(); ++j)
        for (std::size_t i = 0; i < data_.groups[j].size(); ++i) update_allocation(j, i, rng);
    update_atoms(rng);
    if (options_.update_v)
        for (std::size_t j = 0; j < data_.d(); ++j) update_v(j, rng);
    update_phi(rng);
}

MixtureSnapshot MarginalSampler::snapshot() const {
    MixtureSnapshot out;
    const std::size_t k_total = state_.clusters();
    for (std::size_t k = 0; k < k_total; ++k) {
        if (kernel_.conjugate())
            out.components.push_back(kernel_.predictive_component(state_.stats[k]));
        else
            out.components.emplace_back(state_.atoms[k].mean, state_.atoms[k].cov);
    }
    out.components.push_back(kernel_.predictive_component(kernel_.empty_stats()));
    for (std::size_t j = 0; j < data_.d(); ++j) {
        std::vector<double> lw;
        for (std::size_t k = 0; k < k_total; ++k) {
            std::vector<int> up = state_.counts[k];
            ++up[j];
            lw.push_back(log_kappa_cached(up) - log_kappa_cached(state_.counts[k]));
        }
        lw.push_back(log_new_weight(j));
        out.weights.push_back(normalized(lw));
    }
    return out;
}

SweepSummary MarginalSampler::summary() const {
    SweepSummary s;
    s.clusters = state_.clusters();
    s.phi = state_.phi;
    s.v = state_.v;
    const MixtureSnapshot snap = snapshot();
    double residual = 0.0;
    for (std::size_t j = 0; j < data_.d(); ++j) {
        residual += snap.weights[j].back();
        double dev = 0.0;
        for (const auto& y : data_.groups[j]) dev -= 2.0 * std::log(snap.density(j, y));
        s.deviance.push_back(dev);
    }
    s.log_residual_mass = std::log(residual / static_cast<double>(data_.d()));
    return s;
}

AcceptanceReport MarginalSampler::acceptance() const {
    AcceptanceReport r;
    for (std::size_t j = 0; j < v_steps_.size(); ++j) {
        r.names.push_back("v" + std::to_string(j + 1));
        r.rates.push_back(v_steps_[j].acceptance_rate());
    }
    if (!options_.phi_prior.is_fixed()) {
        r.names.push_back("phi");
        r.rates.push_back(phi_step_.acceptance_rate());
    }
    return r;
}

} // namespace corm
