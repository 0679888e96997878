#pragma once

#include "corm/corm.hpp"
#include "corm/kernels.hpp"
#include "corm/mcmc.hpp"
#include "corm/random.hpp"

#include <map>
#include <vector>

namespace corm {

/// kappa(a + e_j, v) / kappa(a, v); needs |a| >= 1.
double kappa_ratio(const CoRMSpec& spec, const std::vector<int>& a, std::size_t j, const std::vector<double>& v);
/// kappa(e_j, v): the integrated weight of opening a new cluster from group j.
double new_cluster_weight(const CoRMSpec& spec, std::size_t j, const std::vector<double>& v);

struct MarginalState {
    std::vector<std::vector<std::size_t>> allocation;  // allocation[j][i]
    std::vector<std::vector<int>> counts;              // counts[k][j]
    std::vector<ClusterStats> stats;                   // per cluster
    std::vector<Atom> atoms;                           // per cluster, non-conjugate kernels only
    std::vector<double> v;
    double phi = 1.0;

    std::size_t clusters() const { return counts.size(); }
    /// Throws InvariantError when counts, statistics and allocations disagree.
    void check(const Dataset& data) const;
};

struct MarginalOptions {
    std::size_t auxiliary = 3;  // M potential atoms for new clusters
    PhiPrior phi_prior = PhiPrior::exponential(1.0);
    bool update_v = true;
};

/// Polya-urn sampler with auxiliaries v for normalized compound random
/// measure mixtures with Ga(phi) scores.  The conjugate kernel integrates the
/// atoms out; the non-conjugate kernel keeps them and offers M fresh prior
/// atoms to each reallocation.
class MarginalSampler {
public:
    MarginalSampler(const CoRMSpec& spec, const KernelModel& kernel, Dataset data, MarginalOptions options, Rng& rng);

    /// allocations -> atoms -> v -> phi.
    void sweep(Rng& rng);

    void update_allocation(std::size_t j, std::size_t i, Rng& rng);
    void update_atoms(Rng& rng);
    void update_v(std::size_t j, Rng& rng);
    void update_phi(Rng& rng);

    /// Law of c_{j,i} given everything else, over the clusters left after
    /// removing the observation (in order) followed by the new-cluster
    /// option(s).  Conjugate kernels ignore `auxiliary`; non-conjugate kernels
    /// need one atom per new-cluster option.  With `with_kernel` false the
    /// kernel factors are dropped, leaving the prior urn weights.
    std::vector<double> allocation_probabilities(std::size_t j, std::size_t i, const std::vector<Atom>& auxiliary = {},
                                                 bool with_kernel = true) const;

    /// log density of v_j (no Jacobian), other coordinates held at the state.
    double log_v_density(std::size_t j, double vj) const;
    /// log density of phi including its prior (no Jacobian).
    double log_phi_density(double phi) const;

    void set_v(const std::vector<double>& v);
    void set_phi(double phi);
    /// Replace the allocations; statistics, counts and atoms are rebuilt.
    void set_allocation(const std::vector<std::vector<std::size_t>>& allocation, Rng& rng);
    /// Stop adapting proposal scales.
    void freeze_adaptation();

    const MarginalState& state() const { return state_; }
    const CoRMSpec& spec() const { return spec_; }
    const KernelModel& kernel() const { return kernel_; }
    const Dataset& data() const { return data_; }

    MixtureSnapshot snapshot() const;
    SweepSummary summary() const;
    AcceptanceReport acceptance() const;

private:
    double log_kappa_cached(const std::vector<int>& a) const;
    double log_kappa_sum(const CoRMSpec& spec, const std::vector<double>& v, bool use_cache) const;
    double log_new_weight(std::size_t j) const;
    void remove_observation(std::size_t j, std::size_t i, Atom* freed);
    void add_to_cluster(std::size_t j, std::size_t i, std::size_t k);
    void open_cluster(std::size_t j, std::size_t i, Atom atom);
    std::vector<double> log_weights(std::size_t j, const Vector& y, const std::vector<Atom>& auxiliary,
                                    bool with_kernel) const;
    void invalidate();

    CoRMSpec spec_;
    KernelModel kernel_;
    Dataset data_;
    MarginalOptions options_;
    MarginalState state_;
    std::vector<AdaptiveStep> v_steps_;
    AdaptiveStep phi_step_;
    mutable std::map<std::vector<int>, double> kappa_cache_;
    mutable std::vector<double> new_weight_cache_;
    mutable double psi_cache_ = std::numeric_limits<double>::quiet_NaN();
};

} // namespace corm
