#pragma once

#include "corm/corm.hpp"
#include "corm/kernels.hpp"
#include "corm/mcmc.hpp"
#include "corm/random.hpp"

#include <vector>

namespace corm {

/// Integral over (0, L) of (1 - prod_j (1 + v_j z)^-phi) nu*(z) dz.
double residual_laplace(const CoRMSpec& spec, const std::vector<double>& v, double L);

/// Integral over (lo, hi) of nu*(z) prod_j (1 + v_j z)^-phi dz.
double repopulation_mean(const CoRMSpec& spec, const std::vector<double>& v, double lo, double hi);

/// Exact draw from nu*(z) prod_j (1 + v_j z)^-phi restricted to (lo, hi).
///
/// Supported directing intensities are c z^(-1-sigma) (1 - b z)^gamma on
/// (0, 1/b), which covers Dirichlet and generalized gamma (a = 1) marginals.
/// Candidates come from a two-piece envelope split at the middle of the
/// support (z^(-1-sigma) below, (1 - b z)^gamma above) and are thinned by
/// prod ((1 + v_j lo) / (1 + v_j z))^phi.  Throws ConvergenceError after
/// `max_iterations` rejections.
double sample_tilted_z(const CoRMSpec& spec, double lo, double hi, const std::vector<double>& v, Rng& rng,
                       std::size_t max_iterations = 10'000'000);

/// Exact draw from nu*(J) exp(-tilt J) restricted to (lo, support end).
double sample_jump_height(const CoRMSpec& spec, double lo, double tilt, Rng& rng,
                          std::size_t max_iterations = 10'000'000);

/// True when the slice sampler supports the directing intensity of a CoRMSpec.
bool slice_supported(const CoRMSpec& spec);

struct SliceState {
    std::vector<std::vector<std::size_t>> allocation;  // allocation[j][i] indexes the jumps
    std::vector<std::vector<double>> u;                // slice variables, u[j][i]
    std::vector<double> v;
    std::vector<double> jumps;                         // active jumps (all above the threshold)
    std::vector<std::vector<double>> scores;           // scores[j][k]
    std::vector<Atom> atoms;                           // per jump
    std::vector<std::vector<int>> counts;              // counts[k][j]
    double phi = 1.0;

    std::size_t size() const { return jumps.size(); }
    /// L = min over all slice variables.
    double threshold() const;
    std::size_t allocated() const;
    /// Throws InvariantError if u >= J for an allocated jump, an active jump
    /// lies at or below L, or counts disagree with the allocations.
    void check(const Dataset& data) const;
};

struct SliceOptions {
    PhiPrior phi_prior = PhiPrior::exponential(1.0);
    std::size_t birth_death_moves = 5;
    bool update_v = true;
    /// Drop the kernel factor from the allocation update (prior-only runs).
    bool use_likelihood = true;
    std::size_t max_rejections = 10'000'000;
};

/// Slice sampler with explicit jumps above L = min u, tilted repopulation of
/// the jumps uncovered when L drops, birth/death moves on unallocated jumps,
/// interweaved v updates and a Metropolis step on log phi.  Sigma-stable
/// directing intensities are not supported.
class SliceSampler {
public:
    SliceSampler(const CoRMSpec& spec, const KernelModel& kernel, Dataset data, SliceOptions options, Rng& rng);

    /// allocations -> atoms -> jumps and scores -> birth/death -> u -> v -> phi.
    void sweep(Rng& rng);

    void update_allocations(Rng& rng);
    void update_atoms(Rng& rng);
    void update_jumps(Rng& rng);
    void update_scores(Rng& rng);
    void birth_death(Rng& rng);
    void update_u(Rng& rng);
    void update_v(std::size_t j, Rng& rng);
    void update_phi(Rng& rng);

    /// Law of c_{j,i} over the active jumps.
    std::vector<double> allocation_probabilities(std::size_t j, std::size_t i) const;
    /// Unclipped Metropolis-Hastings ratios of the birth of (J, m) and of the
    /// death of unallocated jump k.
    double birth_ratio(double jump, const std::vector<double>& scores) const;
    double death_ratio(std::size_t k) const;
    /// log targets of v_j (no Jacobian): with v_j m_{j,.} held fixed, and with
    /// m_{j,.} held fixed.
    double log_v_target_scaled(std::size_t j, double vj) const;
    double log_v_target(std::size_t j, double vj) const;
    /// log target of phi including its prior (no Jacobian).
    double log_phi_target(double phi) const;
    /// alpha times the integral of nu* above the threshold (cached per L and phi).
    double tail_mass() const;

    void set_v(const std::vector<double>& v);
    void set_phi(double phi);
    /// Replace the full state after checking its invariants.
    void set_state(SliceState state);
    void freeze_adaptation();

    const SliceState& state() const { return state_; }
    const CoRMSpec& spec() const { return spec_; }
    const KernelModel& kernel() const { return kernel_; }
    const Dataset& data() const { return data_; }

    /// Predictive mixture: active jumps weighted by m J, plus the expected
    /// tilted mass below L on the prior predictive.
    MixtureSnapshot snapshot() const;
    SweepSummary summary() const;
    AcceptanceReport acceptance() const;
    /// alpha times the expected mass of group j carried by jumps below L.
    double residual_mass(std::size_t j) const;

private:
    void remove_jump(std::size_t k);
    void add_jump(double jump, std::vector<double> scores, Atom atom);
    void repopulate(double lo, double hi, Rng& rng);
    std::vector<ClusterStats> cluster_stats() const;
    double residual(const CoRMSpec& spec, const std::vector<double>& v) const;

    CoRMSpec spec_;
    KernelModel kernel_;
    Dataset data_;
    SliceOptions options_;
    SliceState state_;
    std::vector<AdaptiveStep> scaled_steps_;
    std::vector<AdaptiveStep> v_steps_;
    AdaptiveStep phi_step_;
    AdaptiveStep birth_tally_;
    AdaptiveStep death_tally_;
    mutable double tail_cache_ = -1.0;
    mutable double tail_cache_level_ = -1.0;
    mutable double tail_cache_phi_ = -1.0;
};

} // namespace corm
