#pragma once

#include "corm/corm.hpp"
#include "corm/kernels.hpp"
#include "corm/mcmc.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace corm {

/// CSV with header `group,y1,...,yp`.  Groups are numbered in order of first
/// appearance.  Ragged rows, non-numeric cells and files without data rows
/// raise ParseError with the offending line.
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);

/// CSV with columns group, x1..xp, density (groups numbered from 1).
void write_density_csv(std::ostream& out, const std::vector<DensityGrid>& grids);

struct RunConfig {
    enum class Sampler { Slice, Marginal };

    // Prior.
    MarginalFamily family = MarginalFamily::gamma();
    double phi = 1.0;
    PhiPrior phi_prior = PhiPrior::exponential(1.0);
    double centring_mass = 1.0;

    // Kernel; unset hyperparameters follow KernelModel::from_data.
    KernelModel::Kind kernel = KernelModel::Kind::UnivariateNormal;
    std::optional<std::vector<double>> kernel_mean;
    std::optional<double> kernel_k0;
    std::optional<double> kernel_df;
    std::optional<std::vector<double>> kernel_scale;  // row-major p x p

    // Sampler.
    Sampler sampler = Sampler::Marginal;
    std::size_t sweeps = 2000;
    std::size_t burn_in = 1000;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    std::size_t auxiliary = 3;
    std::size_t chains = 1;
    std::size_t birth_death_moves = 5;
    bool save_states = false;

    // Paths.
    std::string data_path;
    std::string trace_path;

    /// Throws DomainError unless sweeps > burn_in, thin >= 1 and the numeric
    /// fields are in range.
    void validate() const;

    CoRMSpec spec(std::size_t d) const;
    KernelModel kernel_model(const Dataset& data) const;
};

/// Flat `key = value` text with [prior], [kernel], [sampler] and [output]
/// sections.  Unknown keys raise ParseError.
RunConfig read_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);

std::string sampler_name(RunConfig::Sampler s);
RunConfig::Sampler parse_sampler(const std::string& name);
KernelModel::Kind parse_kernel(const std::string& name);
std::string kernel_name(KernelModel::Kind kind);
MarginalFamily parse_family(const std::string& name, double sigma, double a);

} // namespace corm
