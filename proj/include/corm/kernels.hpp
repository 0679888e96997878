#pragma once

#include "corm/random.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace corm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Grouped observations: groups[j][i] is a p-vector.
struct Dataset {
    std::size_t p = 1;
    std::vector<std::string> group_names;
    std::vector<std::vector<Vector>> groups;

    std::size_t d() const { return groups.size(); }
    std::size_t size() const;
    std::vector<std::size_t> counts() const;
    /// Throws DomainError when a group is empty or a row has the wrong length.
    void validate() const;
};

/// Sufficient statistics of a set of observations.
struct ClusterStats {
    std::size_t n = 0;
    Vector sum;
    Matrix outer;

    explicit ClusterStats(std::size_t p = 1) : sum(Vector::Zero(p)), outer(Matrix::Zero(p, p)) {}
    void add(const Vector& y);
    void remove(const Vector& y);
};

/// Gaussian kernel parameter theta = (mean, covariance), with its Cholesky factor cached.
struct Atom {
    Vector mean;
    Matrix cov;
    Matrix chol;  // lower factor of cov
    double log_det = 0.0;

    Atom() = default;
    Atom(Vector mean, Matrix cov);
};

/// Multivariate Student-t (Gaussian when df is infinite) used for predictive
/// components.
struct Component {
    Vector location;
    Matrix scale;
    double df = std::numeric_limits<double>::infinity();
    Matrix chol;  // lower factor of scale
    double log_det = 0.0;

    Component() = default;
    Component(Vector location, Matrix scale, double df = std::numeric_limits<double>::infinity());

    double log_density(const Vector& y) const;
};

/// Normal kernel with a normal-inverse-Wishart centring measure
/// N(mu | m0, Sigma / k0) IW(Sigma | df, scale).  In one dimension this is the
/// normal-gamma prior on (mu, precision) with shape df/2 and rate scale/2.
///
/// The univariate variant is treated as conjugate (the marginal sampler
/// integrates atoms out); the multivariate variant is sampled with auxiliary
/// atoms.
class KernelModel {
public:
    enum class Kind { UnivariateNormal, MultivariateNormal };

    static KernelModel univariate_normal(double mean, double k0, double shape, double rate);
    static KernelModel multivariate_normal(Vector mean, double k0, double df, Matrix scale);
    /// Centring recipe from the data: prior mean at the sample mean, k0 = 1/100,
    /// df = p + 10 and a scale putting the prior mean of Sigma at one ninth of
    /// the sample covariance.
    static KernelModel from_data(const Dataset& data, Kind kind);

    Kind kind() const { return kind_; }
    bool conjugate() const { return kind_ == Kind::UnivariateNormal; }
    std::size_t dimension() const { return static_cast<std::size_t>(m0_.size()); }
    const Vector& prior_mean() const { return m0_; }
    double k0() const { return k0_; }
    double df() const { return df0_; }
    const Matrix& scale() const { return psi0_; }

    ClusterStats empty_stats() const { return ClusterStats(dimension()); }

    double log_density(const Vector& y, const Atom& atom) const;

    /// log g(S) = log of the integral of prod k(y|theta) over the centring law.
    /// Conjugate variant only; throws UnsupportedError otherwise.
    double log_marginal(const ClusterStats& stats) const;
    double log_marginal(const std::vector<Vector>& ys) const;
    /// log g(S + y) - log g(S); conjugate variant only.
    double log_predictive(const Vector& y, const ClusterStats& stats) const;

    /// Predictive law of a new observation given a cluster's statistics
    /// (the prior predictive for empty statistics).  Valid for both variants.
    Component predictive_component(const ClusterStats& stats) const;
    double log_prior_predictive(const Vector& y) const;

    /// Exact draw from the posterior of theta given the statistics.
    Atom draw_atom(const ClusterStats& stats, Rng& rng) const;
    Atom draw_prior(Rng& rng) const { return draw_atom(empty_stats(), rng); }

    struct Posterior {
        Vector mean;
        double k = 0.0;
        double df = 0.0;
        Matrix scale;
    };
    Posterior posterior(const ClusterStats& stats) const;

private:
    KernelModel(Kind kind, Vector m0, double k0, double df0, Matrix psi0);
    double log_marginal_unchecked(const ClusterStats& stats) const;

    Kind kind_;
    Vector m0_;
    double k0_;
    double df0_;
    Matrix psi0_;
    double prior_log_det_ = 0.0;
};

/// Density of each group's posterior predictive on a grid of points.
struct DensityGrid {
    std::size_t group = 0;
    std::vector<Vector> points;
    std::vector<double> density;
};

/// One sweep's predictive mixture: shared components and per-group weights
/// (each row sums to one).
struct MixtureSnapshot {
    std::vector<Component> components;
    std::vector<std::vector<double>> weights;

    double density(std::size_t group, const Vector& y) const;
};

/// Rao-Blackwellized average over sweeps of the per-sweep normalized
/// predictive densities.  Throws DomainError for an empty stream.
DensityGrid predictive_density(const std::vector<MixtureSnapshot>& sweeps, std::size_t group,
                               const std::vector<Vector>& points);

/// Evenly spaced grid over [lo, hi] (one-dimensional data).
std::vector<Vector> linear_grid(double lo, double hi, std::size_t n);

} // namespace corm
