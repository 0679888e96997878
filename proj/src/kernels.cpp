#include "corm/kernels.hpp"

#include "corm/errors.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace corm {

namespace {

double log_mv_gamma(std::size_t p, double x) {
    double out = 0.25 * static_cast<double>(p * (p - 1)) * std::log(std::numbers::pi);
    for (std::size_t i = 0; i < p; ++i) out += std::lgamma(x - 0.5 * static_cast<double>(i));
    return out;
}

Eigen::LLT<Matrix> checked_llt(const Matrix& m, const char* what) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + ": matrix is not positive definite");
    return llt;
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace

std::size_t Dataset::size() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
}

std::vector<std::size_t> Dataset::counts() const {
    std::vector<std::size_t> out;
    for (const auto& g : groups) out.push_back(g.size());
    return out;
}

void Dataset::validate() const {
    if (groups.empty()) throw DomainError("dataset: no groups");
    for (std::size_t j = 0; j < groups.size(); ++j) {
        if (groups[j].empty()) throw DomainError("dataset: group " + std::to_string(j + 1) + " is empty");
        for (const auto& y : groups[j])
            if (static_cast<std::size_t>(y.size()) != p) throw DomainError("dataset: inconsistent observation length");
    }
}

void ClusterStats::add(const Vector& y) {
    ++n;
    sum += y;
    outer.noalias() += y * y.transpose();
}

void ClusterStats::remove(const Vector& y) {
    if (n == 0) throw InvariantError("cluster statistics: removing from an empty set");
    --n;
    if (n == 0) {
        sum.setZero();
        outer.setZero();
        return;
    }
    sum -= y;
    outer.noalias() -= y * y.transpose();
}

Atom::Atom(Vector mean_, Matrix cov_) : mean(std::move(mean_)), cov(std::move(cov_)) {
    const auto llt = checked_llt(cov, "atom covariance");
    chol = llt.matrixL();
    log_det = 2.0 * chol.diagonal().array().log().sum();
}

Component::Component(Vector location_, Matrix scale_, double df_)
    : location(std::move(location_)), scale(std::move(scale_)), df(df_) {
    if (!(df > 0.0)) throw DomainError("component: degrees of freedom must be positive");
    chol = checked_llt(scale, "component scale").matrixL();
    log_det = 2.0 * chol.diagonal().array().log().sum();
}

double Component::log_density(const Vector& y) const {
    const auto p = static_cast<double>(location.size());
    const Vector z = chol.triangularView<Eigen::Lower>().solve(y - location);
    const double q = z.squaredNorm();
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    if (std::isinf(df)) return -0.5 * (p * log_2pi + log_det + q);
    return std::lgamma(0.5 * (df + p)) - std::lgamma(0.5 * df) - 0.5 * p * std::log(df * std::numbers::pi) -
           0.5 * log_det - 0.5 * (df + p) * std::log1p(q / df);
}

KernelModel::KernelModel(Kind kind, Vector m0, double k0, double df0, Matrix psi0)
    : kind_(kind), m0_(std::move(m0)), k0_(k0), df0_(df0), psi0_(std::move(psi0)) {
    const auto p = static_cast<double>(m0_.size());
    if (m0_.size() == 0) throw DomainError("kernel: empty mean");
    if (psi0_.rows() != m0_.size() || psi0_.cols() != m0_.size()) throw DomainError("kernel: scale has wrong shape");
    if (!(k0_ > 0.0)) throw DomainError("kernel: k0 must be positive");
    if (!(df0_ > p - 1.0)) throw DomainError("kernel: degrees of freedom must exceed p - 1");
    prior_log_det_ = log_det_from_llt(checked_llt(psi0_, "kernel scale"));
}

KernelModel KernelModel::univariate_normal(double mean, double k0, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("normal-gamma: shape and rate must be positive");
    return KernelModel(Kind::UnivariateNormal, Vector::Constant(1, mean), k0, 2.0 * shape, Matrix::Constant(1, 1, 2.0 * rate));
}

KernelModel KernelModel::multivariate_normal(Vector mean, double k0, double df, Matrix scale) {
    return KernelModel(Kind::MultivariateNormal, std::move(mean), k0, df, std::move(scale));
}

KernelModel KernelModel::from_data(const Dataset& data, Kind kind) {
    data.validate();
    const std::size_t p = data.p;
    if (kind == Kind::UnivariateNormal && p != 1) throw DomainError("univariate kernel needs one-dimensional data");
    const double n = static_cast<double>(data.size());
    Vector mean = Vector::Zero(p);
    for (const auto& g : data.groups)
        for (const auto& y : g) mean += y;
    mean /= n;
    Matrix cov = Matrix::Zero(p, p);
    for (const auto& g : data.groups)
        for (const auto& y : g) cov.noalias() += (y - mean) * (y - mean).transpose();
    if (n > 1.0) cov /= n - 1.0;
    if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success || !(cov.diagonal().minCoeff() > 0.0))
        cov = Matrix::Identity(p, p);
    const double df = static_cast<double>(p) + 10.0;
    const Matrix scale = (df - static_cast<double>(p) - 1.0) / 9.0 * cov;
    if (kind == Kind::UnivariateNormal) return univariate_normal(mean(0), 0.01, 0.5 * df, 0.5 * scale(0, 0));
    return multivariate_normal(mean, 0.01, df, scale);
}

double KernelModel::log_density(const Vector& y, const Atom& atom) const {
    const Vector z = atom.chol.triangularView<Eigen::Lower>().solve(y - atom.mean);
    return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + atom.log_det + z.squaredNorm());
}

KernelModel::Posterior KernelModel::posterior(const ClusterStats& stats) const {
    const auto n = static_cast<double>(stats.n);
    Posterior out;
    out.k = k0_ + n;
    out.df = df0_ + n;
    out.mean = (k0_ * m0_ + stats.sum) / out.k;
    if (stats.n == 0) {
        out.scale = psi0_;
        return out;
    }
    const Vector ybar = stats.sum / n;
    const Matrix centred = stats.outer - n * ybar * ybar.transpose();
    const Vector shift = ybar - m0_;
    out.scale = psi0_ + centred + (k0_ * n / out.k) * shift * shift.transpose();
    out.scale = 0.5 * (out.scale + out.scale.transpose());
    return out;
}

double KernelModel::log_marginal_unchecked(const ClusterStats& stats) const {
    if (stats.n == 0) return 0.0;
    const std::size_t p = dimension();
    const Posterior post = posterior(stats);
    const double post_log_det = log_det_from_llt(checked_llt(post.scale, "posterior scale"));
    const auto n = static_cast<double>(stats.n);
    const auto pd = static_cast<double>(p);
    return -0.5 * n * pd * std::log(std::numbers::pi) + log_mv_gamma(p, 0.5 * post.df) - log_mv_gamma(p, 0.5 * df0_) +
           0.5 * df0_ * prior_log_det_ - 0.5 * post.df * post_log_det + 0.5 * pd * std::log(k0_ / post.k);
}

double KernelModel::log_marginal(const ClusterStats& stats) const {
    if (!conjugate()) throw UnsupportedError("marginal likelihood is only available for the conjugate kernel");
    return log_marginal_unchecked(stats);
}

double KernelModel::log_marginal(const std::vector<Vector>& ys) const {
    ClusterStats s = empty_stats();
    for (const auto& y : ys) s.add(y);
    return log_marginal(s);
}

double KernelModel::log_predictive(const Vector& y, const ClusterStats& stats) const {
    if (!conjugate()) throw UnsupportedError("marginal likelihood is only available for the conjugate kernel");
    return predictive_component(stats).log_density(y);
}

Component KernelModel::predictive_component(const ClusterStats& stats) const {
    const Posterior post = posterior(stats);
    const double dof = post.df - static_cast<double>(dimension()) + 1.0;
    return Component(post.mean, post.scale * ((post.k + 1.0) / (post.k * dof)), dof);
}

double KernelModel::log_prior_predictive(const Vector& y) const {
    return predictive_component(empty_stats()).log_density(y);
}

Atom KernelModel::draw_atom(const ClusterStats& stats, Rng& rng) const {
    const std::size_t p = dimension();
    const Posterior post = posterior(stats);
    // Sigma^{-1} ~ Wishart(df, scale^{-1}) by the Bartlett decomposition.
    const Matrix scale_inv = checked_llt(post.scale, "posterior scale").solve(Matrix::Identity(p, p));
    const Matrix c = checked_llt(scale_inv, "inverse scale").matrixL();
    Matrix a = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        a(i, i) = std::sqrt(2.0 * rand::gamma(rng, 0.5 * (post.df - static_cast<double>(i))));
        for (std::size_t k = 0; k < i; ++k) a(i, k) = rand::normal(rng);
    }
    const Matrix ca = c * a;
    const Matrix precision = ca * ca.transpose();
    Matrix cov = checked_llt(precision, "wishart draw").solve(Matrix::Identity(p, p));
    cov = 0.5 * (cov + cov.transpose());
    const Matrix l = checked_llt(cov / post.k, "atom covariance").matrixL();
    Vector z(p);
    for (std::size_t i = 0; i < p; ++i) z(i) = rand::normal(rng);
    Vector mean = post.mean + l * z;
    return Atom(std::move(mean), std::move(cov));
}

double MixtureSnapshot::density(std::size_t group, const Vector& y) const {
    if (group >= weights.size()) throw DomainError("snapshot: group out of range");
    double out = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k)
        if (weights[group][k] > 0.0) out += weights[group][k] * std::exp(components[k].log_density(y));
    return out;
}

DensityGrid predictive_density(const std::vector<MixtureSnapshot>& sweeps, std::size_t group,
                               const std::vector<Vector>& points) {
    if (sweeps.empty()) throw DomainError("predictive density: no retained sweeps");
    DensityGrid out;
    out.group = group;
    out.points = points;
    out.density.assign(points.size(), 0.0);
    for (const auto& s : sweeps)
        for (std::size_t i = 0; i < points.size(); ++i) out.density[i] += s.density(group, points[i]);
    for (double& f : out.density) f /= static_cast<double>(sweeps.size());
    return out;
}

std::vector<Vector> linear_grid(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw DomainError("grid: need n >= 2 and hi > lo");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(Vector::Constant(1, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1)));
    return out;
}

} // namespace corm
