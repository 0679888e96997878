#include "corm/corm.hpp"

#include "corm/errors.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace corm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sum_log1p(double z, const std::vector<double>& lambda) {
    double acc = 0.0;
    for (double l : lambda) acc += std::log1p(z * l);
    return acc;
}

void require_dimension(const CoRMSpec& spec, std::size_t n, const char* what) {
    if (n != spec.d()) {
        std::ostringstream msg;
        msg << what << ": expected " << spec.d() << " coordinates, got " << n;
        throw DomainError(msg.str());
    }
}

double stable_directing_constant(double sigma, double phi) {
    return sigma * std::exp(std::lgamma(phi) - std::lgamma(phi + sigma) - std::lgamma(1.0 - sigma));
}

} // namespace

void MarginalFamily::validate() const {
    if (kind == Kind::Gamma) return;
    if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("marginal family: sigma must lie in (0,1)");
    if (kind == Kind::GeneralizedGamma && !(a > 0.0)) throw DomainError("marginal family: a must be positive");
}

std::string MarginalFamily::name() const {
    std::ostringstream out;
    switch (kind) {
    case Kind::Gamma: out << "gamma"; break;
    case Kind::SigmaStable: out << "sigma-stable(" << sigma << ")"; break;
    case Kind::GeneralizedGamma: out << "generalized-gamma(" << sigma << ", " << a << ")"; break;
    }
    return out.str();
}

LevyIntensity marginal_intensity(const MarginalFamily& family) {
    family.validate();
    switch (family.kind) {
    case MarginalFamily::Kind::Gamma: return LevyIntensity(PowerKernel{1.0, 0.0, 0.0, 0.0, 1.0});
    case MarginalFamily::Kind::SigmaStable:
        return LevyIntensity(PowerKernel{family.sigma / std::tgamma(1.0 - family.sigma), family.sigma, 0.0, 0.0, 0.0});
    case MarginalFamily::Kind::GeneralizedGamma:
        return LevyIntensity(
            PowerKernel{family.sigma / std::tgamma(1.0 - family.sigma), family.sigma, 0.0, 0.0, family.a});
    }
    throw UnsupportedError("marginal_intensity: unknown family");
}

LevyIntensity directing_from_marginal(const MarginalFamily& family, double phi) {
    family.validate();
    if (!(phi > 0.0)) throw DomainError("score shape must be positive");
    switch (family.kind) {
    case MarginalFamily::Kind::Gamma: return LevyIntensity(PowerKernel{1.0, 0.0, 1.0, phi - 1.0, 0.0});
    case MarginalFamily::Kind::SigmaStable:
        return LevyIntensity(PowerKernel{stable_directing_constant(family.sigma, phi), family.sigma, 0.0, 0.0, 0.0});
    case MarginalFamily::Kind::GeneralizedGamma:
        return LevyIntensity(PowerKernel{stable_directing_constant(family.sigma, phi), family.sigma, family.a,
                                         family.sigma + phi - 1.0, 0.0});
    }
    throw UnsupportedError("directing_from_marginal: unknown family");
}

LevyIntensity directing_intensity(const DirectingFamily& family) {
    switch (family.kind) {
    case DirectingFamily::Kind::Beta:
        if (!(family.theta > 0.0)) throw DomainError("beta directing: theta must be positive");
        return LevyIntensity(PowerKernel{family.theta, 0.0, 1.0, family.theta - 1.0, 0.0});
    case DirectingFamily::Kind::Gamma: return LevyIntensity(PowerKernel{1.0, 0.0, 0.0, 0.0, 1.0});
    case DirectingFamily::Kind::SigmaStable:
        MarginalFamily::sigma_stable(family.sigma).validate();
        return LevyIntensity(PowerKernel{family.sigma / std::tgamma(1.0 - family.sigma), family.sigma, 0.0, 0.0, 0.0});
    case DirectingFamily::Kind::GeneralizedGamma:
        MarginalFamily::generalized_gamma(family.sigma, family.a).validate();
        return LevyIntensity(
            PowerKernel{family.sigma / std::tgamma(1.0 - family.sigma), family.sigma, 0.0, 0.0, family.a});
    }
    throw UnsupportedError("directing_intensity: unknown family");
}

LevyIntensity marginal_from_directing(const DirectingFamily& family, double phi) {
    if (!(phi > 0.0)) throw DomainError("score shape must be positive");
    switch (family.kind) {
    case DirectingFamily::Kind::Beta: return LevyIntensity(BetaDirectedMarginal{family.theta, phi});
    case DirectingFamily::Kind::Gamma: return LevyIntensity(BesselMarginal{1.0, 0.0, 1.0, phi});
    case DirectingFamily::Kind::SigmaStable: {
        MarginalFamily::sigma_stable(family.sigma).validate();
        const double c = family.sigma / std::tgamma(1.0 - family.sigma) *
                         std::exp(std::lgamma(phi + family.sigma) - std::lgamma(phi));
        return LevyIntensity(PowerKernel{c, family.sigma, 0.0, 0.0, 0.0});
    }
    case DirectingFamily::Kind::GeneralizedGamma:
        MarginalFamily::generalized_gamma(family.sigma, family.a).validate();
        return LevyIntensity(
            BesselMarginal{family.sigma / std::tgamma(1.0 - family.sigma), family.sigma, family.a, phi});
    }
    throw UnsupportedError("marginal_from_directing: unknown directing family");
}

CoRMSpec::CoRMSpec(std::size_t d, double phi, double alpha, LevyIntensity directing)
    : d_(d), phi_(phi), alpha_(alpha), directing_(std::move(directing)) {
    if (d_ < 1) throw DomainError("CoRM spec: dimension must be at least 1");
    if (!(phi_ > 0.0)) throw DomainError("CoRM spec: score shape must be positive");
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw DomainError("CoRM spec: centring mass must be positive");
}

CoRMSpec CoRMSpec::from_marginal(std::size_t d, double phi, const MarginalFamily& marginal, double centring_mass) {
    CoRMSpec spec(d, phi, centring_mass, directing_from_marginal(marginal, phi));
    spec.marginal_ = marginal;

    // The derived directing intensity must reproduce the marginal at a probe point.
    const double s = 1.0;
    const LevyIntensity target = marginal_intensity(marginal);
    const double mixed =
        spec.directing_
            .integrate([phi, s](double z) { return (phi - 1.0) * std::log(s / z) - s / z - std::lgamma(phi) - std::log(z); },
                       0.0, numerics::kInf, 8.0, -phi, 1e-10)
            .value;
    if (std::abs(mixed - target.density(s)) > 1e-6 * target.density(s))
        throw InvariantError("CoRM spec: directing intensity inconsistent with marginal family " + marginal.name());
    return spec;
}

CoRMSpec CoRMSpec::from_directing(std::size_t d, double phi, const DirectingFamily& directing, double centring_mass) {
    CoRMSpec spec(d, phi, centring_mass, directing_intensity(directing));
    spec.directing_family_ = directing;
    return spec;
}

CoRMSpec CoRMSpec::with_phi(double phi) const {
    if (marginal_) {
        CoRMSpec spec(d_, phi, alpha_, directing_from_marginal(*marginal_, phi));
        spec.marginal_ = marginal_;
        return spec;
    }
    CoRMSpec spec(d_, phi, alpha_, directing_);
    spec.directing_family_ = directing_family_;
    return spec;
}

CoRMSpec CoRMSpec::with_dimension(std::size_t d) const {
    CoRMSpec spec = *this;
    if (d < 1) throw DomainError("CoRM spec: dimension must be at least 1");
    spec.d_ = d;
    return spec;
}

double mgf_score(double z, double lambda, double phi) {
    if (!(lambda >= 0.0)) throw DomainError("mgf_score: lambda must be nonnegative");
    if (!(z > 0.0)) throw DomainError("mgf_score: z must be positive");
    return std::exp(-phi * std::log1p(z * lambda));
}

double laplace_exponent(const CoRMSpec& spec, const std::vector<double>& lambda) {
    require_dimension(spec, lambda.size(), "laplace_exponent");
    for (double l : lambda)
        if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("laplace_exponent: lambda must be finite and nonnegative");
    if (std::all_of(lambda.begin(), lambda.end(), [](double l) { return l == 0.0; })) return 0.0;
    const double phi = spec.phi();
    return spec.directing()
        .integrate(
            [&](double z) {
                const double one_minus = -std::expm1(-phi * sum_log1p(z, lambda));
                return one_minus > 0.0 ? std::log(one_minus) : kNegInf;
            },
            0.0, numerics::kInf, 1.0, 0.0)
        .value;
}

double UnivariateExponent::operator()(double lambda) const {
    return kind == Kind::Log1p ? std::log1p(lambda) : std::pow(lambda, sigma);
}

namespace {

using Series = std::vector<double>;

Series series_multiply(const Series& a, const Series& b) {
    Series out(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; i + j < a.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Taylor coefficients of (c + delta)^p in delta, truncated at `order`.
Series power_series(double c, double p, int order) {
    Series out(order + 1);
    double coeff = std::pow(c, p);
    for (int k = 0; k <= order; ++k) {
        out[k] = coeff;
        coeff *= (p - k) / ((k + 1) * c);
    }
    return out;
}

Series exponent_series(const UnivariateExponent& psi1, double x0, int order) {
    if (psi1.kind == UnivariateExponent::Kind::Power) return power_series(x0, psi1.sigma, order);
    Series out(order + 1);
    out[0] = std::log1p(x0);
    for (int k = 1; k <= order; ++k) out[k] = ((k % 2 == 1) ? 1.0 : -1.0) / (k * std::pow(1.0 + x0, k));
    return out;
}

} // namespace

double laplace_exponent_exponential_closed(const UnivariateExponent& psi1, const std::vector<double>& distinct,
                                           const std::vector<int>& multiplicity) {
    if (distinct.size() != multiplicity.size())
        throw DomainError("exponential closed form: values and multiplicities differ in length");
    std::vector<double> x;
    std::vector<int> n;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        if (!(distinct[i] >= 0.0)) throw DomainError("exponential closed form: values must be nonnegative");
        if (multiplicity[i] < 1) throw DomainError("exponential closed form: multiplicities must be positive");
        if (distinct[i] == 0.0) continue;
        x.push_back(distinct[i]);
        n.push_back(multiplicity[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[i] == x[j]) throw DomainError("exponential closed form: repeated values must be merged");
    if (x.empty()) return 0.0;

    // Confluent divided difference of x^(D-1) psi1(x) over the nodes, D = sum n.
    const int total = std::accumulate(n.begin(), n.end(), 0);
    double result = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int order = n[i] - 1;
        Series h = series_multiply(power_series(x[i], total - 1.0, order), exponent_series(psi1, x[i], order));
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j == i) continue;
            h = series_multiply(h, power_series(x[i] - x[j], -static_cast<double>(n[j]), order));
        }
        result += h[order];
    }
    return result;
}

double upsilon(const CoRMSpec& spec, const std::vector<double>& distinct) {
    return laplace_exponent(spec.with_dimension(std::max<std::size_t>(distinct.size(), 1)),
                            distinct.empty() ? std::vector<double>{0.0} : distinct);
}

double rho_density_mixture(const CoRMSpec& spec, const std::vector<double>& s) {
    require_dimension(spec, s.size(), "rho_density");
    for (double v : s)
        if (!(v > 0.0)) throw DomainError("rho_density: coordinates must be positive");
    const double phi = spec.phi();
    const double d = static_cast<double>(s.size());
    return spec.directing()
        .integrate(
            [&](double z) {
                double acc = -d * std::log(z);
                for (double sj : s) acc += (phi - 1.0) * std::log(sj / z) - sj / z - std::lgamma(phi);
                return acc;
            },
            0.0, numerics::kInf, 8.0, -d * phi, 1e-12)
        .value;
}

double rho_density(const CoRMSpec& spec, const std::vector<double>& s) {
    require_dimension(spec, s.size(), "rho_density");
    for (double v : s)
        if (!(v > 0.0)) throw DomainError("rho_density: coordinates must be positive");
    if (!spec.marginal()) return rho_density_mixture(spec, s);

    const double phi = spec.phi();
    const double d = static_cast<double>(s.size());
    const double x = std::accumulate(s.begin(), s.end(), 0.0);
    double log_prefactor = -(d - 1.0) * std::lgamma(phi);
    for (double sj : s) log_prefactor += (phi - 1.0) * std::log(sj);

    switch (spec.marginal()->kind) {
    case MarginalFamily::Kind::Gamma: {
        const double k = ((d - 2.0) * phi + 1.0) / 2.0;
        const double mu = -d * phi / 2.0;
        const double w = numerics::whittaker_w(k, mu, x);
        return std::exp(log_prefactor - 0.5 * (d * phi + 1.0) * std::log(x) - 0.5 * x) * w;
    }
    case MarginalFamily::Kind::SigmaStable: {
        const double sigma = spec.marginal()->sigma;
        const double log_c = std::log(sigma) + std::lgamma(sigma + d * phi) - std::lgamma(phi + sigma) -
                             std::lgamma(1.0 - sigma);
        return std::exp(log_c + log_prefactor - (sigma + d * phi) * std::log(x));
    }
    case MarginalFamily::Kind::GeneralizedGamma: return rho_density_mixture(spec, s);
    }
    throw UnsupportedError("rho_density: unknown marginal family");
}

double tau(int a, double z, double v, double phi) {
    if (a < 0) throw DomainError("tau: index must be nonnegative");
    if (!(v >= 0.0) || !(z > 0.0)) throw DomainError("tau: need z > 0 and v >= 0");
    return std::exp(std::lgamma(a + phi) - std::lgamma(phi) - (a + phi) * std::log1p(v * z));
}

double log_kappa(const CoRMSpec& spec, const std::vector<int>& a, const std::vector<double>& v) {
    require_dimension(spec, a.size(), "kappa");
    require_dimension(spec, v.size(), "kappa");
    const double phi = spec.phi();
    int total = 0;
    double log_const = 0.0;
    double tail_power = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] < 0) throw DomainError("kappa: counts must be nonnegative");
        if (!(v[j] >= 0.0) || !std::isfinite(v[j])) throw DomainError("kappa: v must be finite and nonnegative");
        total += a[j];
        log_const += std::lgamma(a[j] + phi) - std::lgamma(phi);
        if (v[j] > 0.0) tail_power -= a[j] + phi;
    }
    if (total == 0) throw DomainError("kappa: zero total count gives an infinite-mass integral");

    auto log_weight = [&](double z) {
        double acc = total * std::log(z);
        for (std::size_t j = 0; j < a.size(); ++j)
            if (v[j] > 0.0) acc -= (a[j] + phi) * std::log1p(v[j] * z);
        return acc;
    };

    // Rescale by the integrand's peak on a coarse log grid so large counts do not underflow.
    const LevyIntensity& nu = spec.directing();
    const double top = std::isfinite(nu.upper()) ? nu.upper() : 1e6;
    // Large v moves the peak far below the support scale, so the range is
    // also split at the peak and at each 1/v_j.
    double shift = kNegInf;
    double peak = top;
    for (int i = 0; i <= 64; ++i) {
        const double z = top * std::exp(-42.0 * i / 64.0) * (i == 0 ? 0.999 : 1.0);
        const double value = log_weight(z) + nu.log_density(z);
        if (value > shift) {
            shift = value;
            peak = z;
        }
    }
    if (!std::isfinite(shift)) shift = 0.0;
    std::vector<double> breaks{peak};
    for (double vj : v)
        if (vj > 0.0) breaks.push_back(1.0 / vj);
    const double value = nu.integrate_split([&](double z) { return log_weight(z) - shift; }, 0.0, nu.upper(),
                                            std::move(breaks), total, total + tail_power, 1e-11)
                             .value;
    if (!(value > 0.0)) throw DomainError("kappa: integral vanished");
    return log_const + shift + std::log(value);
}

double kappa(const CoRMSpec& spec, const std::vector<int>& a, const std::vector<double>& v) {
    return std::exp(log_kappa(spec, a, v));
}

double g_rho(const CoRMSpec& spec, const std::vector<int>& q, const std::vector<double>& lambda) {
    return kappa(spec, q, lambda);
}

double clayton_copula(double gamma, double y1, double y2) {
    if (!(gamma > 0.0)) throw DomainError("clayton_copula: gamma must be positive");
    if (!(y1 >= 0.0) || !(y2 >= 0.0)) throw DomainError("clayton_copula: arguments must be nonnegative");
    if (y1 == 0.0 || y2 == 0.0) return 0.0;
    if (std::isinf(y1)) return y2;
    if (std::isinf(y2)) return y1;
    // Factor out the smaller argument: (y1^-g + y2^-g)^(-1/g) = m (1 + (m/M)^g)^(-1/g).
    const double m = std::min(y1, y2);
    const double big = std::max(y1, y2);
    return m * std::exp(-std::log1p(std::pow(m / big, gamma)) / gamma);
}

namespace {

// Marginal tail integral and its inverse for the model's margins.
struct MarginalTail {
    const CoRMSpec& spec;
    std::optional<LevyIntensity> closed;

    explicit MarginalTail(const CoRMSpec& s) : spec(s) {
        if (s.marginal()) closed = marginal_intensity(*s.marginal());
    }

    double operator()(double x) const {
        if (closed) return closed->tail_integral(x);
        const double phi = spec.phi();
        return spec.directing()
            .integrate(
                [phi, x](double z) {
                    const double q = boost::math::gamma_q(phi, x / z);
                    return q > 0.0 ? std::log(q) : kNegInf;
                },
                0.0, numerics::kInf, 8.0, 0.0, 1e-11)
            .value;
    }

    double inverse(double y) const {
        if (closed) return closed->inverse_tail(y);
        const double log_y = std::log(y);
        auto f = [&](double u) {
            const double t = (*this)(std::exp(u));
            return (t > 0.0 ? std::log(t) : kNegInf) - log_y;
        };
        double lo = 0.0, hi = 0.0;
        if (f(0.0) > 0.0) {
            while (f(hi) > 0.0) {
                lo = hi;
                hi += 1.0;
                if (hi > 700.0) throw ConvergenceError("levy_copula: could not bracket inverse tail");
            }
        } else {
            while (f(lo) < 0.0) {
                hi = lo;
                lo -= 1.0;
                if (lo < -700.0) throw ConvergenceError("levy_copula: could not bracket inverse tail");
            }
        }
        return std::exp(numerics::bisect(f, lo, hi, 1e-14));
    }
};

} // namespace

double levy_copula(const CoRMSpec& spec, double y1, double y2) {
    if (spec.d() != 2) throw DomainError("levy_copula: requires a bivariate spec");
    if (!(y1 >= 0.0) || !(y2 >= 0.0)) throw DomainError("levy_copula: arguments must be nonnegative");
    if (y1 == 0.0 || y2 == 0.0) return 0.0;
    if (std::isinf(y1) && std::isinf(y2)) return numerics::kInf;
    const MarginalTail tail(spec);
    std::vector<double> x;
    for (double y : {y1, y2})
        if (std::isfinite(y)) x.push_back(tail.inverse(y));
    const double phi = spec.phi();
    return spec.directing()
        .integrate(
            [&](double z) {
                double acc = 0.0;
                for (double xj : x) {
                    const double q = boost::math::gamma_q(phi, xj / z);
                    if (!(q > 0.0)) return kNegInf;
                    acc += std::log(q);
                }
                return acc;
            },
            0.0, numerics::kInf, 8.0, 0.0, 1e-11)
        .value;
}

std::vector<MomentPartition> enumerate_moment_partitions(const std::vector<int>& q, int k) {
    if (q.empty()) throw DomainError("moment partitions: empty order vector");
    for (int qj : q)
        if (qj < 0) throw DomainError("moment partitions: orders must be nonnegative");
    const int size = std::accumulate(q.begin(), q.end(), 0);
    if (size > 6) throw DomainError("moment partitions: total order above 6 is not supported");
    std::vector<MomentPartition> out;
    if (k < 1 || k > size) return out;

    // Candidate score vectors: nonzero, dominated by q, ordered by (|s|, s_1, ..., s_d).
    std::vector<std::vector<int>> candidates;
    std::vector<int> s(q.size(), 0);
    for (;;) {
        std::size_t i = 0;
        while (i < q.size() && s[i] == q[i]) s[i++] = 0;
        if (i == q.size()) break;
        ++s[i];
        candidates.push_back(s);
    }
    std::sort(candidates.begin(), candidates.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        const int sa = std::accumulate(a.begin(), a.end(), 0);
        const int sb = std::accumulate(b.begin(), b.end(), 0);
        if (sa != sb) return sa < sb;
        return a < b;
    });

    MomentPartition current;
    std::vector<int> remaining = q;
    auto recurse = [&](auto&& self, std::size_t start, int blocks_left) -> void {
        const bool exhausted = std::all_of(remaining.begin(), remaining.end(), [](int r) { return r == 0; });
        if (exhausted) {
            if (blocks_left == 0) out.push_back(current);
            return;
        }
        if (blocks_left == 0) return;
        for (std::size_t c = start; c < candidates.size(); ++c) {
            const std::vector<int>& v = candidates[c];
            for (int eta = 1; eta <= blocks_left; ++eta) {
                bool fits = true;
                for (std::size_t j = 0; j < v.size(); ++j) fits = fits && eta * v[j] <= remaining[j];
                if (!fits) break;
                for (std::size_t j = 0; j < v.size(); ++j) remaining[j] -= eta * v[j];
                current.multiplicity.push_back(eta);
                current.exponents.push_back(v);
                self(self, c + 1, blocks_left - eta);
                current.multiplicity.pop_back();
                current.exponents.pop_back();
                for (std::size_t j = 0; j < v.size(); ++j) remaining[j] += eta * v[j];
            }
        }
    };
    recurse(recurse, 0, k);
    return out;
}

double directing_moment(const CoRMSpec& spec, int k) {
    if (k < 1) throw DomainError("directing_moment: order must be at least 1");
    const LevyIntensity& nu = spec.directing();
    if (const auto* p = std::get_if<PowerKernel>(&nu.form())) {
        if (k <= p->sigma) throw DomainError("directing_moment: divergent at zero");
        if (p->b > 0.0 && p->a == 0.0)
            return p->c * std::pow(p->b, p->sigma - k) * boost::math::beta(k - p->sigma, p->gamma + 1.0);
        if (p->b == 0.0 && p->a > 0.0) return p->c * std::pow(p->a, p->sigma - k) * std::tgamma(k - p->sigma);
        if (p->b == 0.0 && p->a == 0.0)
            throw DomainError("directing_moment: moment of an undamped power intensity diverges");
    }
    return nu.integrate([k](double z) { return k * std::log(z); }, 0.0, nu.upper(), k, k, 1e-12).value;
}

double mixed_moment(const CoRMSpec& spec, const std::vector<int>& q, double region_mass) {
    require_dimension(spec, q.size(), "mixed_moment");
    if (!(region_mass > 0.0)) throw DomainError("mixed_moment: region mass must be positive");
    const int size = std::accumulate(q.begin(), q.end(), 0);
    if (size == 0) return 1.0;
    const double phi = spec.phi();
    std::vector<double> moments(size + 1, 0.0);
    for (int k = 1; k <= size; ++k) moments[k] = directing_moment(spec, k);

    double total = 0.0;
    for (int k = 1; k <= size; ++k) {
        double inner = 0.0;
        for (const MomentPartition& part : enumerate_moment_partitions(q, k)) {
            double term = 1.0;
            for (std::size_t i = 0; i < part.blocks(); ++i) {
                double block = 1.0;
                int block_size = 0;
                for (int sl : part.exponents[i]) {
                    block *= std::exp(std::lgamma(phi + sl) - std::lgamma(phi) - std::lgamma(sl + 1.0));
                    block_size += sl;
                }
                block *= moments[block_size];
                term *= std::pow(block, part.multiplicity[i]) / std::tgamma(part.multiplicity[i] + 1.0);
            }
            inner += term;
        }
        total += std::pow(region_mass, k) * inner;
    }
    for (int qj : q) total *= std::tgamma(qj + 1.0);
    return total;
}

namespace {

numerics::QuadratureSpec half_line(double rel) {
    numerics::QuadratureSpec spec;
    spec.lower = 0.0;
    spec.upper = numerics::kInf;
    spec.relative_tolerance = rel;
    spec.absolute_tolerance = 1e-13;
    return spec;
}

} // namespace

double covariance_normalized(const CoRMSpec& spec, double mass_a, double mass_b, double mass_ab, double mass_total) {
    if (spec.d() != 2) throw DomainError("covariance_normalized: requires a bivariate spec");
    if (!(mass_a >= 0.0) || !(mass_b >= 0.0) || !(mass_ab >= 0.0) || !(mass_total > 0.0))
        throw DomainError("covariance_normalized: masses must be nonnegative");
    if (mass_ab > std::min(mass_a, mass_b) * (1.0 + 1e-12) || std::max(mass_a, mass_b) > mass_total * (1.0 + 1e-12))
        throw DomainError("covariance_normalized: inconsistent region masses");
    const double bracket = mass_ab - mass_a * mass_b / mass_total;
    if (bracket == 0.0) return 0.0;
    const double integral =
        numerics::integrate(
            [&](double l1) {
                return numerics::integrate(
                           [&](double l2) {
                               const std::vector<double> lambda{l1, l2};
                               return std::exp(log_kappa(spec, {1, 1}, lambda) -
                                               mass_total * laplace_exponent(spec, lambda));
                           },
                           half_line(1e-8))
                    .value;
            },
            half_line(1e-7))
            .value;
    return bracket * integral;
}

double variance_normalized(const CoRMSpec& spec, std::size_t j, double mass_a, double mass_total) {
    if (j >= spec.d()) throw DomainError("variance_normalized: dimension index out of range");
    if (!(mass_a >= 0.0) || !(mass_total > 0.0) || mass_a > mass_total * (1.0 + 1e-12))
        throw DomainError("variance_normalized: inconsistent region masses");
    const double bracket = mass_a - mass_a * mass_a / mass_total;
    if (bracket == 0.0) return 0.0;
    std::vector<int> a(spec.d(), 0);
    a[j] = 2;
    const double integral = numerics::integrate(
                                [&](double l) {
                                    std::vector<double> lambda(spec.d(), 0.0);
                                    lambda[j] = l;
                                    return l * std::exp(log_kappa(spec, a, lambda) -
                                                        mass_total * laplace_exponent(spec, lambda));
                                },
                                half_line(1e-9))
                                .value;
    return bracket * integral;
}

double correlation_normalized(const CoRMSpec& spec, double mass_a, double mass_b, double mass_ab, double mass_total) {
    const double cov = covariance_normalized(spec, mass_a, mass_b, mass_ab, mass_total);
    const double v1 = variance_normalized(spec, 0, mass_a, mass_total);
    const double v2 = variance_normalized(spec, 1, mass_b, mass_total);
    if (!(v1 > 0.0) || !(v2 > 0.0)) throw DomainError("correlation_normalized: degenerate variance");
    return cov / std::sqrt(v1 * v2);
}

} // namespace corm
