#include "corm/levy.hpp"

#include "corm/errors.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace corm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace

LevyIntensity::LevyIntensity(Form form) : form_(std::move(form)) {
    std::visit(Overloaded{
                   [this](const PowerKernel& k) {
                       if (!(k.c > 0.0)) throw DomainError("power intensity: scale must be positive");
                       if (!(k.sigma >= 0.0 && k.sigma < 1.0)) throw DomainError("power intensity: sigma must lie in [0,1)");
                       if (!(k.b >= 0.0) || !(k.a >= 0.0)) throw DomainError("power intensity: b and a must be nonnegative");
                       if (k.b > 0.0 && !(k.gamma > -1.0))
                           throw DomainError("power intensity: endpoint exponent must exceed -1");
                       upper_ = k.b > 0.0 ? 1.0 / k.b : numerics::kInf;
                       lower_exponent_ = -1.0 - k.sigma;
                       if (k.b > 0.0 && k.gamma != 0.0) upper_exponent_ = k.gamma;
                       damped_ = k.b > 0.0 || k.a > 0.0;
                       if (!damped_) tail_exponent_ = -1.0 - k.sigma;
                   },
                   [this](const BetaDirectedMarginal& k) {
                       if (!(k.theta > 0.0) || !(k.phi > 0.0))
                           throw DomainError("beta-directed marginal: theta and phi must be positive");
                       upper_ = numerics::kInf;
                       lower_exponent_ = -1.0;
                       damped_ = true;
                   },
                   [this](const BesselMarginal& k) {
                       if (!(k.c > 0.0) || !(k.a > 0.0) || !(k.phi > 0.0))
                           throw DomainError("bessel marginal: c, a and phi must be positive");
                       if (!(k.sigma >= 0.0 && k.sigma < 1.0)) throw DomainError("bessel marginal: sigma must lie in [0,1)");
                       upper_ = numerics::kInf;
                       lower_exponent_ = -1.0 - k.sigma;
                       damped_ = true;
                   },
               },
               form_);
}

double LevyIntensity::log_density(double z) const {
    if (!(z > 0.0) || !(z < upper_)) return kNegInf;
    return std::visit(
        Overloaded{
            [z](const PowerKernel& k) {
                double v = std::log(k.c) - (1.0 + k.sigma) * std::log(z) - k.a * z;
                if (k.b > 0.0 && k.gamma != 0.0) v += k.gamma * std::log1p(-k.b * z);
                return v;
            },
            [z](const BetaDirectedMarginal& k) {
                const double u = numerics::kummer_u(k.theta, k.phi + 1.0, z);
                if (!(u > 0.0)) return kNegInf;
                return std::lgamma(k.theta + 1.0) - std::lgamma(k.phi) + (k.phi - 1.0) * std::log(z) - z + std::log(u);
            },
            [z](const BesselMarginal& k) {
                const double nu = k.sigma + k.phi;
                const double kb = numerics::bessel_k(nu, 2.0 * std::sqrt(k.a * z));
                if (!(kb > 0.0)) return kNegInf;
                return std::log(2.0 * k.c) - std::lgamma(k.phi) + (0.5 * (k.phi - k.sigma) - 1.0) * std::log(z) +
                       0.5 * nu * std::log(k.a) + std::log(kb);
            },
        },
        form_);
}

double LevyIntensity::density(double z) const { return std::exp(log_density(z)); }

numerics::IntegralResult LevyIntensity::integrate(const std::function<double(double)>& log_weight, double lo, double hi,
                                                  double lower_offset, double tail_offset,
                                                  double relative_tolerance) const {
    if (!(lo >= 0.0) || !(hi > lo)) throw DomainError("intensity integral: need 0 <= lo < hi");
    if (hi > upper_) hi = upper_;
    if (!(hi > lo)) return {};

    auto integrand = [&](double z) {
        const double lw = log_weight(z);
        if (lw == kNegInf) return 0.0;
        const double ld = log_density(z);
        if (ld == kNegInf) return 0.0;
        return std::exp(lw + ld);
    };

    numerics::QuadratureSpec upper_part;
    upper_part.relative_tolerance = relative_tolerance;
    upper_part.absolute_tolerance = 1e-300;
    const bool reaches_end = hi == upper_;
    if (reaches_end && std::isfinite(upper_) && upper_exponent_) upper_part.upper_exponent = upper_exponent_;
    if (reaches_end && std::isinf(upper_) && !damped_) {
        const double p = *tail_exponent_ + tail_offset;
        if (!(p < -1.0)) throw DomainError("intensity integral diverges at infinity");
        upper_part.upper_exponent = p;
    }

    // Near a finite support end, integrate over the gap w = upper - z so that
    // (1 - b z) = b w keeps full relative precision. For gamma < 0 most of the
    // mass can sit closer to the end than double spacing resolves in z.
    const auto* power = std::get_if<PowerKernel>(&form_);
    if (power && power->b > 0.0 && lo < 0.5 * upper_ && hi > 0.5 * upper_) {
        const double mid = 0.5 * upper_;
        numerics::IntegralResult r = integrate(log_weight, lo, mid, lower_offset, tail_offset, relative_tolerance);
        const numerics::IntegralResult rest =
            integrate(log_weight, mid, hi, lower_offset, tail_offset, relative_tolerance);
        r.value += rest.value;
        r.error_estimate += rest.error_estimate;
        r.evaluations += rest.evaluations;
        return r;
    }
    if (const auto* k = power; k && k->b > 0.0 && lo >= 0.5 * upper_) {
        const double top = upper_;
        // Smooth part of the density at gap w, without the factor (b w)^gamma.
        auto smooth = [&, k](double w) {
            const double z = top - w;
            const double lw = log_weight(z);
            if (lw == kNegInf) return 0.0;
            return std::exp(lw + std::log(k->c) - (1.0 + k->sigma) * std::log(z) - k->a * z);
        };
        numerics::QuadratureSpec gap;
        gap.relative_tolerance = relative_tolerance;
        gap.absolute_tolerance = 1e-300;
        if (k->gamma < 0.0) {
            // t = w^(1+gamma) absorbs w^gamma exactly; for gamma near -1 the mass
            // spreads over more decades of w than doubles can represent.
            const double e = 1.0 + k->gamma;
            const double scale = std::pow(k->b, k->gamma) / e;
            gap.lower = std::pow(top - hi, e);
            gap.upper = std::pow(top - lo, e);
            return numerics::integrate([&](double t) { return scale * smooth(std::pow(t, 1.0 / e)); }, gap);
        }
        gap.lower = top - hi;
        gap.upper = top - lo;
        const double log_b = std::log(k->b);
        return numerics::integrate(
            [&](double w) {
                if (!(w > 0.0)) return 0.0;
                const double f = smooth(w);
                return k->gamma == 0.0 || f == 0.0 ? f : f * std::exp(k->gamma * (log_b + std::log(w)));
            },
            gap);
    }

    if (lo == 0.0) {
        const double p = lower_exponent_ + lower_offset;
        if (!(p > -1.0)) throw DomainError("intensity integral diverges at zero");
        upper_part.lower = 0.0;
        upper_part.upper = hi;
        if (p < 0.0) upper_part.lower_exponent = p;
        return numerics::integrate(integrand, upper_part);
    }

    // Wide ranges away from zero: integrate the small-z part on a log scale.
    const double knee = std::min(1.0, hi);
    if (lo < 1e-2 * knee) {
        numerics::QuadratureSpec log_part;
        log_part.relative_tolerance = relative_tolerance;
        log_part.absolute_tolerance = 1e-300;
        log_part.lower = std::log(lo);
        log_part.upper = std::log(knee);
        if (knee == hi) log_part.upper_exponent = upper_part.upper_exponent;
        auto on_log = [&](double u) {
            const double z = std::exp(u);
            const double lw = log_weight(z);
            if (lw == kNegInf) return 0.0;
            const double ld = log_density(z);
            if (ld == kNegInf) return 0.0;
            return std::exp(lw + ld + u);
        };
        numerics::IntegralResult r = numerics::integrate(on_log, log_part);
        if (knee < hi) {
            upper_part.lower = knee;
            upper_part.upper = hi;
            const numerics::IntegralResult rest = numerics::integrate(integrand, upper_part);
            r.value += rest.value;
            r.error_estimate += rest.error_estimate;
            r.evaluations += rest.evaluations;
        }
        return r;
    }
    upper_part.lower = lo;
    upper_part.upper = hi;
    return numerics::integrate(integrand, upper_part);
}

numerics::IntegralResult LevyIntensity::integrate_split(const std::function<double(double)>& log_weight, double lo,
                                                        double hi, std::vector<double> breaks, double lower_offset,
                                                        double tail_offset, double relative_tolerance) const {
    hi = std::min(hi, upper_);
    std::erase_if(breaks, [&](double b) { return !(b > lo && b < hi); });
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    breaks.push_back(hi);
    numerics::IntegralResult total;
    double from = lo;
    for (double to : breaks) {
        const numerics::IntegralResult r = integrate(log_weight, from, to, lower_offset, tail_offset, relative_tolerance);
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.evaluations += r.evaluations;
        from = to;
    }
    return total;
}

double LevyIntensity::tail_integral(double x) const {
    if (!(x > 0.0)) return total_mass();
    if (x >= upper_) return 0.0;
    if (const auto* k = std::get_if<PowerKernel>(&form_)) {
        if (k->b == 0.0 && k->a == 0.0) return k->c * std::pow(x, -k->sigma) / k->sigma;
        if (k->b == 0.0 && k->sigma == 0.0) return k->c * boost::math::expint(1, k->a * x);
        if (k->sigma == 0.0 && k->gamma == 0.0 && k->a == 0.0) return -k->c * std::log(k->b * x);
    }
    return integrate([](double) { return 0.0; }, x, upper_).value;
}

bool LevyIntensity::closed_form_tail() const {
    const auto* k = std::get_if<PowerKernel>(&form_);
    if (!k) return false;
    return (k->b == 0.0 && k->a == 0.0) || (k->sigma == 0.0 && k->gamma == 0.0 && k->a == 0.0);
}

double LevyIntensity::total_mass() const {
    if (lower_exponent_ <= -1.0) return numerics::kInf;
    return integrate([](double) { return 0.0; }, 0.0, upper_).value;
}

double LevyIntensity::inverse_tail(double level) const {
    if (std::isnan(level) || level < 0.0) throw DomainError("inverse_tail: level must be nonnegative");
    if (std::isinf(level)) return 0.0;
    if (level == 0.0) return upper_;
    if (const auto* k = std::get_if<PowerKernel>(&form_)) {
        if (k->b == 0.0 && k->a == 0.0) return std::pow(k->sigma * level / k->c, -1.0 / k->sigma);
        if (k->sigma == 0.0 && k->gamma == 0.0 && k->a == 0.0) return std::exp(-level / k->c) / k->b;
    }
    const double log_level = std::log(level);
    auto f = [&](double u) {
        const double t = tail_integral(std::exp(u));
        return (t > 0.0 ? std::log(t) : kNegInf) - log_level;
    };
    // Grow a bracket geometrically from z = 1 (or the middle of a short support).
    double hi_u = std::log(std::min(1.0, 0.5 * upper_));
    double lo_u = hi_u;
    if (f(hi_u) > 0.0) {
        // U(z) too large: move right toward the support end.
        for (int i = 0;; ++i) {
            if (i > 200) throw ConvergenceError("inverse_tail: could not bracket level");
            lo_u = hi_u;
            hi_u = std::isfinite(upper_) ? std::log(0.5 * (std::exp(hi_u) + upper_)) : hi_u + 1.0;
            if (f(hi_u) <= 0.0) break;
            if (std::isfinite(upper_) && upper_ - std::exp(hi_u) < 1e-15 * upper_) return std::exp(hi_u);
        }
    } else {
        for (int i = 0;; ++i) {
            if (i > 2000) throw ConvergenceError("inverse_tail: could not bracket level");
            hi_u = lo_u;
            lo_u -= 1.0;
            if (f(lo_u) >= 0.0) break;
        }
    }
    return std::exp(numerics::bisect(f, lo_u, hi_u, 1e-14));
}

std::string LevyIntensity::describe() const {
    std::ostringstream out;
    std::visit(Overloaded{
                   [&out](const PowerKernel& k) {
                       out << k.c << " z^(-1-" << k.sigma << ")";
                       if (k.b > 0.0) out << " (1-" << k.b << "z)^" << k.gamma;
                       if (k.a > 0.0) out << " e^(-" << k.a << "z)";
                   },
                   [&out](const BetaDirectedMarginal& k) {
                       out << "beta(" << k.theta << ")-directed marginal, phi=" << k.phi;
                   },
                   [&out](const BesselMarginal& k) {
                       out << "bessel marginal c=" << k.c << " sigma=" << k.sigma << " a=" << k.a << " phi=" << k.phi;
                   },
               },
               form_);
    return out.str();
}

} // namespace corm
