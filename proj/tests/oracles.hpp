#pragma once

// Reference values computed with Boost's double-exponential quadrature, kept
// separate from the library's own Gauss-Kronrod integrator.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include <cmath>
#include <limits>

namespace oracle {

template <class F>
double quad(F f, double a, double b) {
    if (std::isinf(b)) {
        boost::math::quadrature::exp_sinh<double> integrator;
        return integrator.integrate([&](double t) { return f(a + t); }, 0.0, std::numeric_limits<double>::infinity());
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, a, b);
}

/// Splits (a, inf) at `knee` to keep both halves well resolved.
template <class F>
double quad_half_line(F f, double knee = 1.0) {
    return quad(f, 0.0, knee) + quad(f, knee, std::numeric_limits<double>::infinity());
}

inline double bessel_k(double nu, double x) {
    return quad(
        [&](double t) {
            const double c = -x * std::cosh(t);
            return 0.5 * (std::exp(c + nu * t) + std::exp(c - nu * t));
        },
        0.0,
                std::numeric_limits<double>::infinity());
}

inline double kummer_u(double a, double b, double x) {
    if (a > 0.0) {
        return quad_half_line([&](double t) {
                   return std::exp(-x * t + (a - 1.0) * std::log(t) + (b - a - 1.0) * std::log1p(t));
               }) /
               std::tgamma(a);
    }
    // Non-integer b: U as a combination of Kummer M functions.
    return std::tgamma(1.0 - b) / std::tgamma(a - b + 1.0) * boost::math::hypergeometric_1F1(a, b, x) +
           std::tgamma(b - 1.0) / std::tgamma(a) * std::pow(x, 1.0 - b) *
               boost::math::hypergeometric_1F1(a - b + 1.0, 2.0 - b, x);
}

inline double whittaker_w(double k, double mu, double x) {
    const double p = mu - k + 0.5;
    const double integral = quad_half_line([&](double t) {
        return std::exp(-x * t + (p - 1.0) * std::log(t) + (mu + k - 0.5) * std::log1p(t));
    });
    return std::pow(x, mu + 0.5) * std::exp(-0.5 * x) * integral / std::tgamma(p);
}

} // namespace oracle
