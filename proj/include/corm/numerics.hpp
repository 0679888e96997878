#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>

namespace corm::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Integration domain, tolerances and endpoint behaviour.
///
/// `lower_exponent` p says the integrand behaves like (z - lower)^p near the
/// lower limit (p > -1).  For a finite upper limit `upper_exponent` is the
/// exponent of (upper - z); for an infinite upper limit it is the power-law
/// decay z^p at infinity (p < -1).  Hints with p >= 0 are ignored.
struct QuadratureSpec {
    double lower = 0.0;
    double upper = 1.0;
    double relative_tolerance = 1e-10;
    double absolute_tolerance = 1e-14;
    std::optional<double> lower_exponent;
    std::optional<double> upper_exponent;
    std::size_t max_evaluations = 100000;
};

struct IntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 21-point Gauss-Kronrod quadrature.
///
/// Infinite upper limits are mapped through z = lower + t/(1-t); hinted
/// endpoint singularities are removed by a power substitution
/// z - a = h w^(1/(1+p)).  Throws QuadratureError (carrying the best estimate)
/// when the evaluation budget is exhausted and DomainError when the integrand
/// returns NaN or infinity.
IntegralResult integrate(const Integrand& f, const QuadratureSpec& spec);

/// Modified Bessel function of the second kind K_order(x), x > 0.
double bessel_k(double order, double x);

/// Confluent hypergeometric function of the second kind U(a, b, x), x > 0.
///
/// Uses the Laplace-integral representation for a > 0, Kummer's
/// transformation U(a,b,x) = x^(1-b) U(a-b+1, 2-b, x) when a-b+1 > 0, the
/// terminating polynomial for non-positive integer a, and downward
/// recurrence in a otherwise.
double kummer_u(double a, double b, double x);

/// Whittaker function W_{k,mu}(x) = e^{-x/2} x^{mu+1/2} U(mu-k+1/2, 1+2mu, x).
double whittaker_w(double k, double mu, double x);

/// Bisection for an increasing or decreasing function with a sign change on
/// [lo, hi].  Stops when the bracket is narrower than `x_tolerance` (relative
/// to |x| when |x| > 1).
double bisect(const std::function<double(double)>& f, double lo, double hi, double x_tolerance = 1e-13,
              int max_iterations = 400);

} // namespace corm::numerics
