#pragma once

#include "corm/numerics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace corm {

/// c z^(-1-sigma) (1 - b z)^gamma e^(-a z) on (0, 1/b), or (0, inf) when b = 0.
struct PowerKernel {
    double c = 1.0;
    double sigma = 0.0;
    double b = 0.0;
    double gamma = 0.0;
    double a = 0.0;
};

/// Marginal obtained from a Beta(theta) directing intensity with Ga(phi) scores:
/// Gamma(theta+1)/Gamma(phi) s^(phi-1) e^(-s) U(theta, phi+1, s).
struct BetaDirectedMarginal {
    double theta = 1.0;
    double phi = 1.0;
};

/// Marginal obtained from c z^(-1-sigma) e^(-a z) directing with Ga(phi) scores:
/// 2c/Gamma(phi) s^((phi-sigma)/2-1) a^((sigma+phi)/2) K_(sigma+phi)(2 sqrt(a s)).
struct BesselMarginal {
    double c = 1.0;
    double sigma = 0.0;
    double a = 1.0;
    double phi = 1.0;
};

/// One-dimensional Levy intensity on (0, upper).
class LevyIntensity {
public:
    using Form = std::variant<PowerKernel, BetaDirectedMarginal, BesselMarginal>;

    explicit LevyIntensity(Form form);

    const Form& form() const { return form_; }

    double log_density(double z) const;
    double density(double z) const;

    /// Right end of the support (infinity when unbounded).
    double upper() const { return upper_; }
    /// Density behaves like z^p near 0.
    double lower_exponent() const { return lower_exponent_; }
    /// Exponent of (upper - z) at a finite upper end, or nullopt.
    std::optional<double> upper_exponent() const { return upper_exponent_; }
    /// Power-law decay exponent at infinity when there is no exponential damping.
    std::optional<double> tail_exponent() const { return tail_exponent_; }
    bool exponentially_damped() const { return damped_; }

    /// Integral of exp(log_weight(z)) * density(z) over (lo, hi).
    ///
    /// `lower_offset` is the power of z carried by the weight near 0 and
    /// `tail_offset` its power at infinity; both refine the singularity hints.
    numerics::IntegralResult integrate(const std::function<double(double)>& log_weight, double lo, double hi,
                                       double lower_offset = 0.0, double tail_offset = 0.0,
                                       double relative_tolerance = 1e-11) const;

    /// Same integral split at the points of `breaks` inside (lo, hi); used
    /// when the weight has features (peaks, 1/v scales) far below the support
    /// scale that a single adaptive pass could miss.
    numerics::IntegralResult integrate_split(const std::function<double(double)>& log_weight, double lo, double hi,
                                             std::vector<double> breaks, double lower_offset = 0.0,
                                             double tail_offset = 0.0, double relative_tolerance = 1e-11) const;

    /// U(x) = integral of the density over (x, upper).
    double tail_integral(double x) const;
    /// Solves U(x) = level by bisection on log U; returns 0 for an infinite level
    /// and the support's right end for level 0.
    double inverse_tail(double level) const;
    /// True when tail_integral and inverse_tail have closed forms.
    bool closed_form_tail() const;
    /// Total mass (infinite for the intensities of interest).
    double total_mass() const;

    std::string describe() const;

private:
    Form form_;
    double upper_;
    double lower_exponent_;
    std::optional<double> upper_exponent_;
    std::optional<double> tail_exponent_;
    bool damped_;
};

} // namespace corm
