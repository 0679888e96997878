#pragma once

#include "corm/levy.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace corm {

struct MarginalFamily {
    enum class Kind { Gamma, SigmaStable, GeneralizedGamma };
    Kind kind = Kind::Gamma;
    double sigma = 0.0;
    double a = 0.0;

    static MarginalFamily gamma() { return {Kind::Gamma, 0.0, 0.0}; }
    static MarginalFamily sigma_stable(double sigma) { return {Kind::SigmaStable, sigma, 0.0}; }
    static MarginalFamily generalized_gamma(double sigma, double a) { return {Kind::GeneralizedGamma, sigma, a}; }

    void validate() const;
    std::string name() const;
};

/// Directing families with their own (phi-free) parameterization.
struct DirectingFamily {
    enum class Kind { Beta, Gamma, SigmaStable, GeneralizedGamma };
    Kind kind = Kind::Gamma;
    double theta = 1.0;
    double sigma = 0.0;
    double a = 1.0;

    static DirectingFamily beta(double theta) { return {Kind::Beta, theta, 0.0, 1.0}; }
    static DirectingFamily gamma() { return {Kind::Gamma, 1.0, 0.0, 1.0}; }
    static DirectingFamily sigma_stable(double sigma) { return {Kind::SigmaStable, 1.0, sigma, 0.0}; }
    static DirectingFamily generalized_gamma(double sigma, double a) { return {Kind::GeneralizedGamma, 1.0, sigma, a}; }
};

/// Levy intensity of the named marginal process.
LevyIntensity marginal_intensity(const MarginalFamily& family);
/// Directing intensity that yields `family` as marginal under Ga(phi) scores.
LevyIntensity directing_from_marginal(const MarginalFamily& family, double phi);
/// Directing intensity of a directing family.
LevyIntensity directing_intensity(const DirectingFamily& family);
/// Closed-form marginal intensity produced by a directing family and Ga(phi) scores.
LevyIntensity marginal_from_directing(const DirectingFamily& family, double phi);

/// Compound random measure prior: d dimensions, Ga(phi) scores, directing
/// intensity nu*, centring mass alpha.
class CoRMSpec {
public:
    static CoRMSpec from_marginal(std::size_t d, double phi, const MarginalFamily& marginal, double centring_mass = 1.0);
    static CoRMSpec from_directing(std::size_t d, double phi, const DirectingFamily& directing,
                                   double centring_mass = 1.0);

    std::size_t d() const { return d_; }
    double phi() const { return phi_; }
    double centring_mass() const { return alpha_; }
    const LevyIntensity& directing() const { return directing_; }
    const std::optional<MarginalFamily>& marginal() const { return marginal_; }
    const std::optional<DirectingFamily>& directing_family() const { return directing_family_; }

    /// Same prior with a new score shape.  Specs built from a marginal family
    /// keep the marginal and re-derive the directing intensity.
    CoRMSpec with_phi(double phi) const;
    CoRMSpec with_dimension(std::size_t d) const;

private:
    CoRMSpec(std::size_t d, double phi, double alpha, LevyIntensity directing);

    std::size_t d_;
    double phi_;
    double alpha_;
    LevyIntensity directing_;
    std::optional<MarginalFamily> marginal_;
    std::optional<DirectingFamily> directing_family_;
};

/// (1 + z lambda)^(-phi).
double mgf_score(double z, double lambda, double phi);

/// Integral of (1 - prod_j (1 + z lambda_j)^(-phi)) nu*(z) dz.
double laplace_exponent(const CoRMSpec& spec, const std::vector<double>& lambda);

/// Univariate exponent with a known closed form, used by the exponential-score
/// reduction.
struct UnivariateExponent {
    enum class Kind { Log1p, Power };
    Kind kind = Kind::Log1p;
    double sigma = 0.5;

    static UnivariateExponent log1p() { return {Kind::Log1p, 0.0}; }
    static UnivariateExponent power(double sigma) { return {Kind::Power, sigma}; }
    double operator()(double lambda) const;
};

/// Closed-form exponent for unit-shape scores: distinct values `distinct`
/// with multiplicities `multiplicity`.
double laplace_exponent_exponential_closed(const UnivariateExponent& psi1, const std::vector<double>& distinct,
                                           const std::vector<int>& multiplicity);

/// Exponent evaluated at the vector holding each distinct value once.
double upsilon(const CoRMSpec& spec, const std::vector<double>& distinct);

/// Multivariate intensity rho_d(s) of the compound measure.
double rho_density(const CoRMSpec& spec, const std::vector<double>& s);
/// Same quantity by quadrature of the score mixture over nu*.
double rho_density_mixture(const CoRMSpec& spec, const std::vector<double>& s);

/// Gamma(a+phi)/Gamma(phi) (1 + v z)^(-a-phi).
double tau(int a, double z, double v, double phi);

/// Integral of z^|a| prod_j tau_{a_j}(z, v_j) nu*(z) dz; requires |a| >= 1.
double kappa(const CoRMSpec& spec, const std::vector<int>& a, const std::vector<double>& v);
double log_kappa(const CoRMSpec& spec, const std::vector<int>& a, const std::vector<double>& v);

/// (-1)^|q| times the q-th mixed derivative of exp-weighted exponent kernel;
/// equals kappa(q, lambda).
double g_rho(const CoRMSpec& spec, const std::vector<int>& q, const std::vector<double>& lambda);

/// Levy copula of a bivariate compound measure (infinite arguments allowed).
double levy_copula(const CoRMSpec& spec, double y1, double y2);
double clayton_copula(double gamma, double y1, double y2);

struct MomentPartition {
    std::vector<int> multiplicity;            // eta_1..eta_j
    std::vector<std::vector<int>> exponents;  // s_1..s_j, strictly increasing

    std::size_t blocks() const { return multiplicity.size(); }
};

/// All ways to write q = sum_i eta_i s_i with sum_i eta_i = k over distinct
/// nonzero score vectors ordered lexicographically on (|s|, s_1, ..., s_d).
std::vector<MomentPartition> enumerate_moment_partitions(const std::vector<int>& q, int k);

/// Integral of z^k nu*(z) dz.
double directing_moment(const CoRMSpec& spec, int k);

/// E[prod_j mu_j(A)^q_j] for a region with centring mass `region_mass`.
double mixed_moment(const CoRMSpec& spec, const std::vector<int>& q, double region_mass);

/// Cov[p_1(A), p_2(B)] for the normalized bivariate measure.
double covariance_normalized(const CoRMSpec& spec, double mass_a, double mass_b, double mass_ab, double mass_total);
/// Var[p_j(A)].
double variance_normalized(const CoRMSpec& spec, std::size_t j, double mass_a, double mass_total);
double correlation_normalized(const CoRMSpec& spec, double mass_a, double mass_b, double mass_ab, double mass_total);

} // namespace corm
