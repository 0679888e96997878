#include "doctest.h"

#include "corm/corm.hpp"
#include "corm/errors.hpp"
#include "oracles.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <random>

using namespace corm;
using doctest::Approx;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Independent quadrature of the score mixture z^-d prod f(s_j / z) nu*(z).
double mixture_oracle(const CoRMSpec& spec, const std::vector<double>& s) {
    const double phi = spec.phi();
    auto f = [&](double z) {
        double lw = -static_cast<double>(s.size()) * std::log(z);
        for (double sj : s) lw += (phi - 1.0) * std::log(sj / z) - sj / z - std::lgamma(phi);
        const double ld = spec.directing().log_density(z);
        return std::isfinite(ld) ? std::exp(lw + ld) : 0.0;
    };
    const double top = spec.directing().upper();
    return std::isfinite(top) ? oracle::quad(f, 0.0, top) : oracle::quad_half_line(f);
}

double psi_oracle(const CoRMSpec& spec, const std::vector<double>& lambda) {
    auto f = [&](double z) {
        double acc = 0.0;
        for (double l : lambda) acc += std::log1p(z * l);
        const double w = -std::expm1(-spec.phi() * acc);
        return w > 0.0 ? std::exp(std::log(w) + spec.directing().log_density(z)) : 0.0;
    };
    const double top = spec.directing().upper();
    return std::isfinite(top) ? oracle::quad(f, 0.0, top) : oracle::quad_half_line(f);
}

} // namespace

TEST_CASE("mgf_score and tau") {
    CHECK(mgf_score(0.5, 2.0, 1.0) == Approx(0.5));
    CHECK(mgf_score(0.3, 0.0, 2.5) == 1.0);
    CHECK(mgf_score(1.0, 1.0, 2.0) == Approx(0.25));
    CHECK_THROWS_AS(mgf_score(1.0, -1.0, 1.0), DomainError);
    CHECK(tau(0, 0.7, 1.3, 2.0) == Approx(mgf_score(0.7, 1.3, 2.0)));
    CHECK(tau(3, 0.4, 0.0, 2.0) == Approx(24.0));
    CHECK(tau(1, 1.0, 1.0, 1.0) == Approx(0.25));
}

TEST_CASE("directing intensities follow from their marginals") {
    const LevyIntensity g = directing_from_marginal(MarginalFamily::gamma(), 1.0);
    CHECK(g.upper() == Approx(1.0));
    CHECK(g.density(0.3) == Approx(1.0 / 0.3));

    // sigma-stable, sigma = 0.5, phi = 1: sigma * Gamma(1) / (Gamma(1.5) Gamma(0.5))
    const LevyIntensity st = directing_from_marginal(MarginalFamily::sigma_stable(0.5), 1.0);
    CHECK(st.density(1.0) == Approx(0.5 * 0.63662).epsilon(1e-5));

    // Generalized gamma directing approaches the stable row as a -> 0.
    const LevyIntensity gg = directing_from_marginal(MarginalFamily::generalized_gamma(0.4, 1e-9), 1.7);
    const LevyIntensity stable = directing_from_marginal(MarginalFamily::sigma_stable(0.4), 1.7);
    for (double z : {0.01, 0.5, 3.0}) CHECK(gg.density(z) / stable.density(z) == Approx(1.0).epsilon(1e-7));

    CHECK_THROWS_AS(directing_from_marginal(MarginalFamily::sigma_stable(1.2), 1.0), DomainError);
}

TEST_CASE("every directing intensity reproduces its marginal") {
    const MarginalFamily families[] = {MarginalFamily::gamma(), MarginalFamily::sigma_stable(0.3),
                                       MarginalFamily::generalized_gamma(0.6, 1.5)};
    for (const auto& family : families)
        for (double phi : {0.5, 1.0, 2.0}) {
            const CoRMSpec spec = CoRMSpec::from_marginal(1, phi, family);
            const LevyIntensity target = marginal_intensity(family);
            for (double s : {0.01, 0.3, 2.0, 9.0}) {
                CHECK(rho_density_mixture(spec, {s}) == Approx(target.density(s)).epsilon(1e-7));
                CHECK(mixture_oracle(spec, {s}) == Approx(target.density(s)).epsilon(1e-7));
            }
        }
}

TEST_CASE("marginal_from_directing closed forms") {
    // Beta(theta = phi) directing gives phi times the gamma-process intensity.
    for (double phi : {0.6, 1.0, 2.4}) {
        const LevyIntensity m = marginal_from_directing(DirectingFamily::beta(phi), phi);
        for (double s : {0.05, 1.0, 4.0}) CHECK(m.density(s) == Approx(phi * std::exp(-s) / s).epsilon(1e-8));
    }
    // sigma-stable directing
    const LevyIntensity st = marginal_from_directing(DirectingFamily::sigma_stable(0.5), 2.0);
    const double c = std::tgamma(2.5) / std::tgamma(2.0) * 0.5 / std::tgamma(0.5);
    CHECK(st.density(1.7) == Approx(c * std::pow(1.7, -1.5)).epsilon(1e-12));
    // gamma directing, phi = 1, s = 1 -> 2 K_1(2)
    const LevyIntensity gd = marginal_from_directing(DirectingFamily::gamma(), 1.0);
    CHECK(gd.density(1.0) == Approx(0.27973).epsilon(1e-4));

    // Every closed form against the mixture over its own directing intensity.
    const DirectingFamily directing[] = {DirectingFamily::beta(0.7), DirectingFamily::beta(2.5),
                                         DirectingFamily::gamma(), DirectingFamily::generalized_gamma(0.35, 2.0)};
    for (const auto& fam : directing)
        for (double phi : {0.5, 1.3}) {
            const CoRMSpec spec = CoRMSpec::from_directing(1, phi, fam);
            const LevyIntensity m = marginal_from_directing(fam, phi);
            for (double s : {0.02, 0.8, 5.0}) CHECK(m.density(s) == Approx(mixture_oracle(spec, {s})).epsilon(1e-6));
        }
}

TEST_CASE("generalized gamma directing: small-s behaviour") {
    for (double sigma : {0.25, 0.7})
        for (double phi : {0.5, 2.0}) {
            const LevyIntensity m = marginal_from_directing(DirectingFamily::generalized_gamma(sigma, 1.0), phi);
            const double s = 1e-6;
            const double limit = sigma * std::tgamma(sigma + phi) / (std::tgamma(phi) * std::tgamma(1.0 - sigma));
            CHECK(m.density(s) * std::pow(s, 1.0 + sigma) == Approx(limit).epsilon(0.02));
        }
}

TEST_CASE("tail integral and its inverse") {
    const LevyIntensity intensities[] = {
        marginal_intensity(MarginalFamily::gamma()),
        marginal_intensity(MarginalFamily::generalized_gamma(0.5, 2.0)),
        directing_from_marginal(MarginalFamily::gamma(), 0.5),
        directing_from_marginal(MarginalFamily::generalized_gamma(0.3, 1.0), 2.0),
        marginal_from_directing(DirectingFamily::beta(1.5), 1.0),
    };
    for (const auto& nu : intensities) {
        double previous = kInf;
        for (double x : {1e-4, 0.01, 0.2, 0.9}) {
            if (x >= nu.upper()) continue;
            const double u = nu.tail_integral(x);
            CHECK(u < previous);
            previous = u;
            CHECK(nu.inverse_tail(u) == Approx(x).epsilon(1e-9));
        }
        CHECK(nu.total_mass() == kInf);
    }
    const LevyIntensity g = marginal_intensity(MarginalFamily::gamma());
    CHECK(g.tail_integral(0.5) == Approx(boost::math::expint(1, 0.5)).epsilon(1e-13));
    const LevyIntensity beta_directing = directing_from_marginal(MarginalFamily::gamma(), 1.7);
    CHECK(beta_directing.tail_integral(0.3) ==
          Approx(oracle::quad([](double z) { return std::pow(1.0 - z, 0.7) / z; }, 0.3, 1.0)).epsilon(1e-9));
}

TEST_CASE("laplace exponent: marginal oracles") {
    for (double phi : {0.5, 1.0, 3.0}) {
        const CoRMSpec spec = CoRMSpec::from_marginal(1, phi, MarginalFamily::gamma());
        CHECK(laplace_exponent(spec, {1.0}) == Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(laplace_exponent(spec, {0.0}) == 0.0);
    }
    const CoRMSpec stable = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::sigma_stable(0.5));
    CHECK(laplace_exponent(stable, {4.0}) == Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(laplace_exponent(stable, {-1.0}), DomainError);
}

TEST_CASE("laplace exponent: concave nondecreasing in each coordinate") {
    const CoRMSpec spec = CoRMSpec::from_marginal(2, 1.5, MarginalFamily::generalized_gamma(0.4, 1.0));
    const double h = 0.25;
    for (double other : {0.0, 0.7, 4.0}) {
        double prev_value = laplace_exponent(spec, {0.0, other});
        double prev_slope = kInf;
        for (double l = h; l <= 3.0; l += h) {
            const double value = laplace_exponent(spec, {l, other});
            const double slope = (value - prev_value) / h;
            CHECK(slope >= 0.0);
            CHECK(slope <= prev_slope + 1e-9);
            prev_value = value;
            prev_slope = slope;
        }
    }
    CHECK(laplace_exponent(spec, {0.0, 0.0}) == 0.0);
}

TEST_CASE("laplace exponent matches independent quadrature") {
    const CoRMSpec specs[] = {CoRMSpec::from_marginal(3, 0.7, MarginalFamily::gamma()),
                              CoRMSpec::from_marginal(3, 2.0, MarginalFamily::sigma_stable(0.3)),
                              CoRMSpec::from_marginal(3, 1.2, MarginalFamily::generalized_gamma(0.5, 3.0))};
    for (const auto& spec : specs) {
        const std::vector<double> lambda{0.2, 3.0, 11.0};
        CHECK(laplace_exponent(spec, lambda) == Approx(psi_oracle(spec, lambda)).epsilon(1e-8));
    }
}

TEST_CASE("exponential-score closed form") {
    const auto log1p = UnivariateExponent::log1p();
    CHECK(laplace_exponent_exponential_closed(log1p, {1.0, 2.0}, {1, 1}) ==
          Approx(-std::log(2.0) + 2.0 * std::log(3.0)).epsilon(1e-12));
    CHECK(laplace_exponent_exponential_closed(log1p, {1.0}, {2}) == Approx(std::log(2.0) + 0.5).epsilon(1e-12));
    CHECK(laplace_exponent_exponential_closed(log1p, {0.0}, {3}) == 0.0);
    CHECK_THROWS_AS(laplace_exponent_exponential_closed(log1p, {1.0, 1.0}, {1, 1}), DomainError);

    const CoRMSpec gamma3 = CoRMSpec::from_marginal(3, 1.0, MarginalFamily::gamma());
    const CoRMSpec stable3 = CoRMSpec::from_marginal(3, 1.0, MarginalFamily::sigma_stable(0.45));
    const auto power = UnivariateExponent::power(0.45);
    CHECK(laplace_exponent_exponential_closed(log1p, {0.5, 2.0}, {2, 1}) ==
          Approx(laplace_exponent(gamma3, {0.5, 0.5, 2.0})).epsilon(1e-9));
    CHECK(laplace_exponent_exponential_closed(log1p, {1.5}, {3}) ==
          Approx(laplace_exponent(gamma3, {1.5, 1.5, 1.5})).epsilon(1e-9));
    CHECK(laplace_exponent_exponential_closed(power, {0.3, 1.0, 7.0}, {1, 1, 1}) ==
          Approx(laplace_exponent(stable3, {0.3, 1.0, 7.0})).epsilon(1e-9));
    CHECK(laplace_exponent_exponential_closed(power, {4.0, 0.0}, {2, 1}) ==
          Approx(laplace_exponent(stable3, {4.0, 4.0, 0.0})).epsilon(1e-9));
}

TEST_CASE("upsilon") {
    const CoRMSpec spec = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::gamma());
    CHECK(upsilon(spec, {1.0, 2.0}) == Approx(1.504077).epsilon(1e-6));
    CHECK(upsilon(spec, {2.5}) == Approx(std::log1p(2.5)).epsilon(1e-10));
    CHECK(upsilon(spec, {0.0, 0.0}) == 0.0);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> unif(0.05, 8.0);
    for (int rep = 0; rep < 5; ++rep)
        for (std::size_t l : {2u, 3u}) {
            std::vector<double> x(l);
            for (double& v : x) v = unif(gen);
            CHECK(upsilon(spec, x) ==
                  Approx(laplace_exponent_exponential_closed(UnivariateExponent::log1p(), x, std::vector<int>(l, 1)))
                      .epsilon(1e-6));
        }
}

TEST_CASE("multivariate intensity: closed forms") {
    const CoRMSpec g2 = CoRMSpec::from_marginal(2, 1.0, MarginalFamily::gamma());
    CHECK(rho_density(g2, {0.5, 0.5}) == Approx(2.0 * std::exp(-1.0)).epsilon(1e-9));
    const CoRMSpec s2 = CoRMSpec::from_marginal(2, 1.0, MarginalFamily::sigma_stable(0.5));
    CHECK(rho_density(s2, {1.0, 1.0}) == Approx(0.5 * 1.5 / std::sqrt(M_PI) * std::pow(2.0, -2.5)).epsilon(1e-10));
    CHECK(rho_density(s2, {1.0, 1.0}) == Approx(0.074802).epsilon(1e-5));
    const CoRMSpec g1 = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::gamma());
    CHECK(rho_density(g1, {1.0}) == Approx(std::exp(-1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(rho_density(g2, {0.0, 1.0}), DomainError);

    // Unit-shape gamma: sum_j (d-1)!/(d-1-j)! |s|^(-j-1) e^(-|s|)
    const CoRMSpec g3 = CoRMSpec::from_marginal(3, 1.0, MarginalFamily::gamma());
    const double x = 0.3 + 1.1 + 2.4;
    const double expected = (1.0 / x + 2.0 / (x * x) + 2.0 / (x * x * x)) * std::exp(-x);
    CHECK(rho_density(g3, {0.3, 1.1, 2.4}) == Approx(expected).epsilon(1e-9));
}

TEST_CASE("multivariate intensity: closed forms match the score mixture") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.05, 4.0);
    for (std::size_t d : {2u, 3u})
        for (double phi : {1.0, 2.0})
            for (const auto& family : {MarginalFamily::gamma(), MarginalFamily::sigma_stable(0.35)}) {
                const CoRMSpec spec = CoRMSpec::from_marginal(d, phi, family);
                for (int rep = 0; rep < 3; ++rep) {
                    std::vector<double> s(d);
                    for (double& v : s) v = unif(gen);
                    CHECK(rho_density(spec, s) == Approx(mixture_oracle(spec, s)).epsilon(1e-7));
                }
            }
}

TEST_CASE("kappa") {
    const CoRMSpec g1 = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::gamma());
    CHECK(kappa(g1, {1}, {0.0}) == Approx(1.0).epsilon(1e-12));
    CHECK(kappa(g1, {1}, {1.0}) == Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(kappa(g1, {0}, {1.0}), DomainError);

    const CoRMSpec g2 = CoRMSpec::from_marginal(2, 2.0, MarginalFamily::gamma());
    const auto oracle_value = oracle::quad(
        [](double z) { return z * 2.0 * std::pow(1.0 + z, -3.0) * std::pow(1.0 + 2.0 * z, -2.0) * std::pow(1 - z, 1.0) / z; },
        0.0, 1.0);
    CHECK(kappa(g2, {1, 0}, {1.0, 2.0}) == Approx(oracle_value).epsilon(1e-10));

    // A large v puts the peak near 1/v, far below the support scale:
    // kappa -> Gamma(phi+1)/Gamma(phi) / (v phi) = 1/v.
    const CoRMSpec g60 = CoRMSpec::from_marginal(1, 60.0, MarginalFamily::gamma());
    CHECK(log_kappa(g60, {1}, {1e10}) == Approx(std::log(1e-10)).epsilon(1e-9));

    // Large counts stay finite through the internal rescaling.
    const double lk = log_kappa(g2, {400, 350}, {30.0, 80.0});
    CHECK(std::isfinite(lk));
}

TEST_CASE("g_rho equals mixed partial derivatives of the exponent") {
    const CoRMSpec g1 = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::gamma());
    CHECK(g_rho(g1, {1}, {1.0}) == Approx(0.5).epsilon(1e-12));
    CHECK(g_rho(g1, {1}, {1e8}) < 1e-7);

    const CoRMSpec spec = CoRMSpec::from_marginal(2, 1.0, MarginalFamily::gamma());
    const double h = 1e-3;
    for (const auto& pt : std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.3, 2.0}, {4.0, 0.5}}) {
        const auto [a, b] = pt;
        auto psi = [&](double x, double y) { return laplace_exponent(spec, {x, y}); };
        const double mixed = (psi(a + h, b + h) - psi(a + h, b - h) - psi(a - h, b + h) + psi(a - h, b - h)) / (4 * h * h);
        // d^2 psi / dl1 dl2 = -(-1)^2 kappa_(1,1)
        CHECK(-mixed == Approx(g_rho(spec, {1, 1}, {a, b})).epsilon(1e-4));
    }
}

TEST_CASE("levy copula") {
    const CoRMSpec spec = CoRMSpec::from_marginal(2, 1.0, MarginalFamily::gamma());
    for (double y : {0.2, 1.0, 3.0}) {
        CHECK(levy_copula(spec, y, kInf) == Approx(y).epsilon(1e-6));
        CHECK(levy_copula(spec, kInf, y) == Approx(y).epsilon(1e-6));
        CHECK(levy_copula(spec, 0.0, y) == 0.0);
    }

    // Against the bivariate tail integral of the unit-shape gamma intensity.
    auto inverse_e1 = [](double y) {
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(
            [y](double x) { return boost::math::expint(1, x) - y; }, 1e-12, 50.0,
            boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (r.first + r.second);
    };
    for (const auto& [y1, y2] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.5, 2.0}, {3.0, 0.7}}) {
        const double x1 = inverse_e1(y1), x2 = inverse_e1(y2);
        const double tail = oracle::quad(
            [&](double s1) {
                return oracle::quad(
                    [&](double s2) {
                        const double x = s1 + s2;
                        return (1.0 / x + 1.0 / (x * x)) * std::exp(-x);
                    },
                    x2, kInf);
            },
            x1, kInf);
        CHECK(levy_copula(spec, y1, y2) == Approx(tail).epsilon(1e-6));
    }

    // Two-increasing on a small rectangle.
    const double c11 = levy_copula(spec, 1.0, 1.0), c12 = levy_copula(spec, 1.0, 2.0);
    const double c21 = levy_copula(spec, 2.0, 1.0), c22 = levy_copula(spec, 2.0, 2.0);
    CHECK(c22 - c12 - c21 + c11 >= -1e-10);
}

TEST_CASE("clayton copula") {
    CHECK(clayton_copula(1.0, 1.0, 1.0) == Approx(0.5));
    CHECK(clayton_copula(2.0, 1.0, 1.0) == Approx(std::sqrt(0.5)));
    CHECK(clayton_copula(0.7, 2.5, kInf) == 2.5);
    CHECK(clayton_copula(0.7, 0.0, 2.0) == 0.0);
    for (double y1 : {0.3, 1.0, 4.0})
        for (double y2 : {0.5, 2.0}) {
            CHECK(clayton_copula(1e-3, y1, y2) < 1e-3 * std::min(y1, y2) + 1e-200);
            CHECK(clayton_copula(1e4, y1, y2) == Approx(std::min(y1, y2)).epsilon(1e-3));
        }
    CHECK_THROWS_AS(clayton_copula(0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("moment partitions") {
    auto p = enumerate_moment_partitions({1}, 1);
    REQUIRE(p.size() == 1);
    CHECK(p[0].multiplicity == std::vector<int>{1});
    CHECK(p[0].exponents[0] == std::vector<int>{1});

    p = enumerate_moment_partitions({1, 1}, 1);
    REQUIRE(p.size() == 1);
    CHECK(p[0].exponents[0] == std::vector<int>{1, 1});

    p = enumerate_moment_partitions({2}, 2);
    REQUIRE(p.size() == 1);
    CHECK(p[0].multiplicity == std::vector<int>{2});
    CHECK(p[0].exponents[0] == std::vector<int>{1});

    // q = (1,1), k = 2: s = (1,0), (0,1) once each.
    p = enumerate_moment_partitions({1, 1}, 2);
    REQUIRE(p.size() == 1);
    CHECK(p[0].blocks() == 2);

    CHECK_THROWS_AS(enumerate_moment_partitions({4, 3}, 2), DomainError);

    // Exhaustiveness: counts across k add up to the number of multiset partitions.
    // Multiset {1,1,2,2} (q = (2,2)) has 9 multiset partitions.
    std::size_t total = 0;
    for (int k = 1; k <= 4; ++k) total += enumerate_moment_partitions({2, 2}, k).size();
    CHECK(total == 9);
    // Integer partitions of 6 = 11.
    total = 0;
    for (int k = 1; k <= 6; ++k) total += enumerate_moment_partitions({6}, k).size();
    CHECK(total == 11);
}

TEST_CASE("mixed moments") {
    const CoRMSpec g1 = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::gamma());
    CHECK(mixed_moment(g1, {1}, 1.0) == Approx(1.0).epsilon(1e-12));
    CHECK(mixed_moment(g1, {2}, 1.0) == Approx(2.0).epsilon(1e-12));
    const CoRMSpec g2 = CoRMSpec::from_marginal(2, 1.0, MarginalFamily::gamma());
    CHECK(mixed_moment(g2, {1, 1}, 1.0) == Approx(1.5).epsilon(1e-12));
    // Marginal moments of a gamma process do not depend on phi: E[mu^2] = a + a^2, E[mu^3] = 2a + 3a^2 + a^3.
    for (double phi : {0.4, 2.5}) {
        const CoRMSpec spec = CoRMSpec::from_marginal(1, phi, MarginalFamily::gamma());
        CHECK(mixed_moment(spec, {2}, 0.7) == Approx(0.7 + 0.49).epsilon(1e-10));
        CHECK(mixed_moment(spec, {3}, 0.7) == Approx(1.4 + 3 * 0.49 + 0.343).epsilon(1e-10));
    }
    // Generalized gamma: moments via the closed beta form and by quadrature agree.
    const CoRMSpec gg = CoRMSpec::from_marginal(1, 1.5, MarginalFamily::generalized_gamma(0.4, 2.0));
    for (int k : {1, 2, 3}) {
        const double numeric = oracle::quad(
            [&](double z) { return std::exp(k * std::log(z) + gg.directing().log_density(z)); }, 0.0,
            gg.directing().upper());
        CHECK(directing_moment(gg, k) == Approx(numeric).epsilon(1e-8));
    }
    // Marginal mean of a generalized gamma process: sigma a^(sigma-1).
    CHECK(mixed_moment(gg, {1}, 1.0) == Approx(0.4 * std::pow(2.0, -0.6)).epsilon(1e-10));
    const CoRMSpec stable = CoRMSpec::from_marginal(1, 1.0, MarginalFamily::sigma_stable(0.5));
    CHECK_THROWS_AS(mixed_moment(stable, {1}, 1.0), DomainError);
}

TEST_CASE("covariance of normalized measures: structural cases") {
    const CoRMSpec spec = CoRMSpec::from_marginal(2, 1.0, MarginalFamily::gamma());
    CHECK(covariance_normalized(spec, 1.0, 1.0, 1.0, 1.0) == 0.0);
    CHECK(covariance_normalized(spec, 0.4, 0.3, 0.0, 1.0) < 0.0);
    CHECK_THROWS_AS(covariance_normalized(spec, 0.4, 0.3, 0.5, 1.0), DomainError);
    // One-dimensional marginal of a Dirichlet process: Var p(A) = P(1-P)/(alpha+1).
    CHECK(variance_normalized(spec, 0, 0.5, 1.0) == Approx(0.25 / 2.0).epsilon(1e-6));
    const double corr = correlation_normalized(spec, 0.5, 0.5, 0.5, 1.0);
    CHECK(corr > 0.0);
    CHECK(corr < 1.0);
}
