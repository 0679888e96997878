#include "corm/numerics.hpp"

#include "corm/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace corm::numerics {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();

struct KronrodRule {
    std::array<double, 11> nodes{};
    std::array<double, 11> kronrod_weights{};
    std::array<double, 5> gauss_weights{};
};

const KronrodRule& rule21() {
    static const KronrodRule rule = [] {
        KronrodRule r;
        const auto& x = boost::math::quadrature::gauss_kronrod<double, 21>::abscissa();
        const auto& wk = boost::math::quadrature::gauss_kronrod<double, 21>::weights();
        const auto& wg = boost::math::quadrature::gauss<double, 10>::weights();
        std::copy(x.begin(), x.end(), r.nodes.begin());
        std::copy(wk.begin(), wk.end(), r.kronrod_weights.begin());
        std::copy(wg.begin(), wg.end(), r.gauss_weights.begin());
        return r;
    }();
    return rule;
}

// Integrand on the canonical interval (0, 1), receiving both t and 1 - t so
// that neither endpoint loses precision.
using Canonical = std::function<double(double, double)>;

struct Segment {
    std::size_t piece;
    double lo;
    double hi;
    double value;
    double error;

    bool operator<(const Segment& other) const { return error < other.error; }
};

double checked(double value, double at) {
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "integrand returned " << value << " at transformed abscissa " << at;
        throw DomainError(msg.str());
    }
    return value;
}

Segment kronrod21(const Integrand& g, std::size_t piece, double lo, double hi) {
    const KronrodRule& r = rule21();
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);

    std::array<double, 11> f_minus{};
    std::array<double, 11> f_plus{};
    const double fc = checked(g(center), center);
    double kronrod = fc * r.kronrod_weights[0];
    double gauss = 0.0;
    double abs_sum = std::abs(kronrod);
    for (std::size_t j = 1; j < 11; ++j) {
        const double dx = half * r.nodes[j];
        const double f1 = checked(g(center - dx), center - dx);
        const double f2 = checked(g(center + dx), center + dx);
        f_minus[j] = f1;
        f_plus[j] = f2;
        kronrod += r.kronrod_weights[j] * (f1 + f2);
        abs_sum += r.kronrod_weights[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) gauss += r.gauss_weights[(j - 1) / 2] * (f1 + f2);
    }
    const double mean = 0.5 * kronrod;
    double asc = r.kronrod_weights[0] * std::abs(fc - mean);
    for (std::size_t j = 1; j < 11; ++j)
        asc += r.kronrod_weights[j] * (std::abs(f_minus[j] - mean) + std::abs(f_plus[j] - mean));

    const double scale = std::abs(half);
    const double value = kronrod * half;
    abs_sum *= scale;
    asc *= scale;
    double error = std::abs((kronrod - gauss) * half);
    if (asc != 0.0 && error != 0.0) error = asc * std::min(1.0, std::pow(200.0 * error / asc, 1.5));
    if (abs_sum > kTiny / (50.0 * kEps)) error = std::max(50.0 * kEps * abs_sum, error);
    return {piece, lo, hi, value, error};
}

// Splits (0,1) into pieces with power substitutions at hinted endpoints.
std::vector<Integrand> substitute(const Canonical& h, std::optional<double> p_lo, std::optional<double> p_hi) {
    const bool sub_lo = p_lo && *p_lo < 0.0;
    const bool sub_hi = p_hi && *p_hi < 0.0;
    const double beta_lo = sub_lo ? 1.0 / (1.0 + *p_lo) : 1.0;
    const double beta_hi = sub_hi ? 1.0 / (1.0 + *p_hi) : 1.0;
    const double width = (sub_lo && sub_hi) ? 0.5 : 1.0;

    std::vector<Integrand> pieces;
    if (!sub_lo && !sub_hi) {
        pieces.emplace_back([h](double t) { return h(t, 1.0 - t); });
        return pieces;
    }
    if (sub_lo) {
        pieces.emplace_back([h, beta_lo, width](double w) {
            const double t = width * std::pow(w, beta_lo);
            if (t <= 0.0) return 0.0;
            return h(t, 1.0 - t) * width * beta_lo * std::pow(w, beta_lo - 1.0);
        });
    } else {
        pieces.emplace_back([h](double t) { return h(t, 1.0 - t); });
    }
    if (sub_hi) {
        pieces.emplace_back([h, beta_hi, width](double w) {
            const double s = width * std::pow(w, beta_hi);
            if (s <= 0.0) return 0.0;
            return h(1.0 - s, s) * width * beta_hi * std::pow(w, beta_hi - 1.0);
        });
    }
    // A single substituted end covers the whole interval on its own.
    if (!(sub_lo && sub_hi)) pieces.resize(1);
    if (!sub_lo && sub_hi) {
        pieces[0] = [h, beta_hi](double w) {
            const double s = std::pow(w, beta_hi);
            if (s <= 0.0) return 0.0;
            return h(1.0 - s, s) * beta_hi * std::pow(w, beta_hi - 1.0);
        };
    }
    return pieces;
}

void validate(const QuadratureSpec& spec) {
    if (!std::isfinite(spec.lower)) throw DomainError("integrate: lower limit must be finite");
    if (!(spec.lower < spec.upper)) throw DomainError("integrate: requires lower < upper");
    if (!(spec.relative_tolerance > 0.0) || !(spec.absolute_tolerance > 0.0))
        throw DomainError("integrate: tolerances must be positive");
    if (spec.lower_exponent && !(*spec.lower_exponent > -1.0))
        throw DomainError("integrate: lower endpoint exponent must exceed -1");
    if (spec.upper_exponent) {
        if (std::isinf(spec.upper) && !(*spec.upper_exponent < -1.0))
            throw DomainError("integrate: tail exponent at infinity must be below -1");
        if (std::isfinite(spec.upper) && !(*spec.upper_exponent > -1.0))
            throw DomainError("integrate: upper endpoint exponent must exceed -1");
    }
    if (spec.max_evaluations < 21) throw DomainError("integrate: evaluation budget too small");
}

} // namespace

IntegralResult integrate(const Integrand& f, const QuadratureSpec& spec) {
    validate(spec);

    Canonical canonical;
    std::optional<double> p_hi = spec.upper_exponent;
    const double a = spec.lower;
    if (std::isinf(spec.upper)) {
        canonical = [&f, a](double t, double s) { return f(a + t / s) / (s * s); };
        if (p_hi) p_hi = -*p_hi - 2.0;
    } else {
        const double b = spec.upper;
        const double len = b - a;
        canonical = [&f, a, b, len](double t, double s) {
            const double z = t < 0.5 ? a + t * len : b - s * len;
            return f(z) * len;
        };
    }
    const std::vector<Integrand> pieces = substitute(canonical, spec.lower_exponent, p_hi);

    std::priority_queue<Segment> heap;
    std::vector<Segment> retired;
    std::size_t evaluations = 0;
    double total = 0.0;
    double total_error = 0.0;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        Segment s = kronrod21(pieces[p], p, 0.0, 1.0);
        evaluations += 21;
        total += s.value;
        total_error += s.error;
        heap.push(s);
    }

    auto converged = [&] {
        return total_error <= std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(total));
    };

    while (!converged()) {
        if (heap.empty()) {
            throw QuadratureError("integrate: roundoff prevents reaching the requested tolerance", total,
                                  total_error);
        }
        if (evaluations + 42 > spec.max_evaluations) {
            std::ostringstream msg;
            msg << "integrate: evaluation budget of " << spec.max_evaluations << " exhausted (estimate " << total
                << ", error " << total_error << ")";
            throw QuadratureError(msg.str(), total, total_error);
        }
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi) ||
            (worst.hi - worst.lo) < 16.0 * kEps * std::max(std::abs(mid), 1e-300)) {
            retired.push_back(worst);
            continue;
        }
        const Segment left = kronrod21(pieces[worst.piece], worst.piece, worst.lo, mid);
        const Segment right = kronrod21(pieces[worst.piece], worst.piece, mid, worst.hi);
        evaluations += 42;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed incremental drift.
    double value = 0.0;
    double error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    for (const Segment& s : retired) {
        value += s.value;
        error += s.error;
    }
    return {value, error, evaluations};
}

double bessel_k(double order, double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
    return boost::math::cyl_bessel_k(std::abs(order), x);
}

namespace {

bool is_nonpositive_integer(double a) { return a <= 0.0 && std::floor(a) == a; }

// U(-m, b, x) = (-1)^m sum_s C(m,s) (b+s)_{m-s} (-x)^s
double kummer_u_polynomial(int m, double b, double x) {
    double sum = 0.0;
    for (int s = 0; s <= m; ++s) {
        double pochhammer = 1.0;
        for (int k = 0; k < m - s; ++k) pochhammer *= b + s + k;
        const double binom = std::exp(std::lgamma(m + 1.0) - std::lgamma(s + 1.0) - std::lgamma(m - s + 1.0));
        sum += binom * pochhammer * std::pow(-x, s);
    }
    return (m % 2 == 0) ? sum : -sum;
}

// Laplace-integral representation, a > 0, substituted t = s / x.
double kummer_u_integral(double a, double b, double x) {
    const double c = b - a - 1.0;
    QuadratureSpec spec;
    spec.lower = 0.0;
    spec.upper = kInf;
    spec.relative_tolerance = 1e-13;
    spec.absolute_tolerance = 1e-300;
    if (a < 1.0) spec.lower_exponent = a - 1.0;
    const IntegralResult r = integrate(
        [a, c, x](double s) { return std::exp(-s + (a - 1.0) * std::log(s) + c * std::log1p(s / x)); }, spec);
    return std::exp(-a * std::log(x) - std::lgamma(a)) * r.value;
}

} // namespace

double kummer_u(double a, double b, double x) {
    if (!(x > 0.0)) throw DomainError("kummer_u: argument must be positive");
    if (a == 0.0) return 1.0;
    if (is_nonpositive_integer(a) && a > -200.0) return kummer_u_polynomial(static_cast<int>(-a), b, x);
    if (a > 0.0) return kummer_u_integral(a, b, x);
    const double a_star = a - b + 1.0;
    if (a_star > 0.0 || (is_nonpositive_integer(a_star) && a_star > -200.0))
        return std::pow(x, 1.0 - b) * kummer_u(a_star, 2.0 - b, x);

    // U(c-1) = (2c - b + x) U(c) - c (c - b + 1) U(c+1), run downward from c > 0.
    const int steps = static_cast<int>(std::ceil(-a)) + 1;
    if (steps > 200) throw UnsupportedError("kummer_u: recurrence depth exceeds supported range");
    double c = a + steps;
    double u_next = kummer_u_integral(c + 1.0, b, x);
    double u_curr = kummer_u_integral(c, b, x);
    for (int i = 0; i < steps; ++i) {
        const double u_prev = (2.0 * c - b + x) * u_curr - c * (c - b + 1.0) * u_next;
        u_next = u_curr;
        u_curr = u_prev;
        c -= 1.0;
    }
    if (!std::isfinite(u_curr)) throw UnsupportedError("kummer_u: recurrence lost all precision");
    return u_curr;
}

double whittaker_w(double k, double mu, double x) {
    if (!(x > 0.0)) throw DomainError("whittaker_w: argument must be positive");
    const double u = kummer_u(mu - k + 0.5, 1.0 + 2.0 * mu, x);
    return std::exp(-0.5 * x + (mu + 0.5) * std::log(x)) * u;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double x_tolerance, int max_iterations) {
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) throw DomainError("bisect: no sign change on the bracket");
    for (int it = 0; it < max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= x_tolerance * std::max(1.0, std::abs(mid)) || mid == lo || mid == hi) return mid;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    throw ConvergenceError("bisect: iteration cap reached");
}

} // namespace corm::numerics
