#include "doctest.h"

#include "corm/errors.hpp"
#include "corm/marginal_sampler.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace corm;
using doctest::Approx;

namespace {

Dataset dataset_1d(const std::vector<std::vector<double>>& groups) {
    Dataset d;
    d.p = 1;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        d.group_names.push_back("g" + std::to_string(j + 1));
        d.groups.emplace_back();
        for (double y : groups[j]) d.groups.back().push_back(Vector::Constant(1, y));
    }
    return d;
}

CoRMSpec dirichlet(std::size_t d, double phi = 1.0, double alpha = 1.0) {
    return CoRMSpec::from_marginal(d, phi, MarginalFamily::gamma(), alpha);
}

// Independent quadrature of kappa(a, v) = int z^|a| prod tau_{a_j}(z, v_j) nu*(z) dz.
double kappa_oracle(const CoRMSpec& spec, const std::vector<int>& a, const std::vector<double>& v) {
    const double phi = spec.phi();
    auto f = [&](double z) {
        double l = spec.directing().log_density(z);
        if (!std::isfinite(l)) return 0.0;
        for (std::size_t j = 0; j < a.size(); ++j)
            l += a[j] * std::log(z) + std::lgamma(a[j] + phi) - std::lgamma(phi) - (a[j] + phi) * std::log1p(v[j] * z);
        return std::exp(l);
    };
    return oracle::quad(f, 0.0, spec.directing().upper());
}

struct Toy {
    Dataset data;
    CoRMSpec spec;
    KernelModel kernel;
};

Toy toy() {
    return {dataset_1d({{-0.4, 1.2}, {0.3}}), dirichlet(2, 1.5, 0.8), KernelModel::univariate_normal(0.0, 0.5, 2.0, 1.0)};
}

// Restricted-growth labels over the flattened observations.
std::vector<std::size_t> canonical(const std::vector<std::vector<std::size_t>>& allocation) {
    std::map<std::size_t, std::size_t> relabel;
    std::vector<std::size_t> out;
    for (const auto& row : allocation)
        for (std::size_t c : row) {
            auto it = relabel.try_emplace(c, relabel.size()).first;
            out.push_back(it->second);
        }
    return out;
}

std::vector<std::vector<std::size_t>> unflatten(const std::vector<std::size_t>& flat, const Dataset& data) {
    std::vector<std::vector<std::size_t>> out;
    std::size_t t = 0;
    for (const auto& g : data.groups) {
        out.emplace_back();
        for (std::size_t i = 0; i < g.size(); ++i) out.back().push_back(flat[t++]);
    }
    return out;
}

std::vector<std::vector<std::size_t>> set_partitions(std::size_t n) {
    std::vector<std::vector<std::size_t>> out{{0}};
    for (std::size_t m = 1; m < n; ++m) {
        std::vector<std::vector<std::size_t>> next;
        for (const auto& p : out) {
            const std::size_t k = *std::max_element(p.begin(), p.end()) + 1;
            for (std::size_t c = 0; c <= k; ++c) {
                auto q = p;
                q.push_back(c);
                next.push_back(q);
            }
        }
        out = next;
    }
    return out;
}

// Exact conditional of the partition given v and phi: prod_k alpha kappa(a_k, v) g(S_k).
std::vector<double> exact_partition_law(const Toy& t, const std::vector<std::vector<std::size_t>>& parts,
                                        const std::vector<double>& v) {
    std::vector<double> w;
    for (const auto& p : parts) {
        const auto alloc = unflatten(p, t.data);
        const std::size_t k_total = *std::max_element(p.begin(), p.end()) + 1;
        double lw = 0.0;
        for (std::size_t k = 0; k < k_total; ++k) {
            std::vector<int> a(t.data.d(), 0);
            std::vector<Vector> ys;
            for (std::size_t j = 0; j < alloc.size(); ++j)
                for (std::size_t i = 0; i < alloc[j].size(); ++i)
                    if (alloc[j][i] == k) {
                        ++a[j];
                        ys.push_back(t.data.groups[j][i]);
                    }
            lw += std::log(t.spec.centring_mass()) + std::log(kappa_oracle(t.spec, a, v)) + t.kernel.log_marginal(ys);
        }
        w.push_back(std::exp(lw));
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    return w;
}

std::vector<std::vector<std::size_t>> after_move(std::vector<std::vector<std::size_t>> alloc, std::size_t j, std::size_t i,
                                                 std::size_t option) {
    // Labels left after removing (j, i), in order, then the new cluster.
    const std::size_t old = alloc[j][i];
    bool singleton = true;
    for (std::size_t jj = 0; jj < alloc.size(); ++jj)
        for (std::size_t ii = 0; ii < alloc[jj].size(); ++ii)
            if ((jj != j || ii != i) && alloc[jj][ii] == old) singleton = false;
    alloc[j][i] = 1000;
    if (singleton)
        for (auto& row : alloc)
            for (auto& c : row)
                if (c != 1000 && c > old) --c;
    alloc[j][i] = option;
    return alloc;
}

} // namespace

TEST_CASE("kappa ratio reproduces the Dirichlet urn at v = 0") {
    const CoRMSpec spec = dirichlet(1);
    for (int a = 1; a <= 6; ++a) CHECK(kappa_ratio(spec, {a}, 0, {0.0}) == Approx(a).epsilon(1e-9));
    CHECK(new_cluster_weight(spec, 0, {0.0}) == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kappa ratio and new-cluster weight against independent quadrature") {
    const CoRMSpec s1 = dirichlet(2, 1.0);
    const double r = kappa_oracle(s1, {2, 0}, {1.0, 1.0}) / kappa_oracle(s1, {1, 0}, {1.0, 1.0});
    CHECK(kappa_ratio(s1, {1, 0}, 0, {1.0, 1.0}) == Approx(r).epsilon(1e-8));
    const CoRMSpec s2 = dirichlet(2, 2.0);
    CHECK(new_cluster_weight(s2, 0, {1.0, 2.0}) == Approx(kappa_oracle(s2, {1, 0}, {1.0, 2.0})).epsilon(1e-8));
    CHECK(new_cluster_weight(s2, 1, {1.0, 2.0}) == Approx(kappa_oracle(s2, {0, 1}, {1.0, 2.0})).epsilon(1e-8));
    const CoRMSpec ngg = CoRMSpec::from_marginal(3, 1.5, MarginalFamily::generalized_gamma(0.4, 1.0));
    for (const auto& a : {std::vector<int>{1, 0, 2}, std::vector<int>{3, 1, 1}}) {
        const std::vector<double> v{0.5, 2.0, 7.0};
        for (std::size_t j = 0; j < 3; ++j) {
            auto up = a;
            ++up[j];
            CHECK(kappa_ratio(ngg, a, j, v) ==
                  Approx(kappa_oracle(ngg, up, v) / kappa_oracle(ngg, a, v)).epsilon(1e-7));
            CHECK(kappa_ratio(ngg, a, j, v) > 0.0);
        }
    }
    CHECK_THROWS_AS(kappa_ratio(s1, {0, 0}, 0, {1.0, 1.0}), DomainError);
}

TEST_CASE("new-cluster weight vanishes as v grows") {
    const CoRMSpec spec = dirichlet(2, 1.0);
    double previous = new_cluster_weight(spec, 0, {0.0, 1.0});
    for (double v : {1.0, 10.0, 1e3, 1e6}) {
        const double w = new_cluster_weight(spec, 0, {v, 1.0});
        CHECK(w < previous);
        previous = w;
    }
    CHECK(previous < 1e-4);
}

TEST_CASE("urn weights: one existing cluster of three and unit mass") {
    // kappa ratio 3 against new-cluster weight 1 gives 3/4.
    const Dataset data = dataset_1d({{0.1, 0.2, 0.3, 0.4}});
    Rng rng(1);
    MarginalSampler s(dirichlet(1), KernelModel::univariate_normal(0.0, 1.0, 2.0, 2.0), data, {}, rng);
    s.set_allocation({{0, 0, 0, 0}}, rng);
    s.set_v({0.0});
    const auto p = s.allocation_probabilities(0, 3, {}, false);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == Approx(0.75).epsilon(1e-9));
    CHECK(p[1] == Approx(0.25).epsilon(1e-9));
}

TEST_CASE("d = 1 Dirichlet marginals at v = 0 give the Chinese restaurant weights") {
    const Dataset data = dataset_1d({{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}});
    const double alpha = 2.5;
    Rng rng(2);
    MarginalSampler s(dirichlet(1, 1.0, alpha), KernelModel::univariate_normal(0.0, 1.0, 2.0, 2.0), data, {}, rng);
    s.set_allocation({{0, 0, 1, 0, 2, 1, 0}}, rng);
    s.set_v({0.0});
    // Removing observation 6 leaves clusters of sizes (3, 2, 1).
    const auto p = s.allocation_probabilities(0, 6, {}, false);
    const double total = 6.0 + alpha;
    REQUIRE(p.size() == 4);
    CHECK(p[0] == Approx(3.0 / total).epsilon(1e-9));
    CHECK(p[1] == Approx(2.0 / total).epsilon(1e-9));
    CHECK(p[2] == Approx(1.0 / total).epsilon(1e-9));
    CHECK(p[3] == Approx(alpha / total).epsilon(1e-9));
    // Removing the singleton drops its cluster.
    const auto q = s.allocation_probabilities(0, 4, {}, false);
    REQUIRE(q.size() == 3);
    CHECK(q[2] == Approx(alpha / total).epsilon(1e-9));
}

TEST_CASE("non-conjugate allocation law by hand normalization") {
    Dataset data;
    data.p = 2;
    data.group_names = {"a", "b"};
    auto v2 = [](double a, double b) {
        Vector v(2);
        v << a, b;
        return v;
    };
    data.groups = {{v2(0.0, 0.0), v2(1.0, 1.0), v2(0.2, -0.1)}, {v2(-1.0, 0.5)}};
    const CoRMSpec spec = dirichlet(2, 1.3, 1.7);
    const KernelModel kernel = KernelModel::multivariate_normal(Vector::Zero(2), 0.2, 5.0, Matrix::Identity(2, 2));
    Rng rng(3);
    MarginalOptions options;
    options.auxiliary = 2;
    MarginalSampler s(spec, kernel, data, options, rng);
    s.set_allocation({{0, 1, 0}, {1}}, rng);
    s.set_v({0.7, 1.9});
    const std::vector<Atom> aux{kernel.draw_prior(rng), kernel.draw_prior(rng)};
    const auto p = s.allocation_probabilities(0, 2, aux);
    REQUIRE(p.size() == 4);

    const Vector& y = data.groups[0][2];
    const std::vector<double> v{0.7, 1.9};
    std::vector<double> w{kappa_oracle(spec, {2, 0}, v) / kappa_oracle(spec, {1, 0}, v) *
                              std::exp(kernel.log_density(y, s.state().atoms[0])),
                          kappa_oracle(spec, {2, 1}, v) / kappa_oracle(spec, {1, 1}, v) *
                              std::exp(kernel.log_density(y, s.state().atoms[1]))};
    for (const auto& a : aux)
        w.push_back(1.7 / 2.0 * kappa_oracle(spec, {1, 0}, v) * std::exp(kernel.log_density(y, a)));
    double total = 0.0;
    for (double x : w) total += x;
    for (std::size_t k = 0; k < 4; ++k) CHECK(p[k] == Approx(w[k] / total).epsilon(1e-7));

    // A kernel constant in theta: total new-cluster mass does not depend on M.
    const Atom same = aux[0];
    std::vector<double> fresh_mass;
    for (std::size_t m : {1, 2, 5}) {
        const auto q = s.allocation_probabilities(0, 2, std::vector<Atom>(m, same));
        double mass = 0.0;
        for (std::size_t k = 2; k < q.size(); ++k) mass += q[k];
        fresh_mass.push_back(mass);
    }
    CHECK(fresh_mass[1] == Approx(fresh_mass[0]).epsilon(1e-12));
    CHECK(fresh_mass[2] == Approx(fresh_mass[0]).epsilon(1e-12));
    CHECK_THROWS_AS(s.allocation_probabilities(0, 2, {}), DomainError);
}

TEST_CASE("v density for one Dirichlet cluster at v = 1 is a quarter") {
    const Dataset data = dataset_1d({{0.3}});
    Rng rng(4);
    MarginalSampler s(dirichlet(1), KernelModel::univariate_normal(0.0, 1.0, 2.0, 2.0), data, {}, rng);
    s.set_v({1.0});
    CHECK(std::exp(s.log_v_density(0, 1.0)) == Approx(0.25).epsilon(1e-9));
    CHECK(std::exp(s.log_v_density(0, 3.0)) == Approx(1.0 / 16.0).epsilon(1e-9));
}

TEST_CASE("allocation kernel preserves the exact partition law of a toy state space") {
    const Toy t = toy();
    const std::vector<double> v{0.9, 1.6};
    const auto parts = set_partitions(3);
    REQUIRE(parts.size() == 5);
    const std::vector<double> pi = exact_partition_law(t, parts, v);

    Rng rng(5);
    MarginalOptions options;
    options.phi_prior = PhiPrior::fixed();
    MarginalSampler s(t.spec, t.kernel, t.data, options, rng);
    s.set_v(v);
    for (std::size_t j = 0; j < t.data.d(); ++j)
        for (std::size_t i = 0; i < t.data.groups[j].size(); ++i) {
            std::vector<double> next(parts.size(), 0.0);
            for (std::size_t from = 0; from < parts.size(); ++from) {
                const auto alloc = unflatten(parts[from], t.data);
                s.set_allocation(alloc, rng);
                const auto p = s.allocation_probabilities(j, i);
                for (std::size_t k = 0; k < p.size(); ++k) {
                    const auto to = canonical(after_move(alloc, j, i, k));
                    const auto idx = static_cast<std::size_t>(std::find(parts.begin(), parts.end(), to) - parts.begin());
                    REQUIRE(idx < parts.size());
                    next[idx] += pi[from] * p[k];
                }
            }
            double tv = 0.0;
            for (std::size_t k = 0; k < parts.size(); ++k) tv += 0.5 * std::abs(next[k] - pi[k]);
            CHECK(tv < 1e-8);
        }
}

TEST_CASE("sampled allocation moves follow the stated probabilities") {
    const Toy t = toy();
    Rng rng(6);
    MarginalSampler s(t.spec, t.kernel, t.data, {}, rng);
    s.set_v({0.9, 1.6});
    const std::vector<std::vector<std::size_t>> start{{0, 1}, {0}};
    s.set_allocation(start, rng);
    const auto p = s.allocation_probabilities(0, 1);
    std::vector<double> hits(p.size(), 0.0);
    const int n = 40000;
    for (int r = 0; r < n; ++r) {
        s.set_allocation(start, rng);
        s.update_allocation(0, 1, rng);
        const auto got = canonical(s.state().allocation);
        for (std::size_t k = 0; k < p.size(); ++k)
            if (canonical(after_move(start, 0, 1, k)) == got) hits[k] += 1.0;
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double se = std::sqrt(p[k] * (1.0 - p[k]) / n);
        CHECK(std::abs(hits[k] / n - p[k]) < 4.0 * se);
    }
    s.state().check(t.data);
}

TEST_CASE("v update samples its conditional") {
    const Dataset data = dataset_1d({{-1.0, 0.5, 0.7, 2.0}, {0.0, 0.1}});
    Rng rng(7);
    MarginalOptions options;
    options.phi_prior = PhiPrior::fixed();
    MarginalSampler s(dirichlet(2, 1.2), KernelModel::univariate_normal(0.0, 0.5, 2.0, 1.0), data, options, rng);
    s.set_allocation({{0, 1, 1, 0}, {1, 0}}, rng);
    s.set_v({2.0, 1.0});
    // Mean of log v_1 under the target, by quadrature on the log scale.
    auto dens = [&](double x) { return std::exp(s.log_v_density(0, std::exp(x)) + x); };
    double z = 0.0, m = 0.0;
    const double h = 0.01;
    for (double x = -8.0; x <= 8.0; x += h) {
        z += dens(x) * h;
        m += x * dens(x) * h;
    }
    m /= z;
    for (int i = 0; i < 500; ++i) s.update_v(0, rng);
    s.freeze_adaptation();
    const int batches = 40, per = 250;
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
        double acc = 0.0;
        for (int i = 0; i < per; ++i) {
            s.update_v(0, rng);
            acc += std::log(s.state().v[0]);
        }
        means.push_back(acc / per);
    }
    double mean = 0.0, var = 0.0;
    for (double x : means) mean += x / batches;
    for (double x : means) var += (x - mean) * (x - mean) / (batches - 1);
    CHECK(std::abs(mean - m) < 3.0 * std::sqrt(var / batches));
    CHECK(s.state().v[1] == 1.0);
}

TEST_CASE("phi target is finite for large phi and many groups") {
    std::vector<std::vector<double>> groups;
    for (int j = 0; j < 9; ++j) groups.push_back({0.1 * j, -0.2 * j});
    const Dataset data = dataset_1d(groups);
    Rng rng(8);
    MarginalSampler s(dirichlet(9), KernelModel::univariate_normal(0.0, 0.5, 2.0, 1.0), data, {}, rng);
    CHECK(std::isfinite(s.log_phi_density(50.0)));
    CHECK(std::isfinite(s.log_phi_density(0.02)));
}

TEST_CASE("phi target is invariant under relabeling the groups") {
    const Dataset a = dataset_1d({{0.0, 1.0, 2.5}, {-1.0, 0.4}});
    const Dataset b = dataset_1d({{-1.0, 0.4}, {0.0, 1.0, 2.5}});
    Rng rng(9);
    const KernelModel k = KernelModel::univariate_normal(0.0, 0.5, 2.0, 1.0);
    MarginalSampler sa(dirichlet(2), k, a, {}, rng);
    MarginalSampler sb(dirichlet(2), k, b, {}, rng);
    sa.set_allocation({{0, 1, 1}, {0, 2}}, rng);
    sb.set_allocation({{0, 2}, {0, 1, 1}}, rng);
    sa.set_v({1.5, 0.4});
    sb.set_v({0.4, 1.5});
    for (double phi : {0.3, 1.0, 4.0}) CHECK(sa.log_phi_density(phi) == Approx(sb.log_phi_density(phi)).epsilon(1e-10));
}

TEST_CASE("full sweeps keep the state consistent") {
    const Dataset data = dataset_1d({{-2.1, -1.9, 2.0, 2.2, 1.8}, {-2.0, 2.1, 1.9}});
    Rng rng(10);
    MarginalSampler s(dirichlet(2), KernelModel::from_data(data, KernelModel::Kind::UnivariateNormal), data, {}, rng);
    for (int t = 0; t < 200; ++t) {
        s.sweep(rng);
        s.state().check(data);
    }
    const SweepSummary sum = s.summary();
    CHECK(sum.clusters == s.state().clusters());
    CHECK(sum.v.size() == 2);
    const MixtureSnapshot snap = s.snapshot();
    for (const auto& row : snap.weights) {
        double total = 0.0;
        for (double w : row) total += w;
        CHECK(total == Approx(1.0).epsilon(1e-12));
    }
    const AcceptanceReport acc = s.acceptance();
    CHECK(acc.names == std::vector<std::string>{"v1", "v2", "phi"});
}

TEST_CASE("non-conjugate sweeps keep the state consistent") {
    Dataset data;
    data.p = 2;
    data.group_names = {"a", "b"};
    Rng rng(12);
    for (int j = 0; j < 2; ++j) {
        data.groups.emplace_back();
        for (int i = 0; i < 12; ++i) {
            Vector y(2);
            y << rand::normal(rng) + (i % 2 ? 3.0 : -3.0), rand::normal(rng);
            data.groups.back().push_back(y);
        }
    }
    MarginalSampler s(dirichlet(2), KernelModel::from_data(data, KernelModel::Kind::MultivariateNormal), data, {}, rng);
    for (int t = 0; t < 100; ++t) {
        s.sweep(rng);
        s.state().check(data);
        CHECK(s.state().atoms.size() == s.state().clusters());
    }
    CHECK(s.state().clusters() >= 2);
}
