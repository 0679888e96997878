// corm: simulate compound random measure priors, fit mixtures, and inspect traces.

#include "corm/diagnostics.hpp"
#include "corm/errors.hpp"
#include "corm/io.hpp"
#include "corm/prior_sim.hpp"
#include "corm/run.hpp"
#include "corm/trace.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace corm;

namespace {

struct PriorFlags {
    std::optional<std::string> family;
    std::optional<double> sigma, a, phi, centring_mass, phi_rate;
    std::optional<std::string> phi_prior;

    void add(CLI::App* app) {
        app->add_option("--family", family, "marginal family: gamma, sigma_stable or generalized_gamma");
        app->add_option("--sigma", sigma, "stability index of sigma_stable / generalized_gamma marginals");
        app->add_option("--a", a, "exponential tilt of generalized_gamma marginals");
        app->add_option("--phi", phi, "score shape (initial value when it is sampled)");
        app->add_option("--phi-prior", phi_prior, "fixed or exponential");
        app->add_option("--phi-rate", phi_rate, "rate of the exponential prior on phi");
        app->add_option("--centring-mass", centring_mass, "total mass of the centring measure");
    }

    void apply(RunConfig& c) const {
        if (family || sigma || a)
            c.family = parse_family(family.value_or(family_name(c.family)), sigma.value_or(c.family.sigma),
                                    a.value_or(c.family.a));
        if (phi) c.phi = *phi;
        if (phi_prior) {
            if (*phi_prior == "fixed")
                c.phi_prior = PhiPrior::fixed();
            else if (*phi_prior == "exponential")
                c.phi_prior = PhiPrior::exponential(phi_rate.value_or(1.0));
            else
                throw ParseError("--phi-prior must be fixed or exponential", 0);
        } else if (phi_rate && !c.phi_prior.is_fixed()) {
            c.phi_prior.rate = *phi_rate;
        }
        if (centring_mass) c.centring_mass = *centring_mass;
    }

    static std::string family_name(const MarginalFamily& f) {
        switch (f.kind) {
        case MarginalFamily::Kind::Gamma: return "gamma";
        case MarginalFamily::Kind::SigmaStable: return "sigma_stable";
        case MarginalFamily::Kind::GeneralizedGamma: return "generalized_gamma";
        }
        return "gamma";
    }
};

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing", 0);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compound random measure priors and mixture samplers"};
    app.require_subcommand(1);

    // simulate-prior
    auto* sim = app.add_subcommand("simulate-prior", "draw one truncated prior realization as CSV");
    std::optional<std::string> sim_config;
    PriorFlags sim_prior;
    std::size_t sim_d = 2;
    double sim_epsilon = 1e-6;
    std::optional<std::size_t> sim_jumps;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    sim->add_option("--config", sim_config, "config file (its [prior] section is used)");
    sim_prior.add(sim);
    sim->add_option("--d", sim_d, "number of dimensions")->check(CLI::PositiveNumber);
    sim->add_option("--epsilon", sim_epsilon, "residual-mass truncation fraction");
    sim->add_option("--jumps", sim_jumps, "truncate after this many jumps instead");
    sim->add_option("--seed", sim_seed, "random seed")->envname("CORM_SEED");
    sim->add_option("--out", sim_out, "output CSV (default: standard output)");

    // fit
    auto* fit = app.add_subcommand("fit", "run the MCMC sampler and write a JSON-lines trace");
    std::optional<std::string> fit_config, fit_data, fit_trace, fit_sampler, fit_kernel;
    PriorFlags fit_prior;
    std::optional<std::size_t> sweeps, burn_in, thin, auxiliary, chains, birth_death;
    std::optional<std::uint64_t> fit_seed;
    bool save_states = false;
    fit->add_option("--config", fit_config, "config file");
    fit->add_option("--data", fit_data, "dataset CSV with header group,y1,...,yp");
    fit->add_option("--trace", fit_trace, "trace output path");
    fit_prior.add(fit);
    fit->add_option("--kernel", fit_kernel, "univariate_normal or multivariate_normal");
    fit->add_option("--sampler", fit_sampler, "slice or marginal");
    fit->add_option("--sweeps", sweeps, "total sweeps including burn-in");
    fit->add_option("--burn-in", burn_in, "sweeps discarded (proposal scales adapt during these)");
    fit->add_option("--thin", thin, "keep every thin-th sweep after burn-in");
    fit->add_option("--seed", fit_seed, "random seed")->envname("CORM_SEED");
    fit->add_option("--auxiliary", auxiliary, "auxiliary atoms per reallocation (non-conjugate marginal sampler)");
    fit->add_option("--chains", chains, "independent chains run in parallel");
    fit->add_option("--birth-death-moves", birth_death, "birth/death proposals per slice sweep");
    fit->add_flag("--save-states", save_states, "store each retained sweep's predictive mixture");

    // predict-density
    auto* pred = app.add_subcommand("predict-density", "posterior predictive densities from a trace with states");
    std::string pred_trace, pred_out, pred_points;
    std::optional<std::size_t> pred_group;
    double lo = -5.0, hi = 5.0;
    std::size_t grid_n = 201;
    pred->add_option("--trace", pred_trace, "trace written by fit --save-states")->required();
    pred->add_option("--group", pred_group, "group index from 1 (default: all groups)");
    pred->add_option("--lo", lo, "grid lower end (one-dimensional data)");
    pred->add_option("--hi", hi, "grid upper end (one-dimensional data)");
    pred->add_option("--n", grid_n, "grid size");
    pred->add_option("--points", pred_points, "CSV of evaluation points with header x1,...,xp");
    pred->add_option("--out", pred_out, "output CSV (default: standard output)");

    // diagnostics
    auto* diag = app.add_subcommand("diagnostics", "ESS, acceptance rates and the HPD interval of phi");
    std::string diag_trace;
    diag->add_option("--trace", diag_trace, "trace file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            RunConfig c = sim_config ? load_config(*sim_config) : RunConfig{};
            sim_prior.apply(c);
            c.validate();
            const CoRMSpec spec = c.spec(sim_d);
            const Truncation t = sim_jumps ? Truncation::jump_count(*sim_jumps) : Truncation::residual_mass(sim_epsilon);
            Rng rng(sim_seed);
            const CoRMRealization r = sample_corm(spec, t, rng);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            if (sim_out.empty()) {
                write_realization_csv(std::cout, r);
            } else {
                auto out = open_output(sim_out);
                write_realization_csv(out, r);
            }
        } else if (fit->parsed()) {
            RunConfig c = fit_config ? load_config(*fit_config) : RunConfig{};
            fit_prior.apply(c);
            if (fit_data) c.data_path = *fit_data;
            if (fit_trace) c.trace_path = *fit_trace;
            if (fit_kernel) c.kernel = parse_kernel(*fit_kernel);
            if (fit_sampler) c.sampler = parse_sampler(*fit_sampler);
            if (sweeps) c.sweeps = *sweeps;
            if (burn_in) c.burn_in = *burn_in;
            if (thin) c.thin = *thin;
            if (fit_seed) c.seed = *fit_seed;
            if (auxiliary) c.auxiliary = *auxiliary;
            if (chains) c.chains = *chains;
            if (birth_death) c.birth_death_moves = *birth_death;
            if (save_states) c.save_states = true;
            c.validate();
            if (c.data_path.empty()) throw ParseError("fit: no dataset given (--data or [output] data)", 0);
            if (c.trace_path.empty()) throw ParseError("fit: no trace path given (--trace or [output] trace)", 0);
            const Dataset data = load_dataset(c.data_path);
            auto out = open_output(c.trace_path);
            run(c, data, out);
        } else if (pred->parsed()) {
            const Trace trace = load_trace(pred_trace);
            std::vector<MixtureSnapshot> states;
            for (const auto& r : trace.records)
                if (r.state) states.push_back(*r.state);
            if (states.empty()) throw ParseError("predict-density: trace has no stored states (fit with --save-states)", 0);
            std::vector<Vector> points;
            if (!pred_points.empty()) {
                std::ifstream in(pred_points);
                if (!in) throw ParseError("cannot open " + pred_points, 0);
                std::string header;
                std::getline(in, header);
                std::string line;
                std::size_t line_no = 1;
                while (std::getline(in, line)) {
                    ++line_no;
                    if (line.empty()) continue;
                    std::vector<double> xs;
                    std::istringstream cells(line);
                    std::string cell;
                    while (std::getline(cells, cell, ',')) {
                        try {
                            xs.push_back(std::stod(cell));
                        } catch (const std::exception&) {
                            throw ParseError("points: non-numeric cell '" + cell + "'", line_no);
                        }
                    }
                    points.push_back(Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
                }
            } else {
                points = linear_grid(lo, hi, grid_n);
            }
            const std::size_t groups = states.front().weights.size();
            std::vector<DensityGrid> grids;
            for (std::size_t j = 0; j < groups; ++j) {
                if (pred_group && *pred_group != j + 1) continue;
                grids.push_back(predictive_density(states, j, points));
            }
            if (grids.empty()) throw DomainError("predict-density: group out of range");
            if (pred_out.empty()) {
                write_density_csv(std::cout, grids);
            } else {
                auto out = open_output(pred_out);
                write_density_csv(out, grids);
            }
        } else if (diag->parsed()) {
            std::cout << format_report(diagnose(load_trace(diag_trace)));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
