#include "corm/run.hpp"

#include "corm/errors.hpp"
#include "corm/marginal_sampler.hpp"
#include "corm/slice_sampler.hpp"

#include <exception>
#include <ostream>
#include <thread>

namespace corm {

namespace {

template <class Sampler>
ChainResult drive(Sampler& sampler, const RunConfig& config, std::size_t chain, Rng& rng) {
    ChainResult out;
    if (config.burn_in == 0) sampler.freeze_adaptation();
    for (std::size_t s = 1; s <= config.sweeps; ++s) {
        try {
            sampler.sweep(rng);
            if (s == config.burn_in) sampler.freeze_adaptation();
            if (s > config.burn_in && (s - config.burn_in) % config.thin == 0) {
                TraceRecord r;
                r.chain = chain;
                r.sweep = s;
                r.summary = sampler.summary();
                if (config.save_states) r.state = sampler.snapshot();
                out.records.push_back(std::move(r));
            }
        } catch (const SamplerError&) {
            throw;
        } catch (const std::exception& e) {
            throw SamplerError(e.what(), chain, s);
        }
    }
    out.acceptance = sampler.acceptance();
    return out;
}

ChainResult run_chain(const RunConfig& config, const Dataset& data, std::size_t chain) {
    Rng rng(config.seed, static_cast<std::uint32_t>(chain), 0);
    const CoRMSpec spec = config.spec(data.d());
    const KernelModel kernel = config.kernel_model(data);
    if (config.sampler == RunConfig::Sampler::Marginal) {
        MarginalOptions options;
        options.auxiliary = config.auxiliary;
        options.phi_prior = config.phi_prior;
        MarginalSampler sampler(spec, kernel, data, options, rng);
        return drive(sampler, config, chain, rng);
    }
    SliceOptions options;
    options.phi_prior = config.phi_prior;
    options.birth_death_moves = config.birth_death_moves;
    SliceSampler sampler(spec, kernel, data, options, rng);
    return drive(sampler, config, chain, rng);
}

} // namespace

std::vector<ChainResult> run_chains(const RunConfig& config, const Dataset& data) {
    config.validate();
    data.validate();
    std::vector<ChainResult> results(config.chains);
    std::vector<std::exception_ptr> errors(config.chains);
    {
        std::vector<std::jthread> workers;
        for (std::size_t c = 0; c < config.chains; ++c)
            workers.emplace_back([&, c] {
                try {
                    results[c] = run_chain(config, data, c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

void run(const RunConfig& config, const Dataset& data, std::ostream& trace) {
    const std::vector<ChainResult> results = run_chains(config, data);
    trace << format_trace_header(config) << '\n';
    for (const auto& chain : results)
        for (const auto& r : chain.records) trace << format_trace_record(r) << '\n';
    for (std::size_t c = 0; c < results.size(); ++c)
        trace << format_trace_footer({c, results[c].records.size(), results[c].acceptance}) << '\n';
    trace.flush();
}

} // namespace corm
