#pragma once

#include "corm/io.hpp"
#include "corm/trace.hpp"

#include <iosfwd>
#include <vector>

namespace corm {

struct ChainResult {
    std::vector<TraceRecord> records;
    AcceptanceReport acceptance;
};

/// Runs config.chains independent chains, one worker thread each, with rng
/// streams keyed by (seed, chain).  Proposal scales adapt during burn-in
/// only.  Failures are rethrown as SamplerError naming chain and sweep.
std::vector<ChainResult> run_chains(const RunConfig& config, const Dataset& data);

/// run_chains followed by a trace written in chain order.
void run(const RunConfig& config, const Dataset& data, std::ostream& trace);

} // namespace corm
