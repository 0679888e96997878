#pragma once

#include "corm/io.hpp"
#include "corm/kernels.hpp"
#include "corm/mcmc.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace corm {

/// Trace files are JSON lines: a header, one record per retained sweep, and
/// a footer per chain.  Readers accept any minor version of their major and
/// reject newer majors.
inline constexpr int kTraceSchemaMajor = 1;
inline constexpr int kTraceSchemaMinor = 0;

struct TraceRecord {
    std::size_t chain = 0;
    std::size_t sweep = 0;
    SweepSummary summary;
    std::optional<MixtureSnapshot> state;
};

struct TraceFooter {
    std::size_t chain = 0;
    std::size_t records = 0;
    AcceptanceReport acceptance;
};

struct Trace {
    int schema_major = kTraceSchemaMajor;
    int schema_minor = kTraceSchemaMinor;
    std::string sampler;
    std::size_t chains = 0;
    std::string config;  // the run configuration in config-file syntax
    std::vector<TraceRecord> records;
    std::vector<TraceFooter> footers;

    std::vector<const TraceRecord*> chain_records(std::size_t chain) const;
};

std::string format_trace_header(const RunConfig& config);
std::string format_trace_record(const TraceRecord& record);
std::string format_trace_footer(const TraceFooter& footer);

/// Throws ParseError for malformed lines, a newer schema major, or a trace
/// whose footers are missing or disagree with the record count.
Trace read_trace(std::istream& in);
Trace load_trace(const std::string& path);

} // namespace corm
