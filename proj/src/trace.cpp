#include "corm/trace.hpp"

#include "corm/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace corm {

namespace {

using nlohmann::json;

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json vec(const Vector& x) {
    json out = json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x(i));
    return out;
}

Vector to_vector(const json& j) {
    Vector out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return out;
}

json snapshot_json(const MixtureSnapshot& s) {
    json comps = json::array();
    for (const auto& c : s.components) {
        json scale = json::array();
        for (Eigen::Index r = 0; r < c.scale.rows(); ++r)
            for (Eigen::Index k = 0; k < c.scale.cols(); ++k) scale.push_back(c.scale(r, k));
        comps.push_back({{"location", vec(c.location)}, {"scale", scale}, {"df", number(c.df)}});
    }
    return {{"components", comps}, {"weights", s.weights}};
}

MixtureSnapshot snapshot_from(const json& j) {
    MixtureSnapshot s;
    for (const auto& c : j.at("components")) {
        Vector loc = to_vector(c.at("location"));
        const auto p = loc.size();
        const auto& flat = c.at("scale");
        if (flat.size() != static_cast<std::size_t>(p * p)) throw ParseError("trace: component scale has wrong size", 0);
        Matrix scale(p, p);
        for (Eigen::Index r = 0; r < p; ++r)
            for (Eigen::Index k = 0; k < p; ++k) scale(r, k) = flat[static_cast<std::size_t>(r * p + k)].get<double>();
        s.components.emplace_back(std::move(loc), std::move(scale),
                                  number_or(c.at("df"), std::numeric_limits<double>::infinity()));
    }
    s.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    for (const auto& row : s.weights)
        if (row.size() != s.components.size()) throw ParseError("trace: weight row length mismatch", 0);
    return s;
}

} // namespace

std::vector<const TraceRecord*> Trace::chain_records(std::size_t chain) const {
    std::vector<const TraceRecord*> out;
    for (const auto& r : records)
        if (r.chain == chain) out.push_back(&r);
    return out;
}

std::string format_trace_header(const RunConfig& config) {
    // The trace's own path is left out so that identical runs written to
    // different files are byte-identical.
    RunConfig recorded = config;
    recorded.trace_path.clear();
    std::ostringstream cfg;
    write_config(cfg, recorded);
    const json j = {{"type", "header"},
                    {"schema", "corm-trace"},
                    {"schema_version", {kTraceSchemaMajor, kTraceSchemaMinor}},
                    {"sampler", sampler_name(config.sampler)},
                    {"chains", config.chains},
                    {"config", cfg.str()}};
    return j.dump();
}

std::string format_trace_record(const TraceRecord& r) {
    json v = json::array();
    for (double x : r.summary.v) v.push_back(number(x));
    json dev = json::array();
    for (double x : r.summary.deviance) dev.push_back(number(x));
    json j = {{"type", "sweep"},
              {"chain", r.chain},
              {"sweep", r.sweep},
              {"K", r.summary.clusters},
              {"phi", number(r.summary.phi)},
              {"v", v},
              {"log_residual_mass", number(r.summary.log_residual_mass)},
              {"deviance", dev}};
    if (r.state) j["state"] = snapshot_json(*r.state);
    return j.dump();
}

std::string format_trace_footer(const TraceFooter& f) {
    json rates = json::array();
    for (double x : f.acceptance.rates) rates.push_back(number(x));
    const json j = {{"type", "footer"},
                    {"chain", f.chain},
                    {"records", f.records},
                    {"acceptance", {{"names", f.acceptance.names}, {"rates", rates}}}};
    return j.dump();
}

Trace read_trace(std::istream& in) {
    Trace t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("trace: malformed JSON: ") + e.what(), line_no);
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (!have_header) {
                if (type != "header" || j.at("schema").get<std::string>() != "corm-trace")
                    throw ParseError("trace: missing header", line_no);
                t.schema_major = j.at("schema_version").at(0).get<int>();
                t.schema_minor = j.at("schema_version").at(1).get<int>();
                if (t.schema_major > kTraceSchemaMajor)
                    throw ParseError("trace: schema major version " + std::to_string(t.schema_major) +
                                         " is newer than this reader supports",
                                     line_no);
                t.sampler = j.at("sampler").get<std::string>();
                t.chains = j.at("chains").get<std::size_t>();
                t.config = j.at("config").get<std::string>();
                have_header = true;
            } else if (type == "sweep") {
                TraceRecord r;
                r.chain = j.at("chain").get<std::size_t>();
                r.sweep = j.at("sweep").get<std::size_t>();
                r.summary.clusters = j.at("K").get<std::size_t>();
                r.summary.phi = number_or(j.at("phi"), std::numeric_limits<double>::quiet_NaN());
                for (const auto& x : j.at("v")) r.summary.v.push_back(number_or(x, std::numeric_limits<double>::quiet_NaN()));
                r.summary.log_residual_mass =
                    number_or(j.at("log_residual_mass"), -std::numeric_limits<double>::infinity());
                for (const auto& x : j.at("deviance"))
                    r.summary.deviance.push_back(number_or(x, std::numeric_limits<double>::infinity()));
                if (j.contains("state")) r.state = snapshot_from(j.at("state"));
                t.records.push_back(std::move(r));
            } else if (type == "footer") {
                TraceFooter f;
                f.chain = j.at("chain").get<std::size_t>();
                f.records = j.at("records").get<std::size_t>();
                f.acceptance.names = j.at("acceptance").at("names").get<std::vector<std::string>>();
                for (const auto& x : j.at("acceptance").at("rates"))
                    f.acceptance.rates.push_back(number_or(x, std::numeric_limits<double>::quiet_NaN()));
                t.footers.push_back(std::move(f));
            } else if (type == "header") {
                throw ParseError("trace: repeated header", line_no);
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("trace: bad record: ") + e.what(), line_no);
        }
    }
    if (!have_header) throw ParseError("trace: empty file", line_no);
    if (t.footers.size() != t.chains) throw ParseError("trace: truncated (missing chain footers)", line_no);
    for (const auto& f : t.footers)
        if (t.chain_records(f.chain).size() != f.records)
            throw ParseError("trace: truncated (record count disagrees with footer)", line_no);
    return t;
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("trace: cannot open " + path, 0);
    return read_trace(in);
}

} // namespace corm
