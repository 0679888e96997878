#include "corm/io.hpp"

#include "corm/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace corm {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    double x = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
    return x;
}

std::vector<double> parse_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& cell : split(s, ',')) {
        const auto x = parse_double(cell);
        if (!x) throw ParseError("config: " + key + " must be a comma-separated list of numbers", 0);
        out.push_back(*x);
    }
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? ", " : "") << xs[i];
    return out.str();
}

} // namespace

Dataset read_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split(line, ',');
            break;
        }
    }
    if (header.empty()) throw ParseError("dataset: empty file", line_no);
    if (header.size() < 2 || header[0] != "group")
        throw ParseError("dataset: header must be group,y1,...,yp", line_no);
    Dataset data;
    data.p = header.size() - 1;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw ParseError("dataset: expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        if (cells[0].empty()) throw ParseError("dataset: empty group label", line_no);
        Vector y(data.p);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto x = parse_double(cells[c]);
            if (!x) throw ParseError("dataset: non-numeric cell '" + cells[c] + "'", line_no);
            y(static_cast<Eigen::Index>(c - 1)) = *x;
        }
        auto [it, inserted] = index.emplace(cells[0], data.groups.size());
        if (inserted) {
            data.groups.emplace_back();
            data.group_names.push_back(cells[0]);
        }
        data.groups[it->second].push_back(std::move(y));
    }
    if (data.groups.empty()) throw ParseError("dataset: no data rows", line_no);
    return data;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("dataset: cannot open " + path, 0);
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "group";
    for (std::size_t c = 0; c < data.p; ++c) out << ",y" << (c + 1);
    out << '\n';
    out.precision(17);
    for (std::size_t j = 0; j < data.d(); ++j) {
        const std::string name = j < data.group_names.size() ? data.group_names[j] : std::to_string(j + 1);
        for (const auto& y : data.groups[j]) {
            out << name;
            for (Eigen::Index c = 0; c < y.size(); ++c) out << ',' << y(c);
            out << '\n';
        }
    }
}

void write_density_csv(std::ostream& out, const std::vector<DensityGrid>& grids) {
    const std::size_t p = grids.empty() || grids[0].points.empty() ? 1 : static_cast<std::size_t>(grids[0].points[0].size());
    out << "group";
    for (std::size_t c = 0; c < p; ++c) out << ",x" << (c + 1);
    out << ",density\n";
    out.precision(17);
    for (const auto& g : grids)
        for (std::size_t i = 0; i < g.points.size(); ++i) {
            out << (g.group + 1);
            for (Eigen::Index c = 0; c < g.points[i].size(); ++c) out << ',' << g.points[i](c);
            out << ',' << g.density[i] << '\n';
        }
}

std::string sampler_name(RunConfig::Sampler s) { return s == RunConfig::Sampler::Slice ? "slice" : "marginal"; }

RunConfig::Sampler parse_sampler(const std::string& name) {
    if (name == "slice") return RunConfig::Sampler::Slice;
    if (name == "marginal") return RunConfig::Sampler::Marginal;
    throw ParseError("unknown sampler '" + name + "' (expected slice or marginal)", 0);
}

KernelModel::Kind parse_kernel(const std::string& name) {
    if (name == "univariate_normal") return KernelModel::Kind::UnivariateNormal;
    if (name == "multivariate_normal") return KernelModel::Kind::MultivariateNormal;
    throw ParseError("unknown kernel '" + name + "' (expected univariate_normal or multivariate_normal)", 0);
}

std::string kernel_name(KernelModel::Kind kind) {
    return kind == KernelModel::Kind::UnivariateNormal ? "univariate_normal" : "multivariate_normal";
}

MarginalFamily parse_family(const std::string& name, double sigma, double a) {
    MarginalFamily f;
    if (name == "gamma")
        f = MarginalFamily::gamma();
    else if (name == "sigma_stable")
        f = MarginalFamily::sigma_stable(sigma);
    else if (name == "generalized_gamma")
        f = MarginalFamily::generalized_gamma(sigma, a);
    else
        throw ParseError("unknown marginal family '" + name + "'", 0);
    f.validate();
    return f;
}

void RunConfig::validate() const {
    family.validate();
    if (!(phi > 0.0)) throw DomainError("config: phi must be positive");
    if (!phi_prior.is_fixed() && !(phi_prior.rate > 0.0)) throw DomainError("config: phi prior rate must be positive");
    if (!(centring_mass > 0.0)) throw DomainError("config: centring mass must be positive");
    if (!(sweeps > burn_in)) throw DomainError("config: sweeps must exceed burn_in");
    if (thin < 1) throw DomainError("config: thin must be at least 1");
    if (auxiliary < 1) throw DomainError("config: auxiliary must be at least 1");
    if (chains < 1) throw DomainError("config: chains must be at least 1");
    if (kernel_k0 && !(*kernel_k0 > 0.0)) throw DomainError("config: kernel k0 must be positive");
}

CoRMSpec RunConfig::spec(std::size_t d) const { return CoRMSpec::from_marginal(d, phi, family, centring_mass); }

KernelModel RunConfig::kernel_model(const Dataset& data) const {
    const KernelModel base = KernelModel::from_data(data, kernel);
    const std::size_t p = base.dimension();
    Vector mean = base.prior_mean();
    if (kernel_mean) {
        if (kernel_mean->size() != p) throw DomainError("config: kernel mean has the wrong length");
        mean = Eigen::Map<const Vector>(kernel_mean->data(), static_cast<Eigen::Index>(p));
    }
    Matrix scale = base.scale();
    if (kernel_scale) {
        if (kernel_scale->size() != p * p) throw DomainError("config: kernel scale must have p*p entries");
        scale = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            kernel_scale->data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    }
    const double k0 = kernel_k0.value_or(base.k0());
    const double df = kernel_df.value_or(base.df());
    if (kernel == KernelModel::Kind::UnivariateNormal) return KernelModel::univariate_normal(mean(0), k0, 0.5 * df, 0.5 * scale(0, 0));
    return KernelModel::multivariate_normal(mean, k0, df, scale);
}

RunConfig read_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError("config: " + e.message(), e.line());
    }
    static const std::map<std::string, std::set<std::string>> known = {
        {"prior", {"family", "sigma", "a", "phi", "phi_prior", "phi_rate", "centring_mass"}},
        {"kernel", {"type", "mean", "k0", "df", "scale"}},
        {"sampler", {"type", "sweeps", "burn_in", "thin", "seed", "auxiliary", "chains", "birth_death_moves"}},
        {"output", {"data", "trace", "save_states"}},
    };
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw ParseError("config: unknown section [" + section + "]", 0);
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ParseError("config: unknown key " + section + "." + key, 0);
    }
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
        return std::nullopt;
    };
    auto number = [&](const std::string& key) -> std::optional<double> {
        const auto s = get(key);
        if (!s) return std::nullopt;
        const auto x = parse_double(*s);
        if (!x) throw ParseError("config: " + key + " is not a number", 0);
        return x;
    };
    auto count = [&](const std::string& key) -> std::optional<std::uint64_t> {
        const auto s = get(key);
        if (!s) return std::nullopt;
        std::uint64_t x = 0;
        const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), x);
        if (ec != std::errc() || ptr != s->data() + s->size() || s->empty())
            throw ParseError("config: " + key + " is not a nonnegative integer", 0);
        return x;
    };

    RunConfig c;
    const double sigma = number("prior.sigma").value_or(0.5);
    const double a = number("prior.a").value_or(1.0);
    c.family = parse_family(get("prior.family").value_or("gamma"), sigma, a);
    c.phi = number("prior.phi").value_or(c.phi);
    const std::string prior = get("prior.phi_prior").value_or("exponential");
    if (prior == "fixed")
        c.phi_prior = PhiPrior::fixed();
    else if (prior == "exponential")
        c.phi_prior = PhiPrior::exponential(number("prior.phi_rate").value_or(1.0));
    else
        throw ParseError("config: phi_prior must be fixed or exponential", 0);
    c.centring_mass = number("prior.centring_mass").value_or(c.centring_mass);

    if (auto s = get("kernel.type")) c.kernel = parse_kernel(*s);
    if (auto s = get("kernel.mean")) c.kernel_mean = parse_list(*s, "kernel.mean");
    if (auto s = get("kernel.scale")) c.kernel_scale = parse_list(*s, "kernel.scale");
    c.kernel_k0 = number("kernel.k0");
    c.kernel_df = number("kernel.df");

    if (auto s = get("sampler.type")) c.sampler = parse_sampler(*s);
    if (auto x = count("sampler.sweeps")) c.sweeps = *x;
    if (auto x = count("sampler.burn_in")) c.burn_in = *x;
    if (auto x = count("sampler.thin")) c.thin = *x;
    if (auto x = count("sampler.seed")) c.seed = *x;
    if (auto x = count("sampler.auxiliary")) c.auxiliary = *x;
    if (auto x = count("sampler.chains")) c.chains = *x;
    if (auto x = count("sampler.birth_death_moves")) c.birth_death_moves = *x;

    if (auto s = get("output.data")) c.data_path = *s;
    if (auto s = get("output.trace")) c.trace_path = *s;
    if (auto s = get("output.save_states")) {
        if (*s != "true" && *s != "false") throw ParseError("config: save_states must be true or false", 0);
        c.save_states = *s == "true";
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config: cannot open " + path, 0);
    return read_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
    const auto old_precision = out.precision(17);
    out << "[prior]\n";
    switch (c.family.kind) {
    case MarginalFamily::Kind::Gamma: out << "family = gamma\n"; break;
    case MarginalFamily::Kind::SigmaStable: out << "family = sigma_stable\nsigma = " << c.family.sigma << '\n'; break;
    case MarginalFamily::Kind::GeneralizedGamma:
        out << "family = generalized_gamma\nsigma = " << c.family.sigma << "\na = " << c.family.a << '\n';
        break;
    }
    out << "phi = " << c.phi << '\n';
    if (c.phi_prior.is_fixed())
        out << "phi_prior = fixed\n";
    else
        out << "phi_prior = exponential\nphi_rate = " << c.phi_prior.rate << '\n';
    out << "centring_mass = " << c.centring_mass << "\n\n[kernel]\ntype = " << kernel_name(c.kernel) << '\n';
    if (c.kernel_mean) out << "mean = " << join(*c.kernel_mean) << '\n';
    if (c.kernel_k0) out << "k0 = " << *c.kernel_k0 << '\n';
    if (c.kernel_df) out << "df = " << *c.kernel_df << '\n';
    if (c.kernel_scale) out << "scale = " << join(*c.kernel_scale) << '\n';
    out << "\n[sampler]\ntype = " << sampler_name(c.sampler) << "\nsweeps = " << c.sweeps << "\nburn_in = " << c.burn_in
        << "\nthin = " << c.thin << "\nseed = " << c.seed << "\nauxiliary = " << c.auxiliary << "\nchains = " << c.chains
        << "\nbirth_death_moves = " << c.birth_death_moves << "\n\n[output]\n";
    if (!c.data_path.empty()) out << "data = " << c.data_path << '\n';
    if (!c.trace_path.empty()) out << "trace = " << c.trace_path << '\n';
    out << "save_states = " << (c.save_states ? "true" : "false") << '\n';
    out.precision(old_precision);
}

} // namespace corm
