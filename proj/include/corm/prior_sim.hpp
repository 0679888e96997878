#pragma once

#include "corm/corm.hpp"
#include "corm/random.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace corm {

/// Stop either after a fixed number of jumps or once the omitted jumps carry
/// at most `epsilon` of the directing mass integral of min(1, z).
struct Truncation {
    enum class Kind { JumpCount, ResidualMass };
    Kind kind = Kind::ResidualMass;
    std::size_t jumps = 1000;
    double epsilon = 1e-6;
    std::size_t max_jumps = 10'000'000;

    static Truncation jump_count(std::size_t n) { return {Kind::JumpCount, n, 0.0}; }
    static Truncation residual_mass(double epsilon) { return {Kind::ResidualMass, 1000, epsilon}; }
};

struct CoRMRealization {
    std::vector<double> jumps;                // decreasing
    std::vector<double> locations;
    std::vector<std::vector<double>> scores;  // scores[j][i], d rows
    double truncation_level = 0.0;
    std::vector<std::string> warnings;

    std::size_t size() const { return jumps.size(); }
    std::size_t dimension() const { return scores.size(); }
    /// Total mass of dimension j restricted to locations in [lo, hi).
    double mass(std::size_t j, double lo = 0.0, double hi = 1.0) const;
};

struct NormalizedWeights {
    std::vector<std::vector<double>> weights;  // weights[j][i]
};

using LocationSampler = std::function<double(Rng&)>;

/// Ferguson-Klass simulator with a tabulated inverse directing tail integral.
class PriorSimulator {
public:
    PriorSimulator(const CoRMSpec& spec, Truncation truncation, LocationSampler locations = {});

    CoRMRealization sample(Rng& rng) const;

    /// Directing-tail inverse used for the jumps (tabulated where no closed form exists).
    double inverse_tail(double level) const;
    double truncation_level() const { return threshold_; }

private:
    struct Table;

    CoRMSpec spec_;
    Truncation truncation_;
    LocationSampler locations_;
    double threshold_ = 0.0;
    double threshold_level_ = 0.0;
    bool closed_inverse_ = false;
    std::shared_ptr<const Table> table_;
    std::vector<std::string> warnings_;
};

CoRMRealization sample_corm(const CoRMSpec& spec, const Truncation& truncation, Rng& rng);

NormalizedWeights normalize(const CoRMRealization& realization);

/// Ratios m_1 / m_2 of independent Ga(phi) scores.
std::vector<double> score_ratio_sample(double phi, std::size_t n, Rng& rng);

/// CSV with columns jump_index, J, location, m_1..m_d.
void write_realization_csv(std::ostream& out, const CoRMRealization& realization);

} // namespace corm
