#pragma once

#include <stdexcept>
#include <string>

namespace corm {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parameter region that no implemented representation covers.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive quadrature ran out of budget; carries the best estimate reached.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double best_estimate, double error_estimate)
        : std::runtime_error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

    double best_estimate() const noexcept { return best_estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double best_estimate_;
    double error_estimate_;
};

/// Iterative procedure (root finder, rejection loop) hit its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sampler state violates a structural invariant.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed input file; line is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A sampler update failed; the message names the chain and sweep.
class SamplerError : public std::runtime_error {
public:
    SamplerError(const std::string& what, std::size_t chain, std::size_t sweep)
        : std::runtime_error("chain " + std::to_string(chain) + ", sweep " + std::to_string(sweep) + ": " + what),
          chain_(chain), sweep_(sweep) {}

    std::size_t chain() const noexcept { return chain_; }
    std::size_t sweep() const noexcept { return sweep_; }

private:
    std::size_t chain_;
    std::size_t sweep_;
};

} // namespace corm
