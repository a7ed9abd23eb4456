#pragma once

#include <stdexcept>
#include <string>

namespace ieh {

// Malformed inputs: dimension mismatches, bad config values, empty horizons.
// Distinct from model-level outcomes such as an infeasible LP.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative procedure hit its iteration limit without meeting its
// convergence test. Never a silent wrong answer.
class NonConvergence : public std::runtime_error {
public:
    explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// The storage-energy-equivalent transformation would push curtailment
// outside its bounds at some period; the sufficient exactness condition fails there.
class TransformInfeasible : public std::runtime_error {
public:
    TransformInfeasible(const std::string& what, int period)
        : std::runtime_error(what), period_(period) {}
    int period() const { return period_; }

private:
    int period_;
};

// A market round was violated: missing bid, misaligned horizon, broken bracket.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario/fleet/series file problems.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ieh
