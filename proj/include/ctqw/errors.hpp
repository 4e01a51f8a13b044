#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctqw {

// Argument validation uses std::invalid_argument directly; the types below
// cover failures that only show up while computing.

/// A sequence window has zero variance, so a correlation coefficient is undefined.
class DegenerateSequence : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative numerical method did not converge within its budget.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computed moment came out inconsistent beyond rounding (e.g. negative variance).
class NumericalInconsistency : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Probability reached the hard-wall edges of the lattice.
class LatticeTooSmall : public std::runtime_error {
public:
    LatticeTooSmall(std::size_t current, std::size_t required, double leak, double time)
        : std::runtime_error("lattice too small: N=" + std::to_string(current) +
                             " leaked " + std::to_string(leak) + " probability to the edges at t=" +
                             std::to_string(time) + "; use at least N=" + std::to_string(required))
        , current_sites(current)
        , required_sites(required)
    {
    }

    std::size_t current_sites;
    std::size_t required_sites;
};

} // namespace ctqw
