#pragma once

#include <stdexcept>
#include <string>

namespace pngkpz {

// Parameter or argument outside the documented domain.
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Requested computation exceeds a configured size budget.
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadrature or node doubling failed to reach the requested tolerance.
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pngkpz
