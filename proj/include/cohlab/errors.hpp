#pragma once

#include <stdexcept>
#include <string>

namespace cohlab {

// Bloch vector outside the unit ball (beyond round-off tolerance).
struct UnphysicalStateError : std::domain_error {
    explicit UnphysicalStateError(const std::string& what) : std::domain_error(what) {}
};

// Density matrix violating hermiticity / trace / positivity tolerances,
// or an S-matrix failing its unitarity bound.
struct InvalidMatrixError : std::invalid_argument {
    explicit InvalidMatrixError(const std::string& what) : std::invalid_argument(what) {}
};

// Integrator step too coarse for the requested dynamics.
struct StepSizeError : std::invalid_argument {
    explicit StepSizeError(const std::string& what) : std::invalid_argument(what) {}
};

// Wrong analytic branch requested (e.g. underdamped input to an
// overdamped-only formula).
struct BranchError : std::domain_error {
    explicit BranchError(const std::string& what) : std::domain_error(what) {}
};

// Quadrature or eigensolve failed to converge at the allowed resolution.
struct ResolutionError : std::runtime_error {
    explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

// Noise calibration could not bracket or reach the requested target.
struct CalibrationError : std::runtime_error {
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cohlab
