#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cohlab/constants.hpp"
#include "cohlab/errors.hpp"

namespace cohlab::squid {

// rf-SQUID circuit in flux units of Phi0 and energy units hbar/sqrt(LC).
// The dimensionless potential is
//   u(x) = (x - x_e)^2 / (2g) - beta cos(2 pi x) / (4 pi^2 g)
// with quantumness g = (hbar/Phi0^2) sqrt(L/C); a double well forms near
// half-integer external flux when beta > 1.
struct SquidParams {
    double beta = 1.19;
    double inductance = 400e-12;   // H
    double capacitance = 0.1e-12;  // F
    int n_levels = 8;

    double quantumness() const;  // g
    double time_unit() const;    // sqrt(LC), seconds per dimensionless time unit

    // Full validation including the double-well requirement beta > 1;
    // spectral diagnostics below only need basic_validate().
    void validate() const;
    void basic_validate() const;
};

// Linear ramp of the external flux from x_start to x_end over t_sweep
// time units.
struct SweepProtocol {
    double x_start = 0.0;
    double x_end = 0.0;
    double t_sweep = 1.0;

    void validate() const;
    double x_at(double t) const { return x_start + (x_end - x_start) * (t / t_sweep); }
    double ramp_rate() const { return (x_end - x_start) / t_sweep; }
};

// Gaussian white flux noise added to the external flux; amplitude is in
// flux units per sqrt(time unit), band-limited at the integrator step.
struct NoiseModel {
    double amplitude = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SpatialGrid {
    double x_lo = 0.15;
    double x_hi = 0.85;
    int n = 2048;

    double dx() const { return (x_hi - x_lo) / (n - 1); }
    double x(int i) const { return x_lo + i * dx(); }
};

// Instantaneous eigenbasis at one external flux. Wavefunction column j is
// level j sampled on the grid, orthonormal with weight dx. Energies carry
// one Richardson refinement of the second-order finite difference.
struct SpectrumSnapshot {
    double x_external = 0.5;
    SpatialGrid grid;
    std::vector<double> energies;   // ascending, n_levels entries
    Eigen::MatrixXd wavefunctions;  // grid.n x n_levels
};

struct WellGeometry {
    bool double_well = false;
    double x_left = 0.0;
    double x_barrier = 0.0;
    double x_right = 0.0;
};

double potential(double x, double x_e, const SquidParams& params);

// Stationary points of the potential around x_e (two minima and the
// barrier top when the double well exists).
WellGeometry find_wells(double x_e, const SquidParams& params);

// Lowest n_levels eigenpairs of -(g/2) d^2/dx^2 + u(x) by finite
// differences. Grid must cover both wells with at least 512 points.
SpectrumSnapshot eigensystem(double x_e, const SquidParams& params, const SpatialGrid& grid = {});

// Tunneling splitting E1 - E0 at the symmetric point x_e = 1/2.
double doublet_splitting(const SquidParams& params, const SpatialGrid& grid = {});

// Symmetric linear sweep through the degeneracy point whose endpoint
// well asymmetry is tilt_over_splitting times the tunneling splitting;
// endpoints computed from the measured splitting and well separation.
SweepProtocol inversion_protocol(const SquidParams& params, double t_sweep,
                                 double tilt_over_splitting = 8.0);

// The default step keeps the propagator converged (probabilities move by
// < 1e-6 under further halving) and defines the white-noise band limit;
// calibration and sweeps share it so the calibrated rate is exactly the
// rate the sweeps experience.
struct SweepOptions {
    double dt_max = 0.25;  // time units
    int min_steps = 1024;  // resolves the crossing transit for short sweeps
};

struct SweepResult {
    double inversion_probability = 0.0;
    double uncertainty = 0.0;  // standard error over noise realizations
    int n_trajectories = 0;
    double max_top_level_population = 0.0;
    bool truncation_warning = false;  // top-level population exceeded 1%
    double max_norm_drift = 0.0;      // worst | ||c|| - 1 | over the run
};

// Monte Carlo adiabatic-inversion experiment: each trajectory starts in
// the instantaneous ground state (localized in the starting well),
// propagates in the instantaneous eigenbasis of the ramp Hamiltonian
// with the noise realization entering as a flux-jitter potential, and is
// read out as the probability mass beyond the final barrier top.
// Bit-reproducible for a given seed; trajectory k draws its noise from a
// generator seeded with splitmix64(seed + k).
SweepResult adiabatic_sweep(const SquidParams& params, const SweepProtocol& protocol,
                            const NoiseModel& noise, int n_trajectories, std::uint64_t seed,
                            const SweepOptions& opts = {},
                            std::vector<double>* per_trajectory = nullptr);

// Ensemble-averaged decay rate of the off-diagonal element of the
// two-level reduced density matrix for an equal superposition of the
// lowest doublet held at the symmetric point.
double measure_dephasing_rate(const SquidParams& params, double amplitude, double t_window,
                              int n_trajectories, std::uint64_t seed, double dt = 0.25);

// Finds the white-noise amplitude whose measured dephasing rate matches
// 1/target_inverse_d within 5%, by a quadratic-law first guess followed
// by bisection on a fixed-seed (deterministic) response.
NoiseModel calibrate_noise(const SquidParams& params, double target_inverse_d,
                           std::uint64_t seed);

// Thermal estimate D = k_B T / (e^2 R), in 1/s.
double estimate_d_from_temperature(double temperature_k, double resistance_ohm);

// Seed-splitting rule shared by the Monte Carlo drivers.
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t k);

}  // namespace cohlab::squid
