#pragma once

#include "cohlab/errors.hpp"

namespace cohlab::gravity {

// Dimensionless eikonal strength alpha = G E M / v (hbar = c = 1).
struct GravitationalCoupling {
    double alpha = 0.0;

    static GravitationalCoupling from_physical(double newton_g, double energy, double mass,
                                               double speed) {
        return {newton_g * energy * mass / speed};
    }
};

struct ImpactGeometry {
    double l_max = 1.0;   // large-distance phase cutoff, also the b integration limit
    double b_min = 0.0;   // optional small-b cutoff
    int n_points = 1025;  // starting quadrature resolution (refined adaptively)

    void validate() const;
};

// Coulomb-like eikonal phase 2*alpha*ln[(l_max + sqrt(l_max^2 + b^2))/b],
// the closed form of 2*alpha*Int_0^l_max dl/sqrt(l^2 + b^2).
double eikonal_phase(double b, double alpha, double l_max);

// flux * Int 2 pi b db (1 - cos 2[delta2(b) - delta1(b)]) over
// [b_min, l_max], refined until relative 1e-6 agreement between
// successive resolutions. Identically zero when alpha1 == alpha2.
double impact_rate(double flux, double alpha1, double alpha2, const ImpactGeometry& geom);

// Lowest-order estimate flux * l_max^2 * delta_alpha^2.
double small_delta_estimate(double flux, double delta_alpha, double l_max);

// Thermal-environment scaling T^3 (delta_m)^2 in Planck units.
double thermal_rate(double temperature, double delta_m);

struct GalaxyVerdict {
    double delta_phase = 0.0;  // eikonal phase difference at impact parameter b
    bool decohered = false;    // |2 delta_phase| >= threshold
};

// Per-encounter decoherence criterion: the phase spread 2*delta_delta(b)
// reaching order unity means the overlap suppression 1 - cos(2 dd) is
// order one.
GalaxyVerdict galaxy_decoherence(double delta_alpha, double b, double l_max,
                                 double threshold = 1.0);

}  // namespace cohlab::gravity
