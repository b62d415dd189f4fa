#include "cohlab/gravity.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohlab::gravity {

void ImpactGeometry::validate() const {
    if (!(l_max > 0.0)) throw std::invalid_argument("ImpactGeometry: l_max must be > 0");
    if (!(b_min >= 0.0 && b_min < l_max))
        throw std::invalid_argument("ImpactGeometry: need 0 <= b_min < l_max");
    if (n_points < 9) throw std::invalid_argument("ImpactGeometry: n_points too small");
}

double eikonal_phase(double b, double alpha, double l_max) {
    if (!(b > 0.0)) throw std::domain_error("eikonal_phase: b must be > 0 (log divergence)");
    if (!(l_max > 0.0)) throw std::domain_error("eikonal_phase: l_max must be > 0");
    // asinh form is stable for b >> l_max where the direct log cancels.
    return 2.0 * alpha * std::asinh(l_max / b);
}

namespace {

// Simpson rule over f(u) with b = e^u; the substitution absorbs the
// logarithmic behavior of the phase near b = 0.
double simpson_log_b(double u_lo, double u_hi, int n, double dalpha, double l_max) {
    if (n % 2 == 0) ++n;
    const double h = (u_hi - u_lo) / (n - 1);
    auto f = [&](double u) {
        const double b = std::exp(u);
        const double dd = 2.0 * dalpha * std::asinh(l_max / b);
        const double s = std::sin(dd);
        // 2 pi b (1 - cos 2dd) db -> 2 pi e^{2u} * 2 sin^2(dd) du
        return 4.0 * std::numbers::pi * b * b * s * s;
    };
    double acc = f(u_lo) + f(u_hi);
    for (int i = 1; i < n - 1; ++i) acc += f(u_lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

double impact_rate(double flux, double alpha1, double alpha2, const ImpactGeometry& geom) {
    geom.validate();
    if (!(flux >= 0.0)) throw std::invalid_argument("impact_rate: flux must be >= 0");
    const double dalpha = alpha2 - alpha1;
    if (dalpha == 0.0) return 0.0;  // integrand identically zero

    // Below b/l_max ~ 1e-9 the weight b^2 makes the contribution
    // negligible at the 1e-6 convergence target.
    const double b_lo = std::max(geom.b_min, 1e-9 * geom.l_max);
    const double u_lo = std::log(b_lo);
    const double u_hi = std::log(geom.l_max);

    int n = std::max(geom.n_points, 129);
    double prev = simpson_log_b(u_lo, u_hi, n, dalpha, geom.l_max);
    for (int iter = 0; iter < 14; ++iter) {
        n = 2 * (n - 1) + 1;
        const double cur = simpson_log_b(u_lo, u_hi, n, dalpha, geom.l_max);
        if (std::abs(cur - prev) <= 1e-6 * std::abs(cur)) return flux * cur;
        prev = cur;
    }
    throw ResolutionError("impact_rate: quadrature did not converge to relative 1e-6");
}

double small_delta_estimate(double flux, double delta_alpha, double l_max) {
    return flux * l_max * l_max * delta_alpha * delta_alpha;
}

double thermal_rate(double temperature, double delta_m) {
    if (!(temperature >= 0.0)) throw std::domain_error("thermal_rate: temperature must be >= 0");
    return temperature * temperature * temperature * delta_m * delta_m;
}

GalaxyVerdict galaxy_decoherence(double delta_alpha, double b, double l_max, double threshold) {
    GalaxyVerdict v;
    v.delta_phase = eikonal_phase(b, delta_alpha, l_max);
    v.decohered = std::abs(2.0 * v.delta_phase) >= threshold;
    return v;
}

}  // namespace cohlab::gravity
