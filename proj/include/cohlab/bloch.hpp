#pragma once

#include <complex>
#include <functional>
#include <span>

#include "cohlab/errors.hpp"
#include "cohlab/timeseries.hpp"
#include "cohlab/vec3.hpp"

namespace cohlab::bloch {

// Tolerance for |p| overshooting 1 by round-off; beyond it the state is
// rejected as unphysical.
inline constexpr double kNormSlack = 1e-9;

// Polarization vector of a two-state system. p.z carries the population
// imbalance, (p.x, p.y) the coherence between the basis states.
struct BlochState {
    Vec3 p;

    double norm() const { return p.norm(); }
    bool physical() const { return p.finite() && p.norm() <= 1.0 + kNormSlack; }
};

// Explicit 2x2 density matrix, row-major.
struct DensityMatrix2 {
    std::complex<double> r11, r12, r21, r22;

    std::complex<double> trace() const { return r11 + r22; }
    // Throws InvalidMatrixError on hermiticity/trace/positivity violation.
    void validate(double tol = 1e-12) const;
};

// Precession angular-velocity vector, optionally time dependent. The
// dynamics below treats it directly as the rotation rate of the
// polarization; a Hamiltonian h.sigma maps to a field of 2h.
class InternalField {
public:
    InternalField(Vec3 constant) : constant_(constant), is_constant_(true) {}
    InternalField(std::function<Vec3(double)> f) : f_(std::move(f)), is_constant_(false) {}

    static InternalField from_hamiltonian(Vec3 h) { return InternalField(2.0 * h); }

    Vec3 at(double t) const {
        if (is_constant_) return constant_;
        Vec3 v = f_(t);
        if (!v.finite()) throw std::invalid_argument("InternalField: non-finite value");
        return v;
    }
    bool is_constant() const { return is_constant_; }

private:
    std::function<Vec3(double)> f_;
    Vec3 constant_;
    bool is_constant_;
};

// Coherence damping rate, >= 0.
struct DecoherenceRate {
    double d = 0.0;
    explicit DecoherenceRate(double rate) : d(rate) {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("DecoherenceRate: must be finite and >= 0");
    }
};

// rho = (I + p.sigma)/2
DensityMatrix2 to_density(const BlochState& p);
// p_i = Tr[rho sigma_i]; validates rho first.
BlochState from_density(const DensityMatrix2& rho);

// Damped precession dp/dt = p x v - d * p_T, integrated with fixed-step
// classical RK4 and sampled every dt. Requires dt*max(|v|, d) <= 0.1.
TimeSeries evolve(const BlochState& p0, const InternalField& v, DecoherenceRate d, double t_end,
                  double dt);

// Same integrator, streaming: observe(step_index, time, p) is called for
// every sample including the initial state. Avoids storing long runs.
void evolve_observe(const BlochState& p0, const InternalField& v, DecoherenceRate d, double t_end,
                    double dt, const std::function<void(std::size_t, double, const Vec3&)>& observe);

// |p|: 1 for pure states, 0 for the maximally mixed state.
double purity(const BlochState& p);

// Von Neumann entropy in nats: ln 2 - [(1+P)ln(1+P) + (1-P)ln(1-P)]/2.
double entropy(const BlochState& p);

// d(entropy)/dt under the damped dynamics:
// (D P.P_T) * ln[(1+P)/(1-P)] / (2P); always >= 0, singular at P = 1.
double entropy_rate(const BlochState& p, DecoherenceRate d);

// Evolves rho unitarily under H = h.sigma (exact rotation) and returns
// max_t |Tr[rho(t) O] - Tr[rho(0) O]| over the sample times. Zero (to
// round-off) whenever [rho, H] = 0. A time-dependent field is sampled at
// t = 0.
double stationarity_check(const DensityMatrix2& rho, const InternalField& h,
                          const DensityMatrix2& observable, std::span<const double> t_samples);

}  // namespace cohlab::bloch
