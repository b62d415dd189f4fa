#include "cohlab/bloch.hpp"

#include <cmath>

namespace cohlab::bloch {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

// Clamp |p| into the unit ball when the overshoot is round-off sized;
// reject anything larger.
Vec3 checked_polarization(const BlochState& s, const char* where) {
    if (!s.p.finite()) throw UnphysicalStateError(std::string(where) + ": non-finite state");
    const double n = s.p.norm();
    if (n > 1.0 + kNormSlack)
        throw UnphysicalStateError(std::string(where) + ": |p| = " + std::to_string(n) + " > 1");
    if (n > 1.0) return s.p / n;
    return s.p;
}

double xlnx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// ln[(1+P)/(1-P)] / (2P), continuous through P = 0.
double atanh_over_p(double p) {
    if (p < 1e-12) return 1.0;
    return std::log1p(2.0 * p / (1.0 - p)) / (2.0 * p);
}

Vec3 deriv(const Vec3& p, const Vec3& v, double d) {
    Vec3 dp = p.cross(v);
    dp.x -= d * p.x;
    dp.y -= d * p.y;
    return dp;
}

}  // namespace

void DensityMatrix2::validate(double tol) const {
    if (std::abs(r21 - std::conj(r12)) > tol)
        throw InvalidMatrixError("DensityMatrix2: not Hermitian");
    if (std::abs(r11.imag()) > tol || std::abs(r22.imag()) > tol)
        throw InvalidMatrixError("DensityMatrix2: complex diagonal");
    if (std::abs(trace() - 1.0) > tol) throw InvalidMatrixError("DensityMatrix2: trace != 1");
    // Eigenvalues of a Hermitian 2x2 with unit trace: 1/2 +- |p|/2.
    const double pz = (r11 - r22).real();
    const double px = 2.0 * r12.real();
    const double py = -2.0 * r12.imag();
    const double lam_min = 0.5 * (1.0 - std::sqrt(px * px + py * py + pz * pz));
    if (lam_min < -tol) throw InvalidMatrixError("DensityMatrix2: negative eigenvalue");
}

DensityMatrix2 to_density(const BlochState& s) {
    const Vec3 p = checked_polarization(s, "to_density");
    DensityMatrix2 rho;
    rho.r11 = 0.5 * (1.0 + p.z);
    rho.r22 = 0.5 * (1.0 - p.z);
    rho.r12 = 0.5 * (p.x - kI * p.y);
    rho.r21 = 0.5 * (p.x + kI * p.y);
    return rho;
}

BlochState from_density(const DensityMatrix2& rho) {
    rho.validate();
    // Tr[rho sigma_i]
    return {{(rho.r12 + rho.r21).real(), (kI * (rho.r12 - rho.r21)).real(),
             (rho.r11 - rho.r22).real()}};
}

namespace {

struct Stepper {
    const InternalField& field;
    double d;
    double dt;

    Vec3 step(const Vec3& p, double t) const {
        const Vec3 v1 = field.at(t);
        const Vec3 v2 = field.at(t + 0.5 * dt);
        const Vec3 v3 = field.at(t + dt);
        const double scale = std::max({v1.norm(), v2.norm(), v3.norm(), d});
        if (dt * scale > 0.1 + 1e-12)
            throw StepSizeError("evolve: dt*max(|V|, D) = " + std::to_string(dt * scale) +
                                " exceeds 0.1");
        const Vec3 k1 = deriv(p, v1, d);
        const Vec3 k2 = deriv(p + 0.5 * dt * k1, v2, d);
        const Vec3 k3 = deriv(p + 0.5 * dt * k2, v2, d);
        const Vec3 k4 = deriv(p + dt * k3, v3, d);
        return p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
};

}  // namespace

void evolve_observe(const BlochState& p0, const InternalField& v, DecoherenceRate d, double t_end,
                    double dt,
                    const std::function<void(std::size_t, double, const Vec3&)>& observe) {
    if (!(dt > 0.0)) throw StepSizeError("evolve: dt must be > 0");
    if (!(t_end >= 0.0)) throw std::invalid_argument("evolve: t_end must be >= 0");
    // The dynamics is defined for any finite polarization; the unit-ball
    // invariant is enforced by the density-matrix conversions.
    if (!p0.p.finite()) throw UnphysicalStateError("evolve: non-finite state");
    Vec3 p = p0.p;
    const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
    const Stepper stepper{v, d.d, dt};
    observe(0, 0.0, p);
    for (std::size_t k = 0; k < n_steps; ++k) {
        p = stepper.step(p, static_cast<double>(k) * dt);
        observe(k + 1, static_cast<double>(k + 1) * dt, p);
    }
}

TimeSeries evolve(const BlochState& p0, const InternalField& v, DecoherenceRate d, double t_end,
                  double dt) {
    TimeSeries out(0.0, dt, {"px", "py", "pz"});
    evolve_observe(p0, v, d, t_end, dt,
                   [&out](std::size_t, double, const Vec3& p) { out.push_back({p.x, p.y, p.z}); });
    return out;
}

double purity(const BlochState& s) { return checked_polarization(s, "purity").norm(); }

double entropy(const BlochState& s) {
    const double p = checked_polarization(s, "entropy").norm();
    return std::log(2.0) - 0.5 * (xlnx(1.0 + p) + xlnx(1.0 - p));
}

double entropy_rate(const BlochState& s, DecoherenceRate d) {
    if (!s.p.finite()) throw UnphysicalStateError("entropy_rate: non-finite state");
    const double p = s.p.norm();
    if (p >= 1.0)
        throw UnphysicalStateError("entropy_rate: singular at |p| >= 1 (got " + std::to_string(p) +
                                   ")");
    const double pt2 = s.p.x * s.p.x + s.p.y * s.p.y;  // P.P_T = |P_T|^2
    return d.d * pt2 * atanh_over_p(p);
}

double stationarity_check(const DensityMatrix2& rho, const InternalField& h,
                          const DensityMatrix2& observable, std::span<const double> t_samples) {
    const BlochState p0 = from_density(rho);
    const Vec3 hv = h.at(0.0);
    const double hmag = hv.norm();

    // Tr[rho O] with rho = (I + p.sigma)/2:
    // (tr O)/2 + (p . o)/2 where o_i = Tr[O sigma_i].
    const Vec3 o{(observable.r12 + observable.r21).real(),
                 (kI * (observable.r12 - observable.r21)).real(),
                 (observable.r11 - observable.r22).real()};
    const double base = 0.5 * p0.p.dot(o);

    double max_dev = 0.0;
    for (double t : t_samples) {
        Vec3 p = p0.p;
        if (hmag > 0.0) {
            // Rodrigues rotation of p about hv by angle 2|h|t (the factor
            // 2 from the commutator with h.sigma).
            const Vec3 axis = hv / hmag;
            const double ang = 2.0 * hmag * t;
            const double c = std::cos(ang), s = std::sin(ang);
            p = c * p + s * axis.cross(p) + (1.0 - c) * axis.dot(p) * axis;
        }
        max_dev = std::max(max_dev, std::abs(0.5 * p.dot(o) - base));
    }
    return max_dev;
}

}  // namespace cohlab::bloch
