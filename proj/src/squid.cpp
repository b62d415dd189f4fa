#include "cohlab/squid.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace cohlab::squid {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

constexpr double kPi = std::numbers::pi;

uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t k) {
    return splitmix64(master + k);
}

double SquidParams::quantumness() const {
    return constants::hbar / (constants::flux_quantum * constants::flux_quantum) *
           std::sqrt(inductance / capacitance);
}

double SquidParams::time_unit() const { return std::sqrt(inductance * capacitance); }

void SquidParams::basic_validate() const {
    if (!(inductance > 0.0) || !(capacitance > 0.0))
        throw std::invalid_argument("SquidParams: L and C must be > 0");
    if (n_levels < 2) throw std::invalid_argument("SquidParams: n_levels must be >= 2");
    if (!(quantumness() > 0.0)) throw std::invalid_argument("SquidParams: g must be > 0");
    if (!(beta >= 0.0)) throw std::invalid_argument("SquidParams: beta must be >= 0");
}

void SquidParams::validate() const {
    basic_validate();
    if (!(beta > 1.0))
        throw std::invalid_argument("SquidParams: beta must exceed 1 (double-well regime)");
}

void SweepProtocol::validate() const {
    if (!(t_sweep > 0.0)) throw std::invalid_argument("SweepProtocol: t_sweep must be > 0");
    if (!std::isfinite(x_start) || !std::isfinite(x_end))
        throw std::invalid_argument("SweepProtocol: non-finite endpoints");
}

void NoiseModel::validate() const {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("NoiseModel: amplitude must be >= 0");
}

double potential(double x, double x_e, const SquidParams& params) {
    const double g = params.quantumness();
    const double d = x - x_e;
    return d * d / (2.0 * g) - params.beta / (4.0 * kPi * kPi * g) * std::cos(2.0 * kPi * x);
}

WellGeometry find_wells(double x_e, const SquidParams& params) {
    // u'(x) = 0 with the 1/g factor dropped:
    auto f = [&](double x) { return (x - x_e) + params.beta / (2.0 * kPi) * std::sin(2.0 * kPi * x); };
    auto bisect = [&](double a, double b) {
        double fa = f(a);
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            const double fm = f(m);
            if ((fa < 0) == (fm < 0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    };

    WellGeometry geo;
    const double lo = x_e - 0.75, hi = x_e + 0.75;
    const int n = 3001;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> roots;
    double xp = lo, fp = f(lo);
    for (int i = 1; i < n; ++i) {
        const double x = lo + i * h;
        const double fx = f(x);
        if ((fp < 0) != (fx < 0)) roots.push_back(bisect(xp, x));
        xp = x;
        fp = fx;
    }
    // Keep the stationary triple around the deepest pair of minima.
    std::vector<double> minima, maxima;
    for (double r : roots) {
        const double curv = 1.0 + params.beta * std::cos(2.0 * kPi * r);
        (curv > 0 ? minima : maxima).push_back(r);
    }
    if (minima.size() >= 2) {
        // adjacent minima bracketing a maximum, closest to x_e
        double best = 1e300;
        for (std::size_t i = 0; i + 1 < minima.size(); ++i) {
            for (double m : maxima) {
                if (m > minima[i] && m < minima[i + 1]) {
                    const double d = std::abs(0.5 * (minima[i] + minima[i + 1]) - x_e);
                    if (d < best) {
                        best = d;
                        geo.double_well = true;
                        geo.x_left = minima[i];
                        geo.x_barrier = m;
                        geo.x_right = minima[i + 1];
                    }
                }
            }
        }
    }
    if (!geo.double_well && !minima.empty()) {
        double best = 1e300;
        for (double m : minima) {
            if (std::abs(m - x_e) < best) {
                best = std::abs(m - x_e);
                geo.x_left = geo.x_right = geo.x_barrier = m;
            }
        }
    }
    return geo;
}

namespace {

// Lowest n_levels eigenpairs of the finite-difference Hamiltonian on the
// given grid. Wavefunctions (if requested) are orthonormal with weight dx.
struct RawSolution {
    VectorXd energies;
    MatrixXd psi;  // empty when vectors == false
};

RawSolution solve_levels(double x_e, const SquidParams& params, const SpatialGrid& grid,
                         bool vectors) {
    const int n = grid.n;
    const int m = params.n_levels;
    const double g = params.quantumness();
    const double h = grid.dx();
    std::vector<double> diag(n), off(n - 1, -g / (2.0 * h * h));
    for (int i = 0; i < n; ++i) diag[i] = g / (h * h) + potential(grid.x(i), x_e, params);

    RawSolution out;
    out.energies.resize(m);
    std::vector<lapack_int> isuppz(2 * m);
    lapack_int found = 0;
    lapack_int info;
    if (vectors) {
        out.psi.resize(n, m);
        info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, diag.data(), off.data(), 0.0, 0.0, 1,
                              m, 0.0, &found, out.energies.data(), out.psi.data(), n,
                              isuppz.data());
        if (info == 0) out.psi *= 1.0 / std::sqrt(h);
    } else {
        info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'N', 'I', n, diag.data(), off.data(), 0.0, 0.0, 1,
                              m, 0.0, &found, out.energies.data(), nullptr, n, isuppz.data());
    }
    if (info != 0 || found != m)
        throw ResolutionError("eigensystem: LAPACK dstevr failed (info = " + std::to_string(info) +
                              ")");
    return out;
}

}  // namespace

SpectrumSnapshot eigensystem(double x_e, const SquidParams& params, const SpatialGrid& grid) {
    params.basic_validate();
    if (grid.n < 512) throw std::invalid_argument("eigensystem: grid needs >= 512 points");
    if (!(grid.x_lo <= x_e - 0.25 && grid.x_hi >= x_e + 0.25))
        throw std::invalid_argument("eigensystem: grid does not cover both wells");

    RawSolution fine = solve_levels(x_e, params, grid, true);
    SpatialGrid coarse_grid{grid.x_lo, grid.x_hi, (grid.n + 1) / 2};
    RawSolution coarse = solve_levels(x_e, params, coarse_grid, false);

    SpectrumSnapshot snap;
    snap.x_external = x_e;
    snap.grid = grid;
    snap.energies.resize(params.n_levels);
    const double r = coarse_grid.dx() / grid.dx();
    const double r2 = r * r;
    for (int j = 0; j < params.n_levels; ++j) {
        const double ef = fine.energies[j], ec = coarse.energies[j];
        if (std::abs(ef - ec) > 1e-3 * std::max(1.0, std::abs(ef)))
            throw ResolutionError("eigensystem: level " + std::to_string(j) +
                                  " not converged on this grid");
        snap.energies[j] = (r2 * ef - ec) / (r2 - 1.0);
    }
    snap.wavefunctions = std::move(fine.psi);
    return snap;
}

double doublet_splitting(const SquidParams& params, const SpatialGrid& grid) {
    const SpectrumSnapshot s = eigensystem(0.5, params, grid);
    return s.energies[1] - s.energies[0];
}

SweepProtocol inversion_protocol(const SquidParams& params, double t_sweep,
                                 double tilt_over_splitting) {
    params.validate();
    if (!(tilt_over_splitting > 0.0))
        throw std::invalid_argument("inversion_protocol: tilt factor must be > 0");
    const double split = doublet_splitting(params);
    const WellGeometry wells = find_wells(0.5, params);
    if (!wells.double_well)
        throw std::invalid_argument("inversion_protocol: no double well at x_e = 1/2");
    const double slope = (wells.x_right - wells.x_left) / params.quantumness();
    const double half_range = tilt_over_splitting * split / slope;
    return SweepProtocol{0.5 - half_range, 0.5 + half_range, t_sweep};
}

// ---------------------------------------------------------------------------
// instantaneous-basis propagation machinery

namespace {

// exp(-i H dt) applied to the state, for Hermitian H, by diagonal Pade
// with scaling/squaring; exactly unitary up to round-off. Fixed-size
// instantiations keep the hot loop free of dynamic dispatch.
template <int N>
class UnitaryExp {
public:
    using Mat = Eigen::Matrix<complex<double>, N, N>;
    using Vec = Eigen::Matrix<complex<double>, N, 1>;

    explicit UnitaryExp(int n) {
        if constexpr (N == Eigen::Dynamic) {
            h.resize(n, n);
            a_.resize(n, n);
            a2_.resize(n, n);
            a4_.resize(n, n);
            even_.resize(n, n);
            odd_.resize(n, n);
            numer_.resize(n, n);
            denom_.resize(n, n);
            u_.resize(n, n);
            c.resize(n);
            tmp_.resize(n);
        }
    }

    Mat h;
    Vec c;

    // c <- exp(-i h dt) c
    void apply(double dt) {
        a_ = complex<double>(0.0, -dt) * h;
        const double scale = std::sqrt(a_.squaredNorm());  // Frobenius bounds the 2-norm
        int squarings = 0;
        if (scale > 0.5) {
            squarings = static_cast<int>(std::ceil(std::log2(scale / 0.5)));
            a_ *= std::ldexp(1.0, -squarings);
        }
        // [4/4] diagonal Pade; with the scaled norm <= 0.5 the
        // approximation error sits below 1e-12
        static constexpr double c0 = 1.0, c1 = 0.5, c2 = 3.0 / 28.0, c3 = 1.0 / 84.0,
                                c4 = 1.0 / 1680.0;
        a2_.noalias() = a_.lazyProduct(a_);
        a4_.noalias() = a2_.lazyProduct(a2_);
        even_ = c2 * a2_ + c4 * a4_;
        even_.diagonal().array() += c0;
        odd_ = c3 * a2_;
        odd_.diagonal().array() += c1;
        numer_.noalias() = a_.lazyProduct(odd_);  // odd part of the Pade numerator
        denom_ = even_ - numer_;
        numer_ += even_;
        lu_.compute(denom_);
        u_ = lu_.solve(numer_);
        for (int s = 0; s < squarings; ++s) {
            a2_.noalias() = u_.lazyProduct(u_);
            u_.swap(a2_);
        }
        tmp_.noalias() = u_.lazyProduct(c);
        c = tmp_;
    }

private:
    Mat a_, a2_, a4_, even_, odd_, numer_, denom_, u_;
    Vec tmp_;
    Eigen::PartialPivLU<Mat> lu_;
};

// Piecewise-linear tables of the instantaneous spectrum and position
// matrix over the swept external-flux range, gauge-aligned node to node.
struct SweepTables {
    std::vector<double> nodes;
    int nlev = 0;
    double g = 0.0;
    std::vector<double> energies;  // node-major [node][level]
    std::vector<double> xmat;      // node-major [node][m*nlev + k]
    MatrixXd psi_lo, psi_hi;       // eigenvectors at the extreme nodes (chain gauge)
    SpatialGrid grid;

    void eval(double xe, double* e_out, double* x_out) const {
        const std::size_t nn = nodes.size();
        if (nn == 1) {
            std::copy_n(energies.data(), nlev, e_out);
            std::copy_n(xmat.data(), nlev * nlev, x_out);
            return;
        }
        auto it = std::upper_bound(nodes.begin(), nodes.end(), xe);
        std::size_t i1 = std::clamp<std::size_t>(static_cast<std::size_t>(it - nodes.begin()), 1,
                                                 nn - 1);
        const std::size_t i0 = i1 - 1;
        double w = (xe - nodes[i0]) / (nodes[i1] - nodes[i0]);
        w = std::clamp(w, 0.0, 1.0);
        const double* e0 = energies.data() + i0 * nlev;
        const double* e1 = energies.data() + i1 * nlev;
        for (int j = 0; j < nlev; ++j) e_out[j] = e0[j] + w * (e1[j] - e0[j]);
        const double* x0 = xmat.data() + i0 * nlev * nlev;
        const double* x1 = xmat.data() + i1 * nlev * nlev;
        for (int j = 0; j < nlev * nlev; ++j) x_out[j] = x0[j] + w * (x1[j] - x0[j]);
    }
};

MatrixXd position_matrix(const MatrixXd& psi, const SpatialGrid& grid) {
    VectorXd x(grid.n);
    for (int i = 0; i < grid.n; ++i) x(i) = grid.x(i);
    return psi.transpose() * x.asDiagonal() * psi * grid.dx();
}

// Node placement by recursive eigenvalue-interpolation refinement: the
// avoided crossing is the only sharp feature in x_e and shows up directly
// in the level curves.
std::vector<double> refine_nodes(double lo, double hi, const SquidParams& params,
                                 const SpatialGrid& grid) {
    std::map<double, VectorXd> evals;
    auto energies_at = [&](double xe) -> const VectorXd& {
        auto it = evals.find(xe);
        if (it == evals.end())
            it = evals.emplace(xe, solve_levels(xe, params, grid, false).energies).first;
        return it->second;
    };

    constexpr double kTolE = 1e-5;
    constexpr double kMinSpacing = 1e-8;
    constexpr std::size_t kMaxNodes = 4096;

    std::function<void(double, double)> descend = [&](double a, double b) {
        if (evals.size() > kMaxNodes)
            throw ResolutionError("adiabatic_sweep: spectral table exceeded node budget");
        const double m = 0.5 * (a + b);
        if (b - a < kMinSpacing || m <= a || m >= b) return;
        const VectorXd& ea = energies_at(a);
        const VectorXd& eb = energies_at(b);
        const VectorXd& em = energies_at(m);
        const double err = (em - 0.5 * (ea + eb)).cwiseAbs().maxCoeff();
        if (err <= kTolE) return;
        descend(a, m);
        descend(m, b);
    };
    energies_at(lo);
    energies_at(hi);
    if (hi > lo) descend(lo, hi);

    std::vector<double> nodes;
    nodes.reserve(evals.size());
    for (const auto& [x, e] : evals) nodes.push_back(x);
    return nodes;
}

SweepTables build_sweep_tables(double x_a, double x_b, const SquidParams& params,
                               const SpatialGrid& grid) {
    const double lo = std::min(x_a, x_b), hi = std::max(x_a, x_b);
    if (!(grid.x_lo <= lo - 0.25 && grid.x_hi >= hi + 0.25))
        throw std::invalid_argument(
            "adiabatic_sweep: spatial grid does not cover the swept wells");
    SweepTables tab;
    tab.nlev = params.n_levels;
    tab.g = params.quantumness();
    tab.grid = grid;
    tab.nodes = refine_nodes(lo, hi, params, grid);

    const int m = tab.nlev;
    tab.energies.resize(tab.nodes.size() * m);
    tab.xmat.resize(tab.nodes.size() * m * m);
    MatrixXd prev;
    for (std::size_t k = 0; k < tab.nodes.size(); ++k) {
        RawSolution sol = solve_levels(tab.nodes[k], params, grid, true);
        if (k > 0) {
            for (int j = 0; j < m; ++j)
                if (prev.col(j).dot(sol.psi.col(j)) < 0.0) sol.psi.col(j) *= -1.0;
        }
        std::copy_n(sol.energies.data(), m, tab.energies.data() + k * m);
        const MatrixXd x = position_matrix(sol.psi, grid);
        std::copy_n(x.data(), m * m, tab.xmat.data() + k * m * m);
        if (k == 0) tab.psi_lo = sol.psi;
        if (k + 1 == tab.nodes.size()) tab.psi_hi = sol.psi;
        prev = std::move(sol.psi);
    }
    return tab;
}

// Probability-mass projector for grid points strictly beyond x_b.
MatrixXd side_projector(const MatrixXd& psi, const SpatialGrid& grid, double x_b, bool right) {
    VectorXd w(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const bool beyond = right ? grid.x(i) > x_b : grid.x(i) < x_b;
        w(i) = beyond ? 1.0 : 0.0;
    }
    return psi.transpose() * w.asDiagonal() * psi * grid.dx();
}

struct TrajectoryOutcome {
    double max_top_pop = 0.0;
    double norm_drift = 0.0;
};

using RecordFn = std::function<void(int, const VectorXcd&)>;

// One noisy trajectory in the instantaneous basis of the ramp. The noise
// enters through the exact flux-jitter potential -(xi/g)(x - x_e) whose
// matrix elements come from the tabulated position operator; derivative
// couplings come from the same table via the off-diagonal
// A_mk = -X_mk / (g (E_k - E_m)).
template <int N>
TrajectoryOutcome trajectory_loop(const SweepTables& tab, const SweepProtocol& protocol,
                                  double noise_amp, std::uint64_t seed, const SweepOptions& opts,
                                  const VectorXcd& c0, VectorXcd& c_final, int record_stride,
                                  const RecordFn& record) {
    const int n = tab.nlev;
    const long nst = std::max<long>(opts.min_steps,
                                    static_cast<long>(std::ceil(protocol.t_sweep / opts.dt_max)));
    const double dt = protocol.t_sweep / static_cast<double>(nst);
    const double v = protocol.ramp_rate();
    const double sigma = noise_amp > 0.0 ? noise_amp / std::sqrt(dt) : 0.0;
    const double inv_g = 1.0 / tab.g;

    UnitaryExp<N> ker(n);
    ker.c = c0;
    std::vector<double> evals(n), xm(n * n);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;

    TrajectoryOutcome out;
    if (record) record(0, ker.c);
    for (long s = 0; s < nst; ++s) {
        const double tm = (static_cast<double>(s) + 0.5) * dt;
        const double xe = protocol.x_at(tm);
        tab.eval(xe, evals.data(), xm.data());
        const double xi_g = sigma > 0.0 ? sigma * normal(rng) * inv_g : 0.0;

        double ebar = 0.0;
        for (int j = 0; j < n; ++j) ebar += evals[j];
        ebar /= n;
        for (int col = 0; col < n; ++col) {
            ker.h(col, col) = evals[col] - ebar - xi_g * (xm[col * n + col] - xe);
            for (int row = 0; row < col; ++row) {
                const double x_rc = xm[col * n + row];
                const double de = evals[col] - evals[row];
                const double a = std::abs(de) > 1e-14 ? -x_rc * inv_g / de : 0.0;
                const complex<double> val(-xi_g * x_rc, -v * a);
                ker.h(row, col) = val;
                ker.h(col, row) = std::conj(val);
            }
        }
        ker.apply(dt);

        const double top = std::norm(ker.c(n - 1));
        if (top > out.max_top_pop) out.max_top_pop = top;
        if (record && record_stride > 0 && (s + 1) % record_stride == 0)
            record(static_cast<int>((s + 1) / record_stride), ker.c);
    }
    out.norm_drift = std::abs(ker.c.norm() - 1.0);
    c_final = ker.c;
    return out;
}

TrajectoryOutcome run_trajectory(const SweepTables& tab, const SweepProtocol& protocol,
                                 double noise_amp, std::uint64_t seed, const SweepOptions& opts,
                                 const VectorXcd& c0, VectorXcd& c_final, int record_stride = 0,
                                 const RecordFn& record = {}) {
    switch (tab.nlev) {
        case 8:
            return trajectory_loop<8>(tab, protocol, noise_amp, seed, opts, c0, c_final,
                                      record_stride, record);
        case 12:
            return trajectory_loop<12>(tab, protocol, noise_amp, seed, opts, c0, c_final,
                                       record_stride, record);
        default:
            return trajectory_loop<Eigen::Dynamic>(tab, protocol, noise_amp, seed, opts, c0,
                                                   c_final, record_stride, record);
    }
}

// Deterministic parallel map over trajectory indices.
void parallel_trajectories(int n_traj, const std::function<void(int)>& body) {
    unsigned hw = std::thread::hardware_concurrency();
    int n_threads = std::clamp<int>(static_cast<int>(hw), 1, std::min(n_traj, 32));
    if (n_threads <= 1) {
        for (int k = 0; k < n_traj; ++k) body(k);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int k = next.fetch_add(1);
                if (k >= n_traj) return;
                try {
                    body(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

SweepResult adiabatic_sweep(const SquidParams& params, const SweepProtocol& protocol,
                            const NoiseModel& noise, int n_trajectories, std::uint64_t seed,
                            const SweepOptions& opts, std::vector<double>* per_trajectory) {
    params.validate();
    protocol.validate();
    noise.validate();
    if (n_trajectories < 1) throw std::invalid_argument("adiabatic_sweep: need >= 1 trajectory");

    const SpatialGrid grid;
    const SweepTables tab = build_sweep_tables(protocol.x_start, protocol.x_end, params, grid);
    const int n = params.n_levels;

    // start/end eigenbases in the chain gauge
    const bool upward = protocol.x_end >= protocol.x_start;
    const MatrixXd& psi_start = upward ? tab.psi_lo : tab.psi_hi;
    const MatrixXd& psi_end = upward ? tab.psi_hi : tab.psi_lo;

    const WellGeometry wells_start = find_wells(protocol.x_start, params);
    const double xb_start = wells_start.double_well ? wells_start.x_barrier : 0.5;
    VectorXd g0 = psi_start.col(0);
    double mass_right = 0.0;
    for (int i = 0; i < grid.n; ++i)
        if (grid.x(i) > xb_start) mass_right += g0(i) * g0(i);
    mass_right *= grid.dx();
    const bool start_left = mass_right < 0.5;

    const WellGeometry wells_end = find_wells(protocol.x_end, params);
    const double xb_end = wells_end.double_well ? wells_end.x_barrier : 0.5;
    // reversed flux = the side opposite the initial localization
    const MatrixXd theta = side_projector(psi_end, grid, xb_end, start_left);

    std::vector<double> probs(n_trajectories);
    std::vector<double> top_pops(n_trajectories);
    std::vector<double> drifts(n_trajectories);
    const std::uint64_t master = noise.seed ^ seed;

    VectorXcd ground = VectorXcd::Zero(n);
    ground(0) = 1.0;
    parallel_trajectories(n_trajectories, [&](int k) {
        VectorXcd c_final(n);
        const TrajectoryOutcome oc = run_trajectory(
            tab, protocol, noise.amplitude, trajectory_seed(master, static_cast<std::uint64_t>(k)),
            opts, ground, c_final);
        const VectorXd re = c_final.real(), im = c_final.imag();
        probs[k] = re.dot(theta * re) + im.dot(theta * im);
        top_pops[k] = oc.max_top_pop;
        drifts[k] = oc.norm_drift;
    });

    SweepResult res;
    res.n_trajectories = n_trajectories;
    double sum = 0.0;
    for (double p : probs) sum += p;
    res.inversion_probability = sum / n_trajectories;
    double ss = 0.0;
    for (double p : probs) ss += (p - res.inversion_probability) * (p - res.inversion_probability);
    res.uncertainty = n_trajectories > 1
                          ? std::sqrt(ss / (n_trajectories - 1.0) / n_trajectories)
                          : 0.0;
    res.max_top_level_population = *std::max_element(top_pops.begin(), top_pops.end());
    res.truncation_warning = res.max_top_level_population > 0.01;
    res.max_norm_drift = *std::max_element(drifts.begin(), drifts.end());
    if (per_trajectory) *per_trajectory = probs;
    return res;
}

double measure_dephasing_rate(const SquidParams& params, double amplitude, double t_window,
                              int n_trajectories, std::uint64_t seed, double dt) {
    params.validate();
    if (!(amplitude >= 0.0)) throw std::invalid_argument("measure_dephasing_rate: amplitude < 0");
    if (!(t_window > 0.0)) throw std::invalid_argument("measure_dephasing_rate: t_window <= 0");
    if (n_trajectories < 1) throw std::invalid_argument("measure_dephasing_rate: need trajectories");

    const SpatialGrid grid;
    // held at the symmetric point: a single-node table
    SweepTables tab;
    tab.nlev = params.n_levels;
    tab.g = params.quantumness();
    tab.grid = grid;
    tab.nodes = {0.5};
    RawSolution sol = solve_levels(0.5, params, grid, true);
    tab.energies.assign(sol.energies.data(), sol.energies.data() + params.n_levels);
    const MatrixXd x = position_matrix(sol.psi, grid);
    tab.xmat.assign(x.data(), x.data() + params.n_levels * params.n_levels);

    SweepProtocol hold{0.5, 0.5, t_window};
    SweepOptions opts;
    opts.dt_max = dt;
    opts.min_steps = 64;

    const long nst = std::max<long>(opts.min_steps, static_cast<long>(std::ceil(t_window / dt)));
    const int n_rec = 64;
    const int stride = static_cast<int>(std::max<long>(1, nst / n_rec));
    const int n_points = static_cast<int>(nst / stride) + 1;

    // per-trajectory records, reduced in trajectory order afterwards so
    // threaded and serial runs sum identically
    std::vector<std::complex<double>> records(
        static_cast<std::size_t>(n_trajectories) * n_points, 0.0);

    VectorXcd doublet = VectorXcd::Zero(params.n_levels);
    doublet(0) = doublet(1) = 1.0 / std::sqrt(2.0);
    parallel_trajectories(n_trajectories, [&](int k) {
        std::complex<double>* rec = records.data() + static_cast<std::size_t>(k) * n_points;
        VectorXcd c_final(params.n_levels);
        run_trajectory(tab, hold, amplitude, trajectory_seed(seed, static_cast<std::uint64_t>(k)),
                       opts, doublet, c_final, stride, [&](int j, const VectorXcd& c) {
                           if (j < n_points) rec[j] = c(0) * std::conj(c(1));
                       });
    });
    std::vector<std::complex<double>> acc(n_points, 0.0);
    for (int k = 0; k < n_trajectories; ++k)
        for (int j = 0; j < n_points; ++j)
            acc[j] += records[static_cast<std::size_t>(k) * n_points + j];

    const double m0 = std::abs(acc[0]) / n_trajectories;
    // origin-forced least squares of -ln(|mean|/m0) against t, on points
    // above the statistical floor
    const double floor = std::max(0.2 * m0, 2.0 / std::sqrt(static_cast<double>(n_trajectories)) *
                                                0.5);
    double sty = 0.0, stt = 0.0;
    int used = 0;
    for (int j = 1; j < n_points; ++j) {
        const double mj = std::abs(acc[j]) / n_trajectories;
        if (mj < floor && used >= 2) break;
        if (!(mj > 0.0)) break;
        const double t = static_cast<double>(j) * stride * (t_window / nst);
        const double y = -std::log(mj / m0);
        sty += t * y;
        stt += t * t;
        ++used;
    }
    if (used < 1) throw CalibrationError("measure_dephasing_rate: coherence lost faster than dt");
    return sty / stt;
}

NoiseModel calibrate_noise(const SquidParams& params, double target_inverse_d,
                           std::uint64_t seed) {
    params.validate();
    if (!(target_inverse_d > 0.0))
        throw std::invalid_argument("calibrate_noise: target 1/D must be > 0");
    const double target = 1.0 / target_inverse_d;
    const double t_window = 1.25 * target_inverse_d;
    const int n_traj = 128;

    auto response = [&](double amp) {
        return measure_dephasing_rate(params, amp, t_window, n_traj, seed);
    };
    auto accept = [&](double rate) { return std::abs(rate - target) <= 0.05 * target; };

    // quadratic-law first guess from the well-separation slope
    const WellGeometry wells = find_wells(0.5, params);
    const double slope = (wells.x_right - wells.x_left) / params.quantumness();
    double amp = std::sqrt(2.0 * target) / slope;
    double rate = response(amp);
    for (int i = 0; i < 4 && !accept(rate); ++i) {
        if (!(rate > 0.0)) {
            amp *= 4.0;
        } else {
            amp *= std::clamp(std::sqrt(target / rate), 0.25, 4.0);
        }
        rate = response(amp);
    }
    if (accept(rate)) return NoiseModel{amp, seed};

    // bracket and bisect on the deterministic response
    double lo = amp, hi = amp, rate_lo = rate, rate_hi = rate;
    for (int i = 0; i < 12 && rate_lo >= target; ++i) {
        lo *= 0.5;
        rate_lo = response(lo);
    }
    for (int i = 0; i < 12 && rate_hi <= target; ++i) {
        hi *= 2.0;
        rate_hi = response(hi);
    }
    if (!(rate_lo < target && rate_hi > target))
        throw CalibrationError("calibrate_noise: could not bracket the target rate "
                               "(flat or non-monotone response)");
    for (int i = 0; i < 40; ++i) {
        const double mid = std::sqrt(lo * hi);
        const double rm = response(mid);
        if (accept(rm)) return NoiseModel{mid, seed};
        if (rm < target)
            lo = mid;
        else
            hi = mid;
        if (hi / lo < 1.0 + 1e-3) break;
    }
    throw CalibrationError("calibrate_noise: bisection failed to reach 5% of target");
}

double estimate_d_from_temperature(double temperature_k, double resistance_ohm) {
    if (!(temperature_k >= 0.0) || !(resistance_ohm > 0.0))
        throw std::invalid_argument("estimate_d_from_temperature: need T >= 0, R > 0");
    return constants::boltzmann * temperature_k /
           (constants::elementary_charge * constants::elementary_charge * resistance_ohm);
}

}  // namespace cohlab::squid
