// Acceptance suite: one criterion per number, each printing its
// sub-checks and a single [PASS]/[FAIL] line. Run with no argument for
// all criteria or with 1..8 to select one. Exit code = number of failed
// criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cohlab/bloch.hpp"
#include "cohlab/gravity.hpp"
#include "cohlab/smatrix.hpp"
#include "cohlab/squid.hpp"
#include "cohlab/zeno.hpp"
#include "test_util.hpp"

using namespace cohlab;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    int failed = 0;

    void expect(bool ok, const std::string& what) {
        std::printf("    %s %s\n", ok ? "ok  " : "FAIL", what.c_str());
        if (!ok) ++failed;
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------- c1
bool criterion_1() {
    const auto t0 = Clock::now();
    Criterion c;
    const double v = 1.0;
    for (double d : {10.0, 30.0, 100.0}) {
        const double predicted = zeno::zeno_prediction(v, bloch::DecoherenceRate(d));
        const double exact = zeno::exact_slow_rate(v, d);
        const double dt = 0.1 / d;
        const auto series = bloch::evolve({{0, 0, 1}}, Vec3{v, 0, 0}, bloch::DecoherenceRate(d),
                                          8.0 / predicted, dt);
        const auto fit = zeno::fit_decay_rate(series, 10.0 / d);
        const double vs_exact = std::abs(fit.rate - exact) / exact;
        const double vs_pred = std::abs(fit.rate - predicted) / predicted;
        const double band = 2.0 * (v / d) * (v / d) + 0.005;
        c.expect(vs_exact <= 0.005,
                 fmt("D=%g: fitted %.6f vs exact %.6f (rel %.2e <= 5e-3)", d, fit.rate, exact,
                     vs_exact));
        c.expect(vs_pred <= band,
                 fmt("D=%g: fitted vs V^2/D=%.6f (rel %.2e <= %.2e)", d, predicted, vs_pred, band));
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 10.0, fmt("runtime %.2f s < 10 s", elapsed));
    return c.failed == 0;
}

// ---------------------------------------------------------------- c2
bool criterion_2() {
    const auto t0 = Clock::now();
    Criterion c;
    std::mt19937_64 rng(20240209);
    std::uniform_real_distribution<double> mag(0.5, 2.0), ball(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec3 dir = testutil::random_direction(rng);
        const bloch::BlochState p0{dir * std::cbrt(ball(rng))};
        const Vec3 v = testutil::random_direction(rng) * mag(rng);
        const double dt = 1e-3 / v.norm();
        const double n0 = p0.norm();
        double drift = 0.0;
        bloch::evolve_observe(p0, v, bloch::DecoherenceRate(0), 1e6 * dt, dt,
                              [&](std::size_t, double, const Vec3& p) {
                                  const double e = std::abs(p.norm() - n0);
                                  if (e > drift) drift = e;
                              });
        if (drift > worst) worst = drift;
    }
    c.expect(worst <= 1e-9, fmt("max | |p| drift | over 100 x 1e6 RK4 steps: %.3e <= 1e-9", worst));
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 60.0, fmt("runtime %.2f s < 60 s", elapsed));
    return c.failed == 0;
}

// ---------------------------------------------------------------- c3
bool criterion_3() {
    Criterion c;
    std::mt19937_64 rng(314159);
    std::uniform_real_distribution<double> du(0.2, 2.0), ball(0.05, 0.95);
    double worst_rel = 0.0, min_rate = 0.0;
    for (int k = 0; k < 20; ++k) {
        const bloch::BlochState p0{testutil::random_direction(rng) * ball(rng)};
        const Vec3 v = testutil::random_direction(rng) * du(rng);
        const double d = du(rng);
        const double dt = 1e-3 / std::max(v.norm(), d);
        const auto ts = bloch::evolve(p0, v, bloch::DecoherenceRate(d), 4000 * dt, dt);
        for (std::size_t i = 1; i + 1 < ts.size(); i += 67) {
            auto state = [&](std::size_t j) {
                const auto r = ts.row(j);
                return bloch::BlochState{{r[0], r[1], r[2]}};
            };
            const double rate = bloch::entropy_rate(state(i), bloch::DecoherenceRate(d));
            if (rate < min_rate) min_rate = rate;
            const double fd =
                (bloch::entropy(state(i + 1)) - bloch::entropy(state(i - 1))) / (2 * dt);
            if (rate > 1e-8)
                worst_rel = std::max(worst_rel, std::abs(fd - rate) / rate);
        }
    }
    c.expect(worst_rel <= 1e-4,
             fmt("entropy_rate vs centered difference: worst rel %.2e <= 1e-4", worst_rel));
    c.expect(min_rate >= -1e-14, fmt("entropy_rate >= 0 along trajectories (min %.2e)", min_rate));
    bool zero_ok = true;
    for (double pz : {0.0, 0.3, 0.7, 0.99}) {
        if (bloch::entropy_rate({{0, 0, pz}}, bloch::DecoherenceRate(1.7)) != 0.0) zero_ok = false;
    }
    c.expect(zero_ok, "entropy_rate = 0 whenever P_T = 0");
    return c.failed == 0;
}

// ---------------------------------------------------------------- c4
bool criterion_4() {
    const auto t0 = Clock::now();
    Criterion c;
    std::mt19937_64 rng(271828);
    double worst_dss = 0.0, worst_half = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const auto s = testutil::random_unitary(n, rng);
        const auto inc = testutil::random_state(n, rng);
        worst_dss = std::max(
            worst_dss, std::abs(smatrix::decoherence_rate(smatrix::ScatteringPair(s, s, inc, 1.0))));
        const auto s2 = testutil::random_unitary(n, rng);
        worst_half = std::max(worst_half, smatrix::verify_half_rate_limit(s2, inc, 1.0).difference);
    }
    c.expect(worst_dss <= 1e-12, fmt("D(S,S) = 0: worst |D| %.2e <= 1e-12", worst_dss));
    c.expect(worst_half <= 1e-12, fmt("half-rate identity: worst diff %.2e <= 1e-12", worst_half));
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 5.0, fmt("runtime %.2f s < 5 s", elapsed));
    return c.failed == 0;
}

// ---------------------------------------------------------------- c5
bool criterion_5() {
    Criterion c;
    const gravity::ImpactGeometry geom{1.0, 0.0, 1025};
    for (double da : {1e-4, 5e-4}) {
        const double r = gravity::impact_rate(1.0, 0.0, 2 * da, geom) /
                         gravity::impact_rate(1.0, 0.0, da, geom);
        c.expect(std::abs(r - 4.0) <= 0.02,
                 fmt("doubling dalpha=%g multiplies D by %.4f (4.000 +- 0.5%%)", da, r));
    }
    c.expect(gravity::impact_rate(1.0, 0.37, 0.37, geom) == 0.0,
             "alpha1 == alpha2 gives identically zero rate");
    bool cubic = true;
    for (double t : {1e-3, 1e-2, 1e-1}) {
        const double r = gravity::thermal_rate(10 * t, 0.4) / gravity::thermal_rate(t, 0.4);
        if (std::abs(r - 1000.0) > 1e-9) cubic = false;
    }
    c.expect(cubic, "thermal rate reproduces the T^3 exponent over three decades");
    return c.failed == 0;
}

// ------------------------------------------------------------- c6/c7
struct CurvePoint {
    double t_sweep = 0;
    double p = 0;
    double err = 0;
};

struct SquidScenario {
    squid::NoiseModel noise;
    std::vector<CurvePoint> curve;
    double slow_p = 0, sudden_p = 0;
};

const SquidScenario& squid_scenario(int n_levels) {
    static std::map<int, SquidScenario> cache;
    auto it = cache.find(n_levels);
    if (it != cache.end()) return it->second;

    squid::SquidParams params;
    params.n_levels = n_levels;
    const double inverse_d = 5000.0;
    const double tilt = 8.0;
    const int n_traj = 200;

    SquidScenario sc;
    std::fflush(stdout);
    sc.noise = squid::calibrate_noise(params, inverse_d, 7);
    std::printf("    (n_levels=%d: calibrated noise amplitude %.6e for 1/D=%g)\n", n_levels,
                sc.noise.amplitude, inverse_d);

    const squid::NoiseModel quiet{0.0, 0};
    sc.slow_p = squid::adiabatic_sweep(params, squid::inversion_protocol(params, 20000.0, tilt),
                                       quiet, 1, 1)
                    .inversion_probability;
    sc.sudden_p = squid::adiabatic_sweep(params, squid::inversion_protocol(params, 1.0, tilt),
                                         quiet, 1, 1)
                      .inversion_probability;

    for (double mult : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        const auto protocol = squid::inversion_protocol(params, mult * inverse_d, tilt);
        const auto r = squid::adiabatic_sweep(params, protocol, sc.noise, n_traj, 2718);
        std::printf("    (n_levels=%d: t_sweep=%7.0f -> inversion %.4f +- %.4f%s)\n", n_levels,
                    protocol.t_sweep, r.inversion_probability, r.uncertainty,
                    r.truncation_warning ? ", truncation warning" : "");
        std::fflush(stdout);
        sc.curve.push_back({protocol.t_sweep, r.inversion_probability, r.uncertainty});
    }
    return cache.emplace(n_levels, std::move(sc)).first->second;
}

bool criterion_6() {
    const auto t0 = Clock::now();
    Criterion c;
    squid::SquidParams params;
    const double g = params.quantumness();
    c.expect(std::abs(g - 1.556e-3) / 1.556e-3 <= 1e-3,
             fmt("g = %.6e within 0.1%% of 1.556e-3", g));

    const SquidScenario& sc = squid_scenario(8);
    c.expect(sc.slow_p >= 0.99, fmt("noiseless slow sweep inversion %.4f >= 0.99", sc.slow_p));
    c.expect(sc.sudden_p <= 0.05, fmt("sudden sweep inversion %.4f <= 0.05", sc.sudden_p));

    bool monotone = true;
    for (std::size_t i = 1; i < sc.curve.size(); ++i) {
        const double allowance =
            2.0 * std::sqrt(sc.curve[i].err * sc.curve[i].err +
                            sc.curve[i - 1].err * sc.curve[i - 1].err);
        if (sc.curve[i].p > sc.curve[i - 1].p + allowance) monotone = false;
    }
    c.expect(monotone, "inversion probability non-increasing in sweep time (2 sigma allowance)");
    c.expect(sc.curve.front().p >= 0.9,
             fmt("inversion %.4f >= 0.9 at t_sweep = 0.1/D", sc.curve.front().p));
    c.expect(sc.curve.back().p <= sc.curve.front().p - 0.2,
             fmt("inversion at 5/D (%.4f) at least 0.2 below 0.1/D (%.4f)", sc.curve.back().p,
                 sc.curve.front().p));
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 600.0, fmt("runtime %.1f s < 600 s", elapsed));
    return c.failed == 0;
}

bool criterion_7() {
    Criterion c;
    const SquidScenario& base = squid_scenario(8);
    const SquidScenario& deep = squid_scenario(12);
    double worst = 0.0;
    for (std::size_t i = 0; i < base.curve.size(); ++i)
        worst = std::max(worst, std::abs(base.curve[i].p - deep.curve[i].p));
    worst = std::max(worst, std::abs(base.slow_p - deep.slow_p));
    worst = std::max(worst, std::abs(base.sudden_p - deep.sudden_p));
    c.expect(worst < 0.02,
             fmt("inversion probabilities shift by %.4f < 0.02 for n_levels 8 -> 12", worst));
    return c.failed == 0;
}

// ---------------------------------------------------------------- c8
bool criterion_8() {
    Criterion c;
    const double d = squid::estimate_d_from_temperature(50e-3, 5e6);
    const double inv_us = 1e6 / d;
    c.expect(inv_us >= 0.15 && inv_us <= 0.30,
             fmt("1/D = %.4f us within [0.15, 0.30] for T=50 mK, R=5 MOhm", inv_us));
    return c.failed == 0;
}

}  // namespace

int main(int argc, char** argv) {
    const int which = argc > 1 ? std::atoi(argv[1]) : 0;
    struct Entry {
        int id;
        const char* title;
        bool (*run)();
    };
    const Entry entries[] = {
        {1, "watched-pot decay law matches the exact slow eigenvalue", criterion_1},
        {2, "undamped precession conserves |p| over 1e6 steps", criterion_2},
        {3, "entropy production law along damped trajectories", criterion_3},
        {4, "unitarity-deficit limits for random S-matrices", criterion_4},
        {5, "gravitational rate scaling in coupling and temperature", criterion_5},
        {6, "rf-SQUID adiabatic inversion, desk scale", criterion_6},
        {7, "truncation robustness of the inversion curve", criterion_7},
        {8, "thermal decoherence-rate arithmetic", criterion_8},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (which != 0 && which != e.id) continue;
        std::printf("criterion %d: %s\n", e.id, e.title);
        std::fflush(stdout);
        bool ok = false;
        try {
            ok = e.run();
        } catch (const std::exception& ex) {
            std::printf("    FAIL exception: %s\n", ex.what());
        }
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", e.id, e.title);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
