#include "cohlab/zeno.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

using namespace cohlab;
using namespace cohlab::bloch;
using namespace cohlab::zeno;

namespace {

// Independent eigenvalue oracle: slowest decay rate of the 3x3 system
// dP/dt = [[-D,0,0],[0,-D,V],[0,-V,0]] P.
double slow_rate_oracle(double v, double d) {
    Eigen::Matrix3d m;
    m << -d, 0, 0, 0, -d, v, 0, -v, 0;
    const Eigen::EigenSolver<Eigen::Matrix3d> es(m);
    double slowest = 1e300;
    for (int i = 0; i < 3; ++i) {
        const double rate = -es.eigenvalues()(i).real();
        if (std::abs(es.eigenvalues()(i).imag()) < 1e-12 && rate < slowest) slowest = rate;
    }
    return slowest;
}

TimeSeries damped_pz_series(double v, double d, double t_end) {
    const double dt = 0.1 / std::max(v, d);
    return evolve({{0, 0, 1}}, Vec3{v, 0, 0}, DecoherenceRate(d), t_end, dt);
}

}  // namespace

TEST_CASE("zeno_prediction") {
    CHECK(zeno_prediction(1.0, DecoherenceRate(100.0)) == doctest::Approx(0.01));
    CHECK(zeno_prediction(0.0, DecoherenceRate(7.0)) == doctest::Approx(0.0));
    CHECK(zeno_prediction(2.0, DecoherenceRate(50.0)) == doctest::Approx(0.08));
    CHECK_THROWS_AS(zeno_prediction(1.0, DecoherenceRate(0.0)), std::domain_error);
}

TEST_CASE("exact_slow_rate against the eigenvalue oracle") {
    CHECK(exact_slow_rate(1.0, 50.0) == doctest::Approx(slow_rate_oracle(1.0, 50.0)).epsilon(1e-10));
    CHECK(exact_slow_rate(1.0, 50.0) == doctest::Approx(0.020008).epsilon(1e-4));
    CHECK(exact_slow_rate(1.0, 1000.0) == doctest::Approx(slow_rate_oracle(1.0, 1000.0)));
    CHECK(exact_slow_rate(1.0, 1000.0) == doctest::Approx(0.00100000).epsilon(5e-6));
    CHECK(exact_slow_rate(0.0, 5.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(exact_slow_rate(1.0, 1.5), BranchError);
}

TEST_CASE("fit_decay_rate on a synthetic exponential") {
    TimeSeries ts(0.0, 0.5, {"pz"});
    for (int i = 0; i <= 2000; ++i) ts.push_back({std::exp(-0.01 * 0.5 * i)});
    const DecayFit fit = fit_decay_rate(ts, 0.0);
    CHECK(fit.rate == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(fit.residual_rms < 1e-10);
}

TEST_CASE("fit_decay_rate on simulated overdamped dynamics") {
    const double exact = exact_slow_rate(1.0, 50.0);
    const auto ts = damped_pz_series(1.0, 50.0, 8.0 / exact);
    const DecayFit fit = fit_decay_rate(ts, 10.0 / 50.0);
    CHECK(std::abs(fit.rate - exact) / exact < 0.005);
}

TEST_CASE("fit_decay_rate flags oscillatory input by residual") {
    // undamped precession: p_z = cos t, no decay; fit over a window where
    // p_z stays positive and let the residual expose the bad model
    const auto ts = evolve({{0, 0, 1}}, Vec3{1, 0, 0}, DecoherenceRate(0), 1.5, 0.01);
    const DecayFit fit = fit_decay_rate(ts, 0.0);
    CHECK(fit.residual_rms > 0.05);

    // beyond the zero crossing the fit cannot proceed at all
    const auto ts2 = evolve({{0, 0, 1}}, Vec3{1, 0, 0}, DecoherenceRate(0), 3.0, 0.01);
    CHECK_THROWS_AS(fit_decay_rate(ts2, 0.0), std::domain_error);
}

TEST_CASE("tunneling_suppression") {
    CHECK(tunneling_suppression(1e-3, 1.0) == doctest::Approx(1e-6));
    CHECK(tunneling_suppression(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(tunneling_suppression(1e-3, 1e-3) == doctest::Approx(1.0));
    CHECK(tunneling_suppression(1e-3, 0.0) == doctest::Approx(1.0));
    CHECK(tunneling_suppression(2.0, -8.0) == doctest::Approx(0.0625));
}

TEST_CASE("asymptotic agreement with the watched-pot law and anti-intuitive relaxation") {
    const double v = 1.0;
    std::vector<double> fitted;
    for (double d : {10.0, 30.0, 100.0, 300.0}) {
        const double predicted = zeno_prediction(v, DecoherenceRate(d));
        const auto ts = damped_pz_series(v, d, 6.0 / predicted);
        const DecayFit fit = fit_decay_rate(ts, 10.0 / d);
        const double exact = exact_slow_rate(v, d);
        CHECK(std::abs(fit.rate - exact) / exact < 0.005);
        const double band = 2.0 * (v / d) * (v / d) + 0.005;
        CHECK(std::abs(fit.rate - predicted) / predicted <= band);
        fitted.push_back(fit.rate);
    }
    // bigger D means slower relaxation
    for (std::size_t i = 1; i < fitted.size(); ++i) CHECK(fitted[i] < fitted[i - 1]);
}

TEST_CASE("flat-top small-time behavior enables the freeze-out") {
    // For discrete levels 1 - p_z grows quadratically at small Vt: the
    // simulated deficit matches the cos expansion (Vt)^2/2 to 1% and the
    // log-log slope of the deficit is 2. (An exponential-decay law would
    // have slope 1.)
    const double v = 1.0;
    const auto ts = evolve({{0, 0, 1}}, Vec3{v, 0, 0}, DecoherenceRate(0), 0.05, 1e-4);
    std::vector<double> lt, ld;
    for (std::size_t i = 50; i < ts.size(); i += 50) {
        const double t = ts.time(i);
        const double deficit = 1.0 - ts.value(i, 2);
        CHECK(deficit == doctest::Approx(0.5 * v * v * t * t).epsilon(0.01));
        lt.push_back(std::log(t));
        ld.push_back(std::log(deficit));
    }
    double st = 0, sd = 0, stt = 0, std_ = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        st += lt[i];
        sd += ld[i];
        stt += lt[i] * lt[i];
        std_ += lt[i] * ld[i];
    }
    const double n = static_cast<double>(lt.size());
    const double slope = (n * std_ - st * sd) / (n * stt - st * st);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.01));
}
