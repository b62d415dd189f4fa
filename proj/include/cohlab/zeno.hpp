#pragma once

#include <cstddef>
#include <string_view>

#include "cohlab/bloch.hpp"
#include "cohlab/timeseries.hpp"

namespace cohlab::zeno {

// Watched-pot decay law for the overdamped regime: P_z ~ exp(-(V^2/D) t).
double zeno_prediction(double v_mag, bloch::DecoherenceRate d);

// Exact slowest decay rate of the linear system
//   dPx/dt = -D Px, dPy/dt = V Pz - D Py, dPz/dt = -V Py,
// i.e. (D - sqrt(D^2 - 4 V^2))/2. Requires the overdamped branch
// d > 2*v_mag (or v_mag = 0).
double exact_slow_rate(double v_mag, double d);

struct DecayFit {
    double rate = 0.0;
    double residual_rms = 0.0;  // RMS residual of the linear fit in -ln p space
    std::size_t n_points = 0;
};

// Least-squares slope of -ln(column) versus t over samples with t >= t_min.
// Throws std::domain_error on non-positive samples in the window.
DecayFit fit_decay_rate(const TimeSeries& series, double t_min, std::string_view column = "pz");

// Discrete-level tunneling suppression (omega_tunnel / e_split)^2, capped
// at 1 when the splitting does not exceed the tunneling energy. The
// resonant case e_split = 0 returns 1.
double tunneling_suppression(double omega_tunnel, double e_split);

}  // namespace cohlab::zeno
