#include "cohlab/zeno.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cohlab::zeno {

double zeno_prediction(double v_mag, bloch::DecoherenceRate d) {
    if (d.d == 0.0) throw std::domain_error("zeno_prediction: division by D = 0");
    return v_mag * v_mag / d.d;
}

double exact_slow_rate(double v_mag, double d) {
    v_mag = std::abs(v_mag);
    if (!(d > 2.0 * v_mag) && v_mag > 0.0)
        throw BranchError("exact_slow_rate: underdamped input (need D > 2V, got D = " +
                          std::to_string(d) + ", V = " + std::to_string(v_mag) + ")");
    if (v_mag == 0.0) return 0.0;
    const double disc = std::sqrt(d * d - 4.0 * v_mag * v_mag);
    // (d - disc)/2 computed cancellation-free.
    return 2.0 * v_mag * v_mag / (d + disc);
}

DecayFit fit_decay_rate(const TimeSeries& series, double t_min, std::string_view column) {
    const std::size_t col = series.column_index(column);
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.time(i);
        if (t < t_min) continue;
        const double p = series.value(i, col);
        if (!(p > 0.0))
            throw std::domain_error("fit_decay_rate: non-positive sample at t = " +
                                    std::to_string(t));
        const double y = -std::log(p);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++n;
    }
    if (n < 2) throw std::domain_error("fit_decay_rate: fewer than two samples in fit window");
    const double nd = static_cast<double>(n);
    const double denom = nd * stt - st * st;
    if (denom <= 0.0) throw std::domain_error("fit_decay_rate: degenerate time axis");
    DecayFit fit;
    fit.rate = (nd * sty - st * sy) / denom;
    const double intercept = (sy - fit.rate * st) / nd;
    double ss = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.time(i);
        if (t < t_min) continue;
        const double r = -std::log(series.value(i, col)) - (intercept + fit.rate * t);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / nd);
    fit.n_points = n;
    return fit;
}

double tunneling_suppression(double omega_tunnel, double e_split) {
    if (e_split == 0.0) return 1.0;
    if (std::abs(e_split) <= std::abs(omega_tunnel)) return 1.0;
    const double r = omega_tunnel / e_split;
    return r * r;
}

}  // namespace cohlab::zeno
