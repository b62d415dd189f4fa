#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "cohlab/vec3.hpp"

namespace testutil {

// Haar-like random unitary: QR of a complex Gaussian matrix with the
// R-diagonal phases absorbed.
inline Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXcd ginibre(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) ginibre(i, j) = {normal(rng), normal(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ginibre);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        const std::complex<double> d = r(j, j);
        if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

inline Eigen::VectorXcd random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = {normal(rng), normal(rng)};
    v /= v.norm();
    return v;
}

inline cohlab::Vec3 random_direction(std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    cohlab::Vec3 v{normal(rng), normal(rng), normal(rng)};
    return v / v.norm();
}

// Composite Simpson on [a, b], n panels (n even).
template <typename F>
double simpson(F f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace testutil
