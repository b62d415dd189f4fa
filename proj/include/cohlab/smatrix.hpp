#pragma once

#include <Eigen/Dense>

#include "cohlab/errors.hpp"

namespace cohlab::smatrix {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// max |(S^dag S - I)_ij|
double unitarity_defect(const CMatrix& s);

// Two S-matrices seen by the environment depending on the subsystem
// state, the incoming environment state, and an overall rate
// normalization (incoming particles per unit time).
struct ScatteringPair {
    CMatrix s1;
    CMatrix s2;
    CVector incoming;
    double flux = 1.0;

    ScatteringPair(CMatrix s1_, CMatrix s2_, CVector incoming_, double flux_ = 1.0);
};

// Single impact-parameter / partial-wave channel, S = e^{2 i delta}.
struct PartialWaveChannel {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double flux = 1.0;
};

// D = flux * Im i <i|(1 - S1^dag S2)|i> = flux * Re <i|(1 - S1^dag S2)|i>.
// Nonnegative for unitary inputs (up to round-off).
double decoherence_rate(const ScatteringPair& pair);
// Scalar-channel specialization: flux * (1 - cos 2(delta2 - delta1)).
double decoherence_rate(const PartialWaveChannel& ch);

// Companion real part: flux * Im <i|(1 - S1^dag S2)|i>, the
// environment-induced energy shift of the subsystem. Sign convention:
// a single channel with S1 = 1, S2 = e^{2 i delta} gives -flux*sin(2 delta).
double energy_shift(const ScatteringPair& pair);

// flux * <i|(1-S)^dag (1-S)|i>: total transition rate out of |i>.
double scattering_rate(const CMatrix& s, const CVector& incoming, double flux);

struct HalfRateCheck {
    double d = 0.0;
    double half_rate = 0.0;
    double difference = 0.0;
};

// With S1 = I the decoherence rate equals half the scattering rate on
// state 2 exactly; returns both sides and their difference.
HalfRateCheck verify_half_rate_limit(const CMatrix& s2, const CVector& incoming, double flux);

}  // namespace cohlab::smatrix
