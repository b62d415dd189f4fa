#include "cohlab/smatrix.hpp"

#include <cmath>
#include <string>

namespace cohlab::smatrix {

namespace {

constexpr double kUnitarityTol = 1e-10;
constexpr double kNormTol = 1e-12;

void require_unitary(const CMatrix& s, const char* name) {
    if (s.rows() != s.cols()) throw InvalidMatrixError(std::string(name) + ": not square");
    const double defect = unitarity_defect(s);
    if (defect > kUnitarityTol)
        throw InvalidMatrixError(std::string(name) + ": unitarity defect " +
                                 std::to_string(defect));
}

void require_compatible(const CMatrix& s, const CVector& incoming, const char* name) {
    require_unitary(s, name);
    if (incoming.size() != s.rows())
        throw InvalidMatrixError("incoming state dimension does not match S");
    if (std::abs(incoming.norm() - 1.0) > kNormTol)
        throw InvalidMatrixError("incoming state is not normalized");
}

}  // namespace

double unitarity_defect(const CMatrix& s) {
    const CMatrix g = s.adjoint() * s - CMatrix::Identity(s.rows(), s.cols());
    return g.cwiseAbs().maxCoeff();
}

ScatteringPair::ScatteringPair(CMatrix s1_, CMatrix s2_, CVector incoming_, double flux_)
    : s1(std::move(s1_)), s2(std::move(s2_)), incoming(std::move(incoming_)), flux(flux_) {
    require_unitary(s1, "S1");
    require_unitary(s2, "S2");
    if (s1.rows() != s2.rows()) throw InvalidMatrixError("S1 and S2 dimensions differ");
    if (incoming.size() != s1.rows())
        throw InvalidMatrixError("incoming state dimension does not match S");
    if (std::abs(incoming.norm() - 1.0) > kNormTol)
        throw InvalidMatrixError("incoming state is not normalized");
    if (!(flux >= 0.0)) throw std::invalid_argument("flux must be >= 0");
}

double decoherence_rate(const ScatteringPair& pair) {
    const std::complex<double> amp =
        pair.incoming.dot(pair.incoming - pair.s1.adjoint() * (pair.s2 * pair.incoming));
    // Im[i z] = Re z
    return pair.flux * amp.real();
}

double decoherence_rate(const PartialWaveChannel& ch) {
    return ch.flux * (1.0 - std::cos(2.0 * (ch.delta2 - ch.delta1)));
}

double energy_shift(const ScatteringPair& pair) {
    const std::complex<double> amp =
        pair.incoming.dot(pair.incoming - pair.s1.adjoint() * (pair.s2 * pair.incoming));
    return pair.flux * amp.imag();
}

double scattering_rate(const CMatrix& s, const CVector& incoming, double flux) {
    require_compatible(s, incoming, "S");
    if (!(flux >= 0.0)) throw std::invalid_argument("flux must be >= 0");
    const CVector scattered = incoming - s * incoming;
    return flux * scattered.squaredNorm();
}

HalfRateCheck verify_half_rate_limit(const CMatrix& s2, const CVector& incoming, double flux) {
    require_compatible(s2, incoming, "S2");
    HalfRateCheck out;
    const ScatteringPair pair(CMatrix::Identity(s2.rows(), s2.cols()), s2, incoming, flux);
    out.d = decoherence_rate(pair);
    out.half_rate = 0.5 * scattering_rate(s2, incoming, flux);
    out.difference = std::abs(out.d - out.half_rate);
    return out;
}

}  // namespace cohlab::smatrix
