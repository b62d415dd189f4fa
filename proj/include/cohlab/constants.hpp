#pragma once

namespace cohlab::constants {

inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double boltzmann = 1.380649e-23;             // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double flux_quantum = 2.07e-15;              // Wb, h/2e rounded

}  // namespace cohlab::constants
