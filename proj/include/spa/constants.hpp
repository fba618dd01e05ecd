#pragma once

#include <numbers>

namespace spa {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduced Planck constant (J s).
inline constexpr double kHbar = 1.054571817e-34;
/// Elementary charge (C).
inline constexpr double kElectron = 1.602176634e-19;
/// Reduced flux quantum hbar/2e (Wb).
inline constexpr double kPhi0 = kHbar / (2.0 * kElectron);
/// Reduced resistance quantum hbar/(2e)^2 (ohm).
inline constexpr double kRQ = kHbar / (4.0 * kElectron * kElectron);

inline constexpr double to_angular(double hz) { return kTwoPi * hz; }
inline constexpr double to_hz(double omega) { return omega / kTwoPi; }

} // namespace spa
