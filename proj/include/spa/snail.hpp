#pragma once

#include <optional>
#include <vector>

namespace spa {

/// Nonlinear element: M SNAILs in series, each a loop of three large
/// junctions (inductance L_J) and one small junction (L_J / alpha).
struct SnailSpec {
    double L_J = 38e-12;
    double alpha = 0.065;
    int M = 20;
    /// Skip the single-well check on alpha.
    bool allow_any_alpha = false;

    /// Josephson energy phi0^2 / L_J (J).
    double E_J() const;
    /// Throws InvalidSpec.
    void validate() const;
};

struct TaylorCoeffs {
    double phi_ext = 0.0;
    double phi_min = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    double c6 = 0.0;
};

/// U_S(phi) = -E_J [alpha cos(phi) + 3 cos((phi_ext - phi)/3)] in joules.
double potential(double phi, double phi_ext, const SnailSpec& spec);

/// d^n U_S / dphi^n for n = 0..6, in joules.
double potential_derivative(int order, double phi, double phi_ext, const SnailSpec& spec);

/// Same as potential_derivative but divided by E_J.
double reduced_derivative(int order, double phi, double phi_ext, double alpha);

/// Location of the potential minimum. With `prev`, the minimum continuously
/// connected to `prev` is returned. Throws NoMinimumFound.
double find_minimum(double phi_ext, std::optional<double> prev, const SnailSpec& spec);

/// Dimensionless c_k = U_S^(k)(phi_min) / E_J.
TaylorCoeffs taylor_coeffs(double phi_ext, const SnailSpec& spec,
                           std::optional<double> prev = std::nullopt);

/// Coefficients along a flux path with branch tracking between neighbours.
std::vector<TaylorCoeffs> taylor_sweep(const std::vector<double>& phi_ext, const SnailSpec& spec);

} // namespace spa
