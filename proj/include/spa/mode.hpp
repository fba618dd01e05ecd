#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "spa/snail.hpp"

namespace spa {

/// Damping rate, constant or piecewise linear in flux (Phi/Phi0).
/// Outside the table the end values are held.
class KappaModel {
public:
    KappaModel() : table_{{0.0, 2.0 * 3.14159265358979323846 * 200e6}} {}
    static KappaModel constant(double kappa);
    static KappaModel table(std::vector<std::pair<double, double>> points);

    double at(double flux) const;
    const std::vector<std::pair<double, double>>& points() const { return table_; }
    void validate() const;

private:
    std::vector<std::pair<double, double>> table_;
};

struct CircuitSpec {
    double Z_c = 45.8;
    double omega0 = 2.0 * 3.14159265358979323846 * 16.0e9;
    KappaModel kappa;
    SnailSpec snail;

    void validate() const;
};

/// Lumped parameters of the fundamental mode.
struct ModeLC {
    double C1 = 0.0;
    double L1 = 0.0;
    double Z1 = 0.0;
    double phi_zpf = 0.0;
};

struct ModeParams {
    double flux = 0.0;
    double omega_a = 0.0;
    double L_s = 0.0;
    double C1 = 0.0;
    double L1 = 0.0;
    double Z1 = 0.0;
    double phi_zpf = 0.0;
    double g3 = 0.0;
    double g4 = 0.0;
    double g4_star = 0.0;
    double kappa = 0.0;
    /// SNAIL phase per unit of the mode quadrature a + a^dagger:
    /// 2 cos(pi omega_a / 2 omega0) phi_zpf / (M phi0).
    double phase_per_quadrature = 0.0;
    TaylorCoeffs coeffs;

    /// Z1 / R_Q; the expansion is trusted below 0.1.
    double impedance_ratio() const;
    bool perturbative() const { return impedance_ratio() < 0.1; }
};

struct QuarticCoeffs {
    double g4_star = 0.0;
    double g4 = 0.0;
};

/// 2 Z_c / (M L_s) - omega tan(pi omega / 2 omega0).
double dispersion_residual(double omega, double L_s, const CircuitSpec& circuit);

/// Fundamental root of the dispersion relation for a given SNAIL inductance.
/// Throws RootNotBracketed.
double mode_frequency_for_inductance(double L_s, const CircuitSpec& circuit);

/// Fundamental mode frequency at flux Phi/Phi0.
double mode_frequency(double flux, const CircuitSpec& circuit);

/// Roots of the dispersion relation on the first `count` tan branches.
/// Diagnostic only.
std::vector<double> dispersion_roots(double L_s, const CircuitSpec& circuit, int count);

ModeLC mode_lc(double omega_a, const CircuitSpec& circuit);

double g3_coefficient(const ModeParams& mode, const CircuitSpec& circuit);

QuarticCoeffs g4_star_coefficient(const ModeParams& mode, const CircuitSpec& circuit);

/// Black-box estimate of the order-k coefficient (rad/s), k >= 3:
/// M E_J c_k / (k! hbar) * (2 cos(pi omega_a / 2 omega0) phi_zpf / (M phi0))^k.
double gk_blackbox(int k, const ModeParams& mode, const CircuitSpec& circuit);

/// Full per-flux solve. `prev_phi_min` continues a tracked branch.
ModeParams solve_mode(double flux, const CircuitSpec& circuit,
                      std::optional<double> prev_phi_min = std::nullopt);

/// Sweep with warm starts between consecutive points.
std::vector<ModeParams> solve_mode_sweep(const std::vector<double>& flux, const CircuitSpec& circuit);

CircuitSpec default_circuit();

} // namespace spa
