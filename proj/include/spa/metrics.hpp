#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spa/mode.hpp"
#include "spa/pump.hpp"

namespace spa {

double to_dBm(double watts);
double from_dBm(double dbm);
double to_dB(double ratio);
double from_dB(double db);

/// Pumped working point: n_p tuned to reach target_G0 at (flux, delta).
struct OperatingPoint {
    double flux = 0.0;
    double delta = 0.0;
    double target_G0 = 100.0;
    double n_p = 0.0;
    EffectiveModel model;
};

/// Throws GainUnreachable.
OperatingPoint make_operating_point(const ModeParams& mode, double delta, double target_G0,
                                    const PumpOptions& opts = {});

/// Operating point at an explicit pump photon number.
OperatingPoint operating_point_at(const ModeParams& mode, double delta, double n_p, const PumpOptions& opts = {});

double operating_gain(const OperatingPoint& op);

// ============================================================================
// Stark shift
// ============================================================================

struct StarkPoint {
    double nbar = 0.0;
    double shift = 0.0;
    std::optional<double> oracle_shift;
};

struct StarkCurve {
    double flux = 0.0;
    double omega_d = 0.0;
    std::vector<StarkPoint> points;
    std::string warning;
};

/// Lowest-order 24 g4* nbar line. With `oracle_circuit` the time-domain
/// estimate (sextic truncation) is added per point.
StarkCurve stark_shift_curve(const ModeParams& mode, double omega_d, const std::vector<double>& nbar_grid,
                             const CircuitSpec* oracle_circuit = nullptr);

// ============================================================================
// Saturation
// ============================================================================

enum class KerrForm { Dressed, Undressed };

/// Input powers at which the gain has moved from G0 to G. Throws NoSolution
/// and Unbounded.
std::vector<double> input_power_for_gain(double G, const OperatingPoint& op, KerrForm form = KerrForm::Dressed);

/// Closed-form 1 dB compression input power.
double p1db(const OperatingPoint& op, KerrForm form = KerrForm::Dressed);

/// Input power solving the self-consistent gain equation exactly at G0 - 1 dB,
/// located on the numerically sampled saturation branches.
double p1db_numeric(const OperatingPoint& op);

struct SaturationPoint {
    double p_in = 0.0;
    std::vector<double> gains;
    /// Gain on a slow upward power sweep starting from G0.
    double followed_gain = 0.0;
};

struct SaturationCurve {
    double flux = 0.0;
    double delta = 0.0;
    double target_G0 = 0.0;
    double n_p = 0.0;
    double G0 = 0.0;
    std::vector<SaturationPoint> points;
    std::optional<double> p1db;
    bool shark_fin = false;
    std::optional<double> low_branch_termination;
    /// Largest output step (dB) between neighbouring grid powers on the followed path.
    double max_output_jump_dB = 0.0;
    double jump_input_step_dB = 0.0;
    bool followed_monotone_decreasing = false;
};

/// Gains are searched in (1, 1e4 G0].
SaturationCurve saturation_curve(const OperatingPoint& op, const std::vector<double>& p_in_grid);

// ============================================================================
// Intermodulation and efficiency
// ============================================================================

struct ImdResult {
    double G = 1.0;
    double iip3 = 0.0;
    double iip3_dBm = 0.0;
    double delta1 = 2.0 * 3.14159265358979323846 * 500e3;
    double delta2 = 2.0 * 3.14159265358979323846 * 100e3;
};

/// (kappa/|K|) (sqrt(G)+1)^-3 hbar omega_a kappa. Throws Unbounded.
ImdResult iip3(double G, double K, double kappa, double omega_a);

/// K magnitude implied by a measured IIP3.
double kerr_from_iip3(double iip3_watts, double G, double kappa, double omega_a);

struct PumpPortModel {
    double omega_p = 0.0;
    double n_p = 0.0;
    double omega_a = 0.0;
    double kappa = 0.0;
    std::optional<double> kappa_pump;
};

/// hbar omega_p n_p [(omega_p - omega_a)^2 + (kappa/2)^2] / kappa_pump.
double modeled_pump_power(const PumpPortModel& pump);

/// G P1dB / P_p. Throws MissingPumpCoupling.
double power_efficiency(double G, double p1db_watts, std::optional<double> pump_power,
                        const std::optional<PumpPortModel>& pump = std::nullopt);

/// Steady photons from a drive of power P_in at omega_d.
double drive_photon_number(double p_in, double omega_d, double omega_a, double kappa);

} // namespace spa
