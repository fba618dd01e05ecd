#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "spa/mode.hpp"

namespace spa {

using cplx = std::complex<double>;

/// Knobs shared by the pump-frame computations.
struct PumpOptions {
    /// Multiplies the pump Stark coefficient (0 gives the undressed model).
    double stark_scale = 1.0;
    /// Multiplies K = 12 g4*.
    double kerr_scale = 1.0;
    /// Pump photon ceiling for gain searches; defaults to pump_photon_ceiling(mode).
    std::optional<double> np_max;
};

struct EffectiveModel {
    double flux = 0.0;
    double delta = 0.0;
    double n_p = 0.0;
    double delta_b = 0.0;
    double g = 0.0;
    double K = 0.0;
    double kappa = 0.0;
    double omega_a = 0.0;
};

/// Coefficient S in delta_b = delta - S n_p: 32 g4 / 3 - 28 g3^2 / omega_a.
double stark_coefficient(const ModeParams& mode, const PumpOptions& opts = {});

/// Pump photons at which the pump displacement alone swings each SNAIL by
/// pi in phase (pump at 2 omega_a). Beyond this the truncation is meaningless.
double pump_photon_ceiling(const ModeParams& mode);

EffectiveModel effective_params(double flux, double delta, double n_p, const ModeParams& mode,
                                const PumpOptions& opts = {});

/// Small-signal gain. Throws AboveThreshold.
double small_signal_gain(const EffectiveModel& m);

/// Gain with n_s signal and n_i idler photons in the resonator.
double gain(const EffectiveModel& m, double n_s, double n_i);

/// Lowest self-consistent threshold of n_p = (kappa^2 + 4 delta_b(n_p)^2) / (8 g3)^2.
/// Throws NoConvergence.
double threshold_np(double flux, double delta, const ModeParams& mode, const PumpOptions& opts = {});

/// Smallest n_p reaching `target_G0`. Throws GainUnreachable.
double np_for_gain(double target_G0, double flux, double delta, const ModeParams& mode,
                   const PumpOptions& opts = {});

// ============================================================================
// Harmonic balance
// ============================================================================

struct HbState {
    cplx alpha_s{};
    cplx alpha_i{};
    cplx alpha_h{};
    cplx alpha_p{};
    double omega = 0.0;
    cplx u_s{};
    cplx u_i{};
    cplx u_h{};
};

/// Parameters entering the reduced three-tone equations.
struct HbContext {
    double delta_b = 0.0;
    double g3 = 0.0;
    double K = 0.0;
    double kappa = 0.0;
};

HbContext hb_context(const EffectiveModel& m, const ModeParams& mode);

struct HbSolution {
    HbState state;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string start;
    std::string error;
};

struct HbResult {
    /// Distinct converged solutions.
    std::vector<HbSolution> solutions;
    /// One entry per start, converged or not.
    std::vector<HbSolution> starts;
};

/// Residuals of the signal, idler and half-pump balance equations, divided by kappa.
std::array<cplx, 3> hb_residual(const HbState& s, const HbContext& ctx);

/// Newton iteration from a single guess.
HbSolution newton_harmonic_balance(const HbState& guess, const HbContext& ctx, int max_iter = 100);

/// Multi-start solve: trivial start plus both closed-form period-doubling
/// branches at both phases.
HbResult solve_harmonic_balance(const HbState& state0, const HbContext& ctx);

/// Reflection gain |1 - i kappa alpha_s / u_s|^2 of a solved state.
double hb_signal_gain(const HbState& s, double kappa);

// ============================================================================
// Period doubling and stability
// ============================================================================

struct PdAmplitude {
    double n_h = 0.0;
    int sign = 0;
};

/// Real non-negative |alpha_h|^2 roots. Throws DegenerateKerr.
std::vector<PdAmplitude> period_doubling_amplitudes(const EffectiveModel& m);

/// Phase theta of alpha_h = sqrt(n_h) exp(i theta) on a period-doubled state,
/// for pump coupling 4 g3 alpha_p.
double period_doubling_phase(const EffectiveModel& m, double n_h, cplx coupling);

enum class Region { I, II, III };

std::string region_name(Region r);

Region classify_stability(double delta, double n_p, double flux, const ModeParams& mode,
                          const PumpOptions& opts = {});

struct Polyline {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct StabilityClass {
    Region region = Region::I;
    std::vector<Polyline> boundaries;
};

/// Label at one point plus the boundary curves sampled on `delta_grid`.
StabilityClass classify_with_boundaries(double delta, double n_p, double flux, const ModeParams& mode,
                                        const std::vector<double>& delta_grid,
                                        const PumpOptions& opts = {});

/// Boundary curves in (delta, n_p): "threshold_lower", "threshold_upper"
/// (both solve 16 g3^2 n_p = kappa^2/4 + delta_b^2) and "I_III".
std::vector<Polyline> stability_boundaries(const ModeParams& mode, const std::vector<double>& delta_grid,
                                           const PumpOptions& opts = {});

} // namespace spa
