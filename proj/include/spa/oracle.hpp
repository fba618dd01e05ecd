#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "spa/mode.hpp"
#include "spa/pump.hpp"

namespace spa {

/// Force term 2 Re(amplitude e^{i phase} e^{-i omega t}) on the quadrature.
struct OracleDrive {
    double omega = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;

    cplx complex_amplitude() const { return std::polar(amplitude, phase); }
};

/// Classical lab-frame oscillator
///   da/dt = -i omega_a a - i sum_k k g_k x^(k-1) - (kappa/2)(a - a*) - i f(t),
/// with x = a + a*. The damping acts on the momentum quadrature only.
struct OracleModel {
    double omega_a = 0.0;
    double kappa = 0.0;
    /// g[k] for k = 3..6, rad/s.
    std::array<double, 7> g{};
    int truncation_order = 4;
    /// SNAIL phase per unit quadrature, used for the default escape radius.
    double phase_per_quadrature = 0.0;
};

/// g3 and g4 from the mode solve, g5 and g6 from the black-box expansion.
OracleModel oracle_model(const ModeParams& mode, const CircuitSpec& circuit, int truncation_order = 4);

struct OracleConfig {
    double dt = 0.0;
    double t_total = 0.0;
    std::vector<OracleDrive> drives;
    cplx initial{};
    /// Length of the projection window at the end of the run.
    double window = 0.0;
    std::vector<double> tones;
    /// Escape radius on |a|. Zero selects the default.
    double escape_radius = 0.0;
    /// Keep every n-th sample; 0 stores nothing.
    int record_stride = 0;
    /// Fit the drift of arg(a e^{i omega t}) against this reference.
    std::optional<double> track_frequency_about;

    /// Throws ConfigError.
    void validate(const OracleModel& model) const;
};

struct OracleRun {
    std::vector<cplx> tones;
    std::vector<cplx> series;
    double series_dt = 0.0;
    double series_t0 = 0.0;
    cplx final_state{};
    double max_abs = 0.0;
    /// Frequency relative to track_frequency_about, rad/s.
    std::optional<double> frequency_offset;
};

/// Largest step allowed for the given model and drives: 1/(50 max frequency).
double max_step(const OracleModel& model, const std::vector<OracleDrive>& drives);

/// Default escape radius: pi of SNAIL phase per junction, optionally capped at
/// 10x a known fixed-point amplitude.
double default_escape_radius(const OracleModel& model, std::optional<double> fixed_point_amplitude = std::nullopt);

/// Fixed-step RK4 integration. Throws Overflow and ConfigError.
OracleRun integrate(const OracleConfig& config, const OracleModel& model);

/// Windowed projection (1/N) sum a(t_n) e^{i omega t_n} over the samples in
/// [t_start, t_start + window).
cplx extract_tone(const std::vector<cplx>& series, double dt, double t0, double omega, double t_start,
                  double window);

/// Hamiltonian value (per hbar) of the undriven model.
double oracle_energy(cplx a, const OracleModel& model);

/// Lab-frame steady response (A, B) of the linear oscillator to a unit force
/// tone: a = A e^{-i omega t} + B e^{i omega t}.
std::pair<cplx, cplx> linear_response(double omega, const OracleModel& model);

// ============================================================================
// Experiments
// ============================================================================

struct OracleGainResult {
    double gain = 0.0;
    double closed_form = 0.0;
    /// Closed form with the signal and idler detuned by -/+ offset.
    double closed_form_at_offset = 0.0;
    double n_p_measured = 0.0;
    double n_s = 0.0;
};

/// Pump at 2(omega_a + delta) with |alpha_p|^2 = n_p, weak signal at
/// omega_p/2 + offset; gain from the signal tone.
OracleGainResult oracle_gain(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                             double offset, const PumpOptions& opts = {});

struct OraclePdResult {
    double n_h = 0.0;
    double predicted = 0.0;
    double n_p_measured = 0.0;
};

/// Pump-only run from a small seed; |alpha_h|^2 at omega_p/2 in steady state.
OraclePdResult oracle_period_doubling(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                                      const PumpOptions& opts = {});

/// True when a 1e-3 kick off the pumped origin grows past its own size.
bool oracle_origin_unstable(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                            const PumpOptions& opts = {});

/// True when a start on the large-amplitude state persists. The escape radius
/// is widened to three times the seed amplitude.
bool oracle_high_state_persists(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                                const PumpOptions& opts = {});

/// Region label from the two basin runs.
Region oracle_region(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                     const PumpOptions& opts = {});

/// Amplitude-dependent frequency pull per photon of the free, undamped oscillator.
double oracle_self_kerr(const ModeParams& mode, const CircuitSpec& circuit, double nbar, int truncation_order = 4);

/// Resonance shift seen by a weak probe while a drive at omega_d holds nbar photons.
double oracle_stark_shift(const ModeParams& mode, const CircuitSpec& circuit, double omega_d, double nbar,
                          int truncation_order = 6);

} // namespace spa
