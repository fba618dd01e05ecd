#include "spa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spa/constants.hpp"
#include "spa/errors.hpp"

namespace spa {

namespace {

const cplx kI(0.0, 1.0);

/// e^{-i omega n dt} advanced by rotation, resynchronised periodically.
struct Phasor {
    double omega = 0.0;
    double dt = 0.0;
    cplx z{1.0, 0.0};
    cplx half{1.0, 0.0};
    cplx full{1.0, 0.0};

    Phasor(double w, double step, double sign) : omega(sign * w), dt(step) {
        half = std::polar(1.0, -omega * dt / 2.0);
        full = std::polar(1.0, -omega * dt);
    }
    void reset(long n) { z = std::polar(1.0, -std::fmod(omega * dt * static_cast<double>(n), kTwoPi)); }
};

double force(double x, const OracleModel& m) {
    // sum_k k g_k x^(k-1) for k = 3..order
    double f = 0.0;
    for (int k = m.truncation_order; k >= 3; --k) f = f * x + k * m.g[k];
    return f * x * x;
}

cplx rhs(cplx a, double drive, const OracleModel& m) {
    const double x = 2.0 * a.real();
    return -kI * (m.omega_a * a + force(x, m) + drive + m.kappa * a.imag());
}

} // namespace

OracleModel oracle_model(const ModeParams& mode, const CircuitSpec& circuit, int truncation_order) {
    if (truncation_order < 4 || truncation_order > 6)
        throw ConfigError("truncation order must be 4, 5 or 6");
    OracleModel m;
    m.omega_a = mode.omega_a;
    m.kappa = mode.kappa;
    m.truncation_order = truncation_order;
    m.g[3] = mode.g3;
    m.g[4] = mode.g4;
    m.g[5] = gk_blackbox(5, mode, circuit);
    m.g[6] = gk_blackbox(6, mode, circuit);
    m.phase_per_quadrature = mode.phase_per_quadrature;
    return m;
}

double max_step(const OracleModel& model, const std::vector<OracleDrive>& drives) {
    double wmax = model.omega_a;
    for (const auto& d : drives) wmax = std::max(wmax, std::abs(d.omega));
    return 1.0 / (50.0 * wmax);
}

double default_escape_radius(const OracleModel& model, std::optional<double> fixed_point_amplitude) {
    double r = std::numeric_limits<double>::infinity();
    if (model.phase_per_quadrature > 0.0) r = 0.5 * kPi / model.phase_per_quadrature;
    if (fixed_point_amplitude && *fixed_point_amplitude > 0.0) r = std::min(r, 10.0 * *fixed_point_amplitude);
    return r;
}

void OracleConfig::validate(const OracleModel& model) const {
    if (model.truncation_order < 4 || model.truncation_order > 6)
        throw ConfigError("truncation order must be 4, 5 or 6");
    const double h = dt > 0.0 ? dt : max_step(model, drives);
    if (h > max_step(model, drives) * (1.0 + 1e-9))
        throw ConfigError("integrator step exceeds 1/(50 max frequency)");
    if (!(t_total > 0.0)) throw ConfigError("total time must be positive");
    if (model.kappa > 0.0 && t_total < 20.0 / model.kappa)
        throw ConfigError("total time shorter than 20/kappa");
    for (std::size_t i = 0; i < drives.size(); ++i)
        for (std::size_t j = i + 1; j < drives.size(); ++j) {
            const double beat = std::abs(drives[i].omega - drives[j].omega);
            if (beat > 0.0 && t_total < 50.0 * kTwoPi / beat)
                throw ConfigError("total time shorter than 50 periods of the slowest drive beat");
        }
    if (window < 0.0 || window > t_total) throw ConfigError("projection window outside the run");
    if (!tones.empty() && !(window > 0.0)) throw ConfigError("tone extraction requires a window");
}

OracleRun integrate(const OracleConfig& cfg, const OracleModel& model) {
    cfg.validate(model);
    const double dt = cfg.dt > 0.0 ? cfg.dt : max_step(model, cfg.drives);
    const long n_total = static_cast<long>(std::llround(cfg.t_total / dt));
    const long n_window = static_cast<long>(std::llround(cfg.window / dt));
    const long n_w0 = n_total - n_window;
    const double radius = cfg.escape_radius > 0.0 ? cfg.escape_radius : default_escape_radius(model);

    std::vector<Phasor> drives;
    std::vector<cplx> eps;
    for (const auto& d : cfg.drives) {
        drives.emplace_back(d.omega, dt, 1.0);
        eps.push_back(d.complex_amplitude());
    }
    std::vector<Phasor> tones;
    for (double w : cfg.tones) tones.emplace_back(w, dt, -1.0);
    std::vector<cplx> sums(cfg.tones.size());

    OracleRun run;
    run.series_dt = cfg.record_stride > 0 ? dt * cfg.record_stride : 0.0;
    if (cfg.record_stride > 0) run.series.reserve(static_cast<std::size_t>(n_total / cfg.record_stride + 1));

    // Online linear fit of the unwrapped phase.
    const bool track = cfg.track_frequency_about.has_value();
    Phasor ref(track ? *cfg.track_frequency_about : 0.0, dt, -1.0);
    double unwrapped = 0.0, last_arg = 0.0;
    double st = 0.0, sp = 0.0, stt = 0.0, stp = 0.0, cnt = 0.0;
    const long track_from = cfg.window > 0.0 ? n_w0 : 0;

    auto drive_at = [&](int stage) {
        double f = 0.0;
        for (std::size_t j = 0; j < drives.size(); ++j) {
            const cplx z = stage == 0 ? drives[j].z : (stage == 1 ? drives[j].z * drives[j].half : drives[j].z * drives[j].full);
            f += 2.0 * (eps[j] * z).real();
        }
        return f;
    };

    cplx a = cfg.initial;
    for (long n = 0; n <= n_total; ++n) {
        if ((n & 1023) == 0) {
            for (auto& d : drives) d.reset(n);
            for (auto& t : tones) t.reset(n);
            if (track) ref.reset(n);
        }
        const double amp = std::abs(a);
        run.max_abs = std::max(run.max_abs, amp);
        if (!(amp <= radius))
            throw Overflow("oscillator amplitude " + std::to_string(amp) + " exceeded escape radius " +
                           std::to_string(radius));
        if (cfg.record_stride > 0 && n % cfg.record_stride == 0) run.series.push_back(a);
        if (n >= n_w0 && n < n_total) {
            for (std::size_t k = 0; k < tones.size(); ++k) sums[k] += a * tones[k].z;
        }
        if (track && n >= track_from) {
            const double arg = std::arg(a * ref.z);
            if (cnt == 0.0) {
                unwrapped = arg;
            } else {
                double d = arg - last_arg;
                if (d > kPi) d -= kTwoPi;
                if (d < -kPi) d += kTwoPi;
                unwrapped += d;
            }
            last_arg = arg;
            const double t = n * dt;
            st += t; sp += unwrapped; stt += t * t; stp += t * unwrapped; cnt += 1.0;
        }
        if (n == n_total) break;

        const double f0 = drive_at(0), f1 = drive_at(1), f2 = drive_at(2);
        const cplx k1 = rhs(a, f0, model);
        const cplx k2 = rhs(a + 0.5 * dt * k1, f1, model);
        const cplx k3 = rhs(a + 0.5 * dt * k2, f1, model);
        const cplx k4 = rhs(a + dt * k3, f2, model);
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        for (auto& d : drives) d.z *= d.full;
        for (auto& t : tones) t.z *= t.full;
        if (track) ref.z *= ref.full;
    }
    run.final_state = a;
    for (std::size_t k = 0; k < sums.size(); ++k)
        run.tones.push_back(n_window > 0 ? sums[k] / static_cast<double>(n_window) : cplx{});
    if (track && cnt > 1.0) {
        const double slope = (cnt * stp - st * sp) / (cnt * stt - st * st);
        run.frequency_offset = -slope;
    }
    return run;
}

cplx extract_tone(const std::vector<cplx>& series, double dt, double t0, double omega, double t_start,
                  double window) {
    const long i0 = std::max(0L, static_cast<long>(std::llround((t_start - t0) / dt)));
    const long n = static_cast<long>(std::llround(window / dt));
    const long i1 = std::min(static_cast<long>(series.size()), i0 + n);
    cplx sum{};
    for (long i = i0; i < i1; ++i) {
        const double t = t0 + i * dt;
        sum += series[static_cast<std::size_t>(i)] * std::polar(1.0, std::fmod(omega * t, kTwoPi));
    }
    return i1 > i0 ? sum / static_cast<double>(i1 - i0) : cplx{};
}

double oracle_energy(cplx a, const OracleModel& m) {
    const double x = 2.0 * a.real();
    double h = m.omega_a * std::norm(a);
    for (int k = 3; k <= m.truncation_order; ++k) h += m.g[k] * std::pow(x, k);
    return h;
}

std::pair<cplx, cplx> linear_response(double omega, const OracleModel& m) {
    // (-iw + i wa + k/2) A - (k/2) conj(B) = -i ;  -(k/2) A + (-iw - i wa + k/2) conj(B) = i
    const double hk = m.kappa / 2.0;
    const cplx a11 = -kI * omega + kI * m.omega_a + hk;
    const cplx a12 = -hk;
    const cplx a21 = -hk;
    const cplx a22 = -kI * omega - kI * m.omega_a + hk;
    const cplx det = a11 * a22 - a12 * a21;
    const cplx b1 = -kI, b2 = kI;
    const cplx A = (b1 * a22 - a12 * b2) / det;
    const cplx Bc = (a11 * b2 - a21 * b1) / det;
    return {A, std::conj(Bc)};
}

// ============================================================================
// Experiments
// ============================================================================

namespace {

constexpr int kStepsPerHalfPumpPeriod = 629;

struct PumpSetup {
    OracleModel model;
    double omega_h = 0.0;
    double dt = 0.0;
    OracleDrive drive;
    cplx origin{};
};

PumpSetup pump_setup(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p, int order = 4) {
    PumpSetup s;
    s.model = oracle_model(mode, circuit, order);
    s.omega_h = mode.omega_a + delta;
    s.dt = kTwoPi / s.omega_h / kStepsPerHalfPumpPeriod;
    const double wp = 2.0 * s.omega_h;
    const auto [A, B] = linear_response(wp, s.model);
    const cplx eps = std::sqrt(n_p) / A;
    s.drive = OracleDrive{wp, std::abs(eps), std::arg(eps)};
    s.origin = eps * (A + B);
    return s;
}

double periods(double t, double omega) { return std::ceil(t * omega / kTwoPi) * kTwoPi / omega; }

} // namespace

OracleGainResult oracle_gain(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                             double offset, const PumpOptions& opts) {
    PumpSetup s = pump_setup(mode, circuit, delta, n_p);
    const long N = std::max(1L, static_cast<long>(std::llround(s.omega_h / offset)));
    const double w = s.omega_h / static_cast<double>(N);
    const double ws = s.omega_h + w;
    const double base_period = kTwoPi / w;

    const EffectiveModel em = effective_params(mode.flux, delta, n_p, mode, opts);
    OracleGainResult r;
    r.closed_form = small_signal_gain(em);
    {
        const double ds = em.delta_b - w, di = em.delta_b + w, k2 = em.kappa * em.kappa / 4.0;
        const double den = std::pow(k2 + ds * di - em.g * em.g * 4.0, 2) + k2 * std::pow(di - ds, 2);
        r.closed_form_at_offset = 1.0 + std::pow(2.0 * em.g * em.kappa, 2) / den;
    }
    const cplx eps_s = 0.1 * mode.kappa / (2.0 * std::sqrt(r.closed_form));

    OracleConfig cfg;
    cfg.dt = s.dt;
    cfg.drives = {s.drive, OracleDrive{ws, std::abs(eps_s), std::arg(eps_s)}};
    cfg.initial = s.origin;
    cfg.window = 2.0 * base_period;
    cfg.t_total = periods(60.0 / mode.kappa, s.omega_h) + cfg.window;
    cfg.tones = {ws, 2.0 * s.omega_h};
    const OracleRun run = integrate(cfg, s.model);
    const cplx as = run.tones[0];
    r.gain = std::norm(1.0 - kI * mode.kappa * as / eps_s);
    r.n_s = std::norm(as);
    r.n_p_measured = std::norm(run.tones[1]);
    return r;
}

OraclePdResult oracle_period_doubling(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                                      const PumpOptions& opts) {
    PumpSetup s = pump_setup(mode, circuit, delta, n_p);
    const EffectiveModel em = effective_params(mode.flux, delta, n_p, mode, opts);
    OraclePdResult r;
    const auto roots = period_doubling_amplitudes(em);
    for (const auto& pd : roots)
        if (pd.sign < 0) r.predicted = pd.n_h;

    OracleConfig cfg;
    cfg.dt = s.dt;
    cfg.drives = {s.drive};
    cfg.initial = s.origin + std::polar(0.1, 0.3);
    cfg.window = periods(20.0 / mode.kappa, s.omega_h);
    cfg.t_total = periods(600.0 / mode.kappa, s.omega_h) + cfg.window;
    cfg.tones = {s.omega_h, 2.0 * s.omega_h};
    cfg.escape_radius = default_escape_radius(s.model, r.predicted > 0.0 ? std::optional<double>(std::sqrt(r.predicted))
                                                                          : std::nullopt);
    const OracleRun run = integrate(cfg, s.model);
    r.n_h = std::norm(run.tones[0]);
    r.n_p_measured = std::norm(run.tones[1]);
    return r;
}

bool oracle_origin_unstable(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                            const PumpOptions& opts) {
    (void)opts;
    PumpSetup s = pump_setup(mode, circuit, delta, n_p);
    const double seed = 1e-3;
    OracleConfig cfg;
    cfg.dt = s.dt;
    cfg.drives = {s.drive};
    cfg.initial = s.origin + std::polar(seed, 0.7);
    cfg.window = periods(10.0 / mode.kappa, s.omega_h);
    cfg.record_stride = 0;
    cfg.tones = {s.omega_h};

    // Early window after fast transients, late window at the end.
    OracleConfig early = cfg;
    early.t_total = periods(40.0 / mode.kappa, s.omega_h) + cfg.window;
    cfg.t_total = periods(1500.0 / mode.kappa, s.omega_h) + cfg.window;
    try {
        const double n0 = std::norm(integrate(early, s.model).tones[0]);
        const double n1 = std::norm(integrate(cfg, s.model).tones[0]);
        return n1 > 1.0 || (n1 > 9.0 * n0 && n1 > seed * seed);
    } catch (const Overflow&) {
        return true;
    }
}

bool oracle_high_state_persists(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                                const PumpOptions& opts) {
    PumpSetup s = pump_setup(mode, circuit, delta, n_p);
    const EffectiveModel em = effective_params(mode.flux, delta, n_p, mode, opts);
    if (std::abs(em.K) < 1e-6 * em.kappa) return false;
    double n0 = std::max(std::abs(em.delta_b), 0.5 * em.kappa) / std::abs(em.K);
    for (const auto& pd : period_doubling_amplitudes(em))
        if (pd.sign < 0) n0 = pd.n_h;
    const cplx gc = 4.0 * mode.g3 * std::sqrt(n_p);
    const double th = period_doubling_phase(em, n0, gc);

    OracleConfig cfg;
    cfg.dt = s.dt;
    cfg.drives = {s.drive};
    cfg.initial = s.origin + std::polar(std::sqrt(n0), th);
    cfg.escape_radius = std::max(default_escape_radius(s.model), 3.0 * std::abs(cfg.initial));
    cfg.window = periods(10.0 / mode.kappa, s.omega_h);
    cfg.t_total = periods(800.0 / mode.kappa, s.omega_h) + cfg.window;
    cfg.tones = {s.omega_h};
    try {
        const double n1 = std::norm(integrate(cfg, s.model).tones[0]);
        return n1 > 0.25 * n0;
    } catch (const Overflow&) {
        return false;
    }
}

Region oracle_region(const ModeParams& mode, const CircuitSpec& circuit, double delta, double n_p,
                     const PumpOptions& opts) {
    if (oracle_origin_unstable(mode, circuit, delta, n_p, opts)) return Region::II;
    if (oracle_high_state_persists(mode, circuit, delta, n_p, opts)) return Region::III;
    return Region::I;
}

double oracle_self_kerr(const ModeParams& mode, const CircuitSpec& circuit, double nbar, int truncation_order) {
    OracleModel m = oracle_model(mode, circuit, truncation_order);
    m.kappa = 0.0;
    OracleConfig cfg;
    cfg.dt = max_step(m, {});
    cfg.initial = std::sqrt(nbar);
    cfg.t_total = 2e-6;
    cfg.track_frequency_about = mode.omega_a;
    const OracleRun run = integrate(cfg, m);
    return *run.frequency_offset / nbar;
}

double oracle_stark_shift(const ModeParams& mode, const CircuitSpec& circuit, double omega_d, double nbar,
                          int truncation_order) {
    const OracleModel m = oracle_model(mode, circuit, truncation_order);
    // Commensurate tones spaced by a 10 MHz base frequency.
    const double wb = kTwoPi * 10e6;
    const double wprobe = std::round(mode.omega_a / wb) * wb;
    const double wd = wprobe + std::round((omega_d - wprobe) / wb) * wb;
    const double base_period = kTwoPi / wb;

    auto effective_frequency = [&](double n) {
        const auto [Ad, Bd] = linear_response(wd, m);
        const cplx eps_d = std::sqrt(n) / Ad;
        const cplx eps_p = 1e-3 * mode.kappa;
        const auto [Ap, Bp] = linear_response(wprobe, m);
        OracleConfig cfg;
        cfg.dt = std::min(max_step(m, {OracleDrive{wd, 0.0, 0.0}}), kTwoPi / wb / 2e5);
        cfg.drives = {OracleDrive{wprobe, std::abs(eps_p), std::arg(eps_p)}};
        if (n > 0.0) cfg.drives.push_back(OracleDrive{wd, std::abs(eps_d), std::arg(eps_d)});
        cfg.initial = eps_p * (Ap + Bp) + (n > 0.0 ? eps_d * (Ad + Bd) : cplx{});
        cfg.window = 2.0 * base_period;
        cfg.t_total = std::ceil(40.0 / mode.kappa / base_period) * base_period + cfg.window;
        cfg.tones = {wprobe};
        const OracleRun run = integrate(cfg, m);
        const cplx resp = run.tones[0];
        return (wprobe + kI * mode.kappa / 2.0 - eps_p / resp).real();
    };
    return effective_frequency(nbar) - effective_frequency(0.0);
}

} // namespace spa
