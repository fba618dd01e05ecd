#include "spa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spa/constants.hpp"
#include "spa/errors.hpp"
#include "spa/oracle.hpp"

namespace spa {

double to_dBm(double watts) { return 10.0 * std::log10(watts / 1e-3); }
double from_dBm(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
double to_dB(double ratio) { return 10.0 * std::log10(ratio); }
double from_dB(double db) { return std::pow(10.0, db / 10.0); }

OperatingPoint make_operating_point(const ModeParams& mode, double delta, double target_G0, const PumpOptions& opts) {
    OperatingPoint op;
    op.flux = mode.flux;
    op.delta = delta;
    op.target_G0 = target_G0;
    op.n_p = np_for_gain(target_G0, mode.flux, delta, mode, opts);
    op.model = effective_params(mode.flux, delta, op.n_p, mode, opts);
    return op;
}

OperatingPoint operating_point_at(const ModeParams& mode, double delta, double n_p, const PumpOptions& opts) {
    OperatingPoint op;
    op.flux = mode.flux;
    op.delta = delta;
    op.n_p = n_p;
    op.model = effective_params(mode.flux, delta, n_p, mode, opts);
    op.target_G0 = small_signal_gain(op.model);
    return op;
}

double operating_gain(const OperatingPoint& op) { return small_signal_gain(op.model); }

// ============================================================================
// Stark shift
// ============================================================================

StarkCurve stark_shift_curve(const ModeParams& mode, double omega_d, const std::vector<double>& nbar_grid,
                             const CircuitSpec* oracle_circuit) {
    StarkCurve c;
    c.flux = mode.flux;
    c.omega_d = omega_d;
    if (std::abs(omega_d - mode.omega_a) < 3.0 * mode.kappa)
        c.warning = "drive within 3 kappa of the mode; the off-resonant Stark line does not apply";
    for (double n : nbar_grid) {
        StarkPoint p;
        p.nbar = n;
        p.shift = 24.0 * mode.g4_star * n;
        if (oracle_circuit) p.oracle_shift = n > 0.0 ? oracle_stark_shift(mode, *oracle_circuit, omega_d, n) : 0.0;
        c.points.push_back(p);
    }
    return c;
}

// ============================================================================
// Saturation
// ============================================================================

std::vector<double> input_power_for_gain(double G, const OperatingPoint& op, KerrForm form) {
    const EffectiveModel& m = op.model;
    const double G0 = small_signal_gain(m);
    if (!(G0 > 1.0) || !(G > 1.0)) throw NoSolution("gain and small-signal gain must exceed 1");
    if (m.K == 0.0 || std::abs(m.K) < 1e-12 * m.kappa) throw Unbounded("input power diverges at zero Kerr");
    const double d = (form == KerrForm::Dressed ? m.delta_b : op.delta) / m.kappa;
    const double r = (std::sqrt(G0) - std::sqrt(G)) / std::sqrt(G0 * G);
    const double rad = d * d + r * std::sqrt(d * d + 0.25);
    if (rad < 0.0) throw NoSolution("no real input power reaches the requested gain");
    const double pre = kHbar * m.omega_a * m.kappa * m.kappa / (3.0 * m.K * G);
    std::vector<double> out;
    for (double s : {1.0, -1.0}) {
        const double p = pre * (d + s * std::sqrt(rad));
        if (!std::isfinite(p)) throw Unbounded("input power overflow");
        if (p > 0.0) out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw NoSolution("no positive input power reaches the requested gain");
    return out;
}

double p1db(const OperatingPoint& op, KerrForm form) {
    const double G = small_signal_gain(op.model) / std::pow(10.0, 0.1);
    return input_power_for_gain(G, op, form).front();
}

namespace {

/// Exact inversion of the self-consistent gain equation on branch sigma.
/// Returns NaN where the branch does not exist.
double branch_power(double G, int sigma, const EffectiveModel& m) {
    const double k = m.kappa;
    const double R = 4.0 * m.g * m.g - k * k / 4.0 + 2.0 * k * m.g / std::sqrt(G - 1.0);
    if (R < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double deff = sigma * std::sqrt(R);
    return (m.delta_b - deff) * kHbar * m.omega_a * k / (3.0 * m.K * G);
}

int home_branch(const EffectiveModel& m) { return m.delta_b >= 0.0 ? 1 : -1; }

struct PathPoint {
    double G;
    int sigma;
    double P;
};

/// Sampled curve P(G), ordered along the curve. When the two branches join
/// at Delta_eff = 0 they form one path, otherwise two.
std::vector<std::vector<PathPoint>> sample_paths(const EffectiveModel& m, double G0, double G_max) {
    const int n = 8000;
    std::vector<double> grid;
    const double u0 = std::log(1e-14), u1 = std::log(G_max - 1.0);
    for (int i = 0; i <= n; ++i) grid.push_back(1.0 + std::exp(u0 + (u1 - u0) * i / n));
    grid.push_back(G0);
    const double k = m.kappa;
    const double den = k * k / 4.0 - 4.0 * m.g * m.g;
    std::optional<double> G_join;
    if (den > 0.0 && m.g > 0.0) {
        const double gj = 1.0 + std::pow(2.0 * k * m.g / den, 2);
        if (gj < G_max) {
            G_join = gj;
            grid.push_back(gj);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    auto sample = [&](int sigma) {
        std::vector<PathPoint> pts;
        for (double G : grid) {
            if (G_join && G > *G_join) break;
            const double P = G_join && G == *G_join ? m.delta_b * kHbar * m.omega_a * k / (3.0 * m.K * G)
                                                    : branch_power(G, sigma, m);
            if (std::isfinite(P)) pts.push_back({G, sigma, P});
        }
        return pts;
    };
    std::vector<PathPoint> plus = sample(1), minus = sample(-1);
    std::vector<std::vector<PathPoint>> paths;
    if (G_join) {
        std::vector<PathPoint> joined = plus;
        for (auto it = minus.rbegin(); it != minus.rend(); ++it)
            if (it->G < *G_join) joined.push_back(*it);
        paths.push_back(std::move(joined));
    } else {
        paths.push_back(std::move(plus));
        paths.push_back(std::move(minus));
    }
    return paths;
}

double bisect_gain(double lo, double hi, int sigma, double target, const EffectiveModel& m) {
    double flo = branch_power(lo, sigma, m) - target;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = branch_power(mid, sigma, m) - target;
        if (!std::isfinite(fm)) { hi = mid; continue; }
        if ((fm > 0.0) == (flo > 0.0)) { lo = mid; flo = fm; } else { hi = mid; }
        if (hi - lo < 1e-13 * hi) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> gains_at_power(const std::vector<std::vector<PathPoint>>& paths, double P,
                                   const EffectiveModel& m) {
    std::vector<double> out;
    for (const auto& path : paths) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const PathPoint& a = path[i];
            const PathPoint& b = path[i + 1];
            const double fa = a.P - P, fb = b.P - P;
            if (fa == 0.0) { out.push_back(a.G); continue; }
            if ((fa > 0.0) == (fb > 0.0)) continue;
            if (a.sigma == b.sigma) {
                out.push_back(bisect_gain(std::min(a.G, b.G), std::max(a.G, b.G), a.sigma, P, m));
            } else {
                const double t = fa / (fa - fb);
                out.push_back(a.G + t * (b.G - a.G));
            }
        }
    }
    std::sort(out.begin(), out.end());
    std::vector<double> unique;
    for (double g : out)
        if (unique.empty() || std::abs(g - unique.back()) > 1e-9 * g) unique.push_back(g);
    return unique;
}

} // namespace

double p1db_numeric(const OperatingPoint& op) {
    const EffectiveModel& m = op.model;
    const double G0 = small_signal_gain(m);
    const double G = G0 / std::pow(10.0, 0.1);
    if (!(G > 1.0)) throw NoSolution("no compression point below unit gain");
    if (m.K == 0.0 || std::abs(m.K) < 1e-12 * m.kappa) throw Unbounded("input power diverges at zero Kerr");
    const int home = home_branch(m);
    for (int sigma : {home, -home}) {
        const double P = branch_power(G, sigma, m);
        if (std::isfinite(P) && P > 0.0) return P;
    }
    throw NoSolution("no branch reaches the 1 dB compressed gain");
}

SaturationCurve saturation_curve(const OperatingPoint& op, const std::vector<double>& p_in_grid) {
    const EffectiveModel& m = op.model;
    SaturationCurve c;
    c.flux = op.flux;
    c.delta = op.delta;
    c.target_G0 = op.target_G0;
    c.n_p = op.n_p;
    c.G0 = small_signal_gain(m);
    if (m.K == 0.0) {
        for (double p : p_in_grid) c.points.push_back({p, {c.G0}, c.G0});
        c.followed_monotone_decreasing = true;
        return c;
    }
    const auto paths = sample_paths(m, c.G0, 1e4 * c.G0);

    double prev = c.G0;
    for (double p : p_in_grid) {
        SaturationPoint sp;
        sp.p_in = p;
        sp.gains = gains_at_power(paths, p, m);
        // Past the sampled range the gain is indistinguishable from 1.
        if (sp.gains.empty()) sp.gains.push_back(1.0);
        double best = sp.gains.front();
        for (double g : sp.gains)
            if (std::abs(std::log(g / prev)) < std::abs(std::log(best / prev))) best = g;
        sp.followed_gain = best;
        prev = best;
        if (sp.gains.size() >= 3) c.shark_fin = true;
        c.points.push_back(std::move(sp));
    }

    try {
        c.p1db = p1db_numeric(op);
    } catch (const Error&) {
    }

    // Fold of the branch leaving G0 in the direction of increasing power.
    const int home = home_branch(m);
    for (const auto& path : paths) {
        auto it = std::find_if(path.begin(), path.end(),
                               [&](const PathPoint& q) { return q.sigma == home && q.G == c.G0; });
        if (it == path.end()) continue;
        const long i0 = it - path.begin();
        for (int dir : {1, -1}) {
            long i = i0 + dir;
            if (i < 0 || i >= static_cast<long>(path.size()) || !(path[i].P > 0.0)) continue;
            while (i + dir >= 0 && i + dir < static_cast<long>(path.size()) && path[i + dir].P > path[i].P) i += dir;
            if (i + dir >= 0 && i + dir < static_cast<long>(path.size())) c.low_branch_termination = path[i].P;
        }
    }

    c.followed_monotone_decreasing = true;
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        const auto& a = c.points[i - 1];
        const auto& b = c.points[i];
        if (b.followed_gain > a.followed_gain * (1.0 + 1e-12)) c.followed_monotone_decreasing = false;
        const double jump = std::abs(to_dB(b.followed_gain * b.p_in / (a.followed_gain * a.p_in)));
        if (jump > c.max_output_jump_dB) {
            c.max_output_jump_dB = jump;
            c.jump_input_step_dB = to_dB(b.p_in / a.p_in);
        }
    }
    return c;
}

// ============================================================================
// Intermodulation and efficiency
// ============================================================================

ImdResult iip3(double G, double K, double kappa, double omega_a) {
    if (K == 0.0) throw Unbounded("IIP3 diverges at zero Kerr");
    if (!(G >= 1.0)) throw InvalidSpec("gain must be at least 1");
    ImdResult r;
    r.G = G;
    r.iip3 = kappa / std::abs(K) / std::pow(std::sqrt(G) + 1.0, 3) * kHbar * omega_a * kappa;
    r.iip3_dBm = to_dBm(r.iip3);
    return r;
}

double kerr_from_iip3(double iip3_watts, double G, double kappa, double omega_a) {
    if (!(iip3_watts > 0.0)) throw InvalidSpec("IIP3 must be positive");
    return kappa * kappa * kHbar * omega_a / (iip3_watts * std::pow(std::sqrt(G) + 1.0, 3));
}

double modeled_pump_power(const PumpPortModel& pump) {
    if (!pump.kappa_pump || !(*pump.kappa_pump > 0.0))
        throw MissingPumpCoupling("pump-port coupling kappa_pump is required to model pump power");
    const double det = pump.omega_p - pump.omega_a;
    return kHbar * pump.omega_p * pump.n_p * (det * det + pump.kappa * pump.kappa / 4.0) / *pump.kappa_pump;
}

double power_efficiency(double G, double p1db_watts, std::optional<double> pump_power,
                        const std::optional<PumpPortModel>& pump) {
    double pp = 0.0;
    if (pump_power) {
        pp = *pump_power;
    } else if (pump) {
        pp = modeled_pump_power(*pump);
    } else {
        throw MissingPumpCoupling("neither pump power nor pump-port coupling supplied");
    }
    if (!(pp > 0.0) || !(G > 0.0) || !(p1db_watts > 0.0)) throw InvalidSpec("efficiency inputs must be positive");
    return G * p1db_watts / pp;
}

double drive_photon_number(double p_in, double omega_d, double omega_a, double kappa) {
    const double det = omega_d - omega_a;
    return p_in * kappa / (kHbar * omega_d * (det * det + kappa * kappa / 4.0));
}

} // namespace spa
