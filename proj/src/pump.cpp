#include "spa/pump.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "spa/constants.hpp"
#include "spa/errors.hpp"

namespace spa {

// ============================================================================
// Effective model
// ============================================================================

double stark_coefficient(const ModeParams& mode, const PumpOptions& opts) {
    return opts.stark_scale * (32.0 * mode.g4 / 3.0 - 28.0 * mode.g3 * mode.g3 / mode.omega_a);
}

double pump_photon_ceiling(const ModeParams& mode) {
    // Quadrature swing of a drive at 2 omega_a is 2 (1 - 1/3) sqrt(n_p).
    const double swing = mode.phase_per_quadrature * 4.0 / 3.0;
    return std::pow(kPi / swing, 2);
}

EffectiveModel effective_params(double flux, double delta, double n_p, const ModeParams& mode,
                                const PumpOptions& opts) {
    EffectiveModel m;
    m.flux = flux;
    m.delta = delta;
    m.n_p = n_p;
    m.delta_b = delta - stark_coefficient(mode, opts) * n_p;
    m.g = 2.0 * std::abs(mode.g3) * std::sqrt(n_p);
    m.K = opts.kerr_scale * 12.0 * mode.g4_star;
    m.kappa = mode.kappa;
    m.omega_a = mode.omega_a;
    return m;
}

double small_signal_gain(const EffectiveModel& m) {
    const double k2 = m.kappa * m.kappa;
    const double den = m.delta_b * m.delta_b + k2 / 4.0 - 4.0 * m.g * m.g;
    if (!(den > 0.0))
        throw AboveThreshold("pump above parametric threshold (n_p = " + std::to_string(m.n_p) + ")");
    return 1.0 + 4.0 * k2 * m.g * m.g / (den * den);
}

double gain(const EffectiveModel& m, double n_s, double n_i) {
    const double ds = m.delta_b - m.K * (n_s + 2.0 * n_i);
    const double di = m.delta_b - m.K * (n_i + 2.0 * n_s);
    const double k2 = m.kappa * m.kappa;
    const double a = k2 / 4.0 + di * ds - 4.0 * m.g * m.g;
    const double b = (di - ds);
    const double num = std::pow(2.0 * m.g * m.kappa, 2);
    return 1.0 + num / (a * a + k2 / 4.0 * b * b);
}

namespace {

double threshold_residual(double n, double delta, double S, double g3, double kappa) {
    const double db = delta - S * n;
    return (kappa * kappa + 4.0 * db * db) / (64.0 * g3 * g3) - n;
}

double bisect_residual(double lo, double hi, double delta, double S, double g3, double kappa) {
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (threshold_residual(mid, delta, S, g3, kappa) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> lowest_threshold(double delta, const ModeParams& mode, const PumpOptions& opts) {
    const double S = stark_coefficient(mode, opts);
    const double g3 = mode.g3;
    const double kappa = mode.kappa;
    double n = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const double r = threshold_residual(n, delta, S, g3, kappa);
        const double next = n + 0.5 * r;
        if (!std::isfinite(next) || next < 0.0) break;
        if (std::abs(next - n) <= 1e-12 * std::abs(next)) {
            // The damped map can settle on an upper root; accept only a first crossing.
            const double below = next * (1.0 - 1e-9);
            if (threshold_residual(below, delta, S, g3, kappa) > 0.0) return next;
            break;
        }
        n = next;
    }
    // Fallback: geometric scan for the first sign change, then bisection.
    double lo = 0.0;
    double hi = std::max(threshold_residual(0.0, delta, S, g3, kappa), 1.0);
    for (int it = 0; it < 2000; ++it) {
        if (threshold_residual(hi, delta, S, g3, kappa) <= 0.0) return bisect_residual(lo, hi, delta, S, g3, kappa);
        lo = hi;
        hi *= 1.02;
        if (hi > 1e15) break;
    }
    return std::nullopt;
}

} // namespace

double threshold_np(double flux, double delta, const ModeParams& mode, const PumpOptions& opts) {
    (void)flux;
    if (mode.g3 == 0.0) throw NoConvergence("g3 vanishes: no parametric threshold", 0.0);
    auto n = lowest_threshold(delta, mode, opts);
    if (!n) throw NoConvergence("no self-consistent parametric threshold at this detuning",
                                std::numeric_limits<double>::infinity());
    return *n;
}

double np_for_gain(double target_G0, double flux, double delta, const ModeParams& mode,
                   const PumpOptions& opts) {
    if (target_G0 < 1.0) throw GainUnreachable("target gain below unity");
    if (target_G0 == 1.0) return 0.0;
    const double np_max = opts.np_max.value_or(pump_photon_ceiling(mode));
    std::optional<double> n_th;
    if (mode.g3 != 0.0) n_th = lowest_threshold(delta, mode, opts);
    const bool capped_by_threshold = n_th && *n_th <= np_max;
    const double n_hi = capped_by_threshold ? *n_th : np_max;

    auto excess = [&](double n) {
        try {
            return small_signal_gain(effective_params(flux, delta, n, mode, opts)) - target_G0;
        } catch (const AboveThreshold&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const int N = 4000;
    double prev_n = 0.0;
    for (int k = 1; k <= N; ++k) {
        const double n = n_hi * k / N;
        const double h = (k == N && capped_by_threshold) ? std::numeric_limits<double>::infinity() : excess(n);
        if (h >= 0.0) {
            double lo = prev_n;
            double hi = n;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (excess(mid) >= 0.0) hi = mid; else lo = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_n = n;
    }
    throw GainUnreachable("gain target not reachable below threshold within the pump photon ceiling");
}

// ============================================================================
// Harmonic balance
// ============================================================================

HbContext hb_context(const EffectiveModel& m, const ModeParams& mode) {
    HbContext c;
    c.delta_b = m.delta_b;
    c.g3 = mode.g3;
    c.K = m.K;
    c.kappa = m.kappa;
    return c;
}

std::array<cplx, 3> hb_residual(const HbState& s, const HbContext& ctx) {
    const cplx I(0.0, 1.0);
    const double k = ctx.kappa;
    const cplx gc = 4.0 * ctx.g3 * s.alpha_p;
    const double ns = std::norm(s.alpha_s);
    const double ni = std::norm(s.alpha_i);
    const double nh = std::norm(s.alpha_h);
    const cplx coupling = gc + ctx.K * s.alpha_h * s.alpha_h;
    std::array<cplx, 3> r;
    r[0] = (s.omega + ctx.delta_b + I * k / 2.0) * s.alpha_s - s.u_s - coupling * std::conj(s.alpha_i) -
           ctx.K * (ns + 2.0 * ni + 2.0 * nh) * s.alpha_s;
    r[1] = (-s.omega + ctx.delta_b + I * k / 2.0) * s.alpha_i - s.u_i - coupling * std::conj(s.alpha_s) -
           ctx.K * (ni + 2.0 * ns + 2.0 * nh) * s.alpha_i;
    r[2] = (ctx.delta_b + I * k / 2.0) * s.alpha_h - s.u_h - gc * std::conj(s.alpha_h) -
           ctx.K * (nh + 2.0 * ns + 2.0 * ni) * s.alpha_h;
    for (auto& v : r) v /= k;
    return r;
}

namespace {

double max_abs(const std::array<cplx, 3>& r) {
    return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
}

double sum_sq(const std::array<cplx, 3>& r) {
    return std::norm(r[0]) + std::norm(r[1]) + std::norm(r[2]);
}

// Wirtinger derivatives A = dF/dz, B = dF/dz* of the kappa-scaled residuals.
void hb_jacobian(const HbState& s, const HbContext& ctx, Eigen::Matrix<double, 6, 6>& J) {
    const cplx I(0.0, 1.0);
    const double k = ctx.kappa;
    const double K = ctx.K;
    const cplx gc = 4.0 * ctx.g3 * s.alpha_p;
    const cplx as = s.alpha_s, ai = s.alpha_i, ah = s.alpha_h;
    const double ns = std::norm(as), ni = std::norm(ai), nh = std::norm(ah);
    const cplx C = gc + K * ah * ah;

    cplx A[3][3], B[3][3];
    A[0][0] = (s.omega + ctx.delta_b + I * k / 2.0) - K * (2.0 * ns + 2.0 * ni + 2.0 * nh);
    B[0][0] = -K * as * as;
    A[0][1] = -2.0 * K * std::conj(ai) * as;
    B[0][1] = -C - 2.0 * K * ai * as;
    A[0][2] = -2.0 * K * std::conj(ah) * as - 2.0 * K * ah * std::conj(ai);
    B[0][2] = -2.0 * K * ah * as;

    A[1][1] = (-s.omega + ctx.delta_b + I * k / 2.0) - K * (2.0 * ni + 2.0 * ns + 2.0 * nh);
    B[1][1] = -K * ai * ai;
    A[1][0] = -2.0 * K * std::conj(as) * ai;
    B[1][0] = -C - 2.0 * K * as * ai;
    A[1][2] = -2.0 * K * std::conj(ah) * ai - 2.0 * K * ah * std::conj(as);
    B[1][2] = -2.0 * K * ah * ai;

    A[2][2] = (ctx.delta_b + I * k / 2.0) - K * (2.0 * nh + 2.0 * ns + 2.0 * ni);
    B[2][2] = -gc - K * ah * ah;
    A[2][0] = -2.0 * K * std::conj(as) * ah;
    B[2][0] = -2.0 * K * as * ah;
    A[2][1] = -2.0 * K * std::conj(ai) * ah;
    B[2][1] = -2.0 * K * ai * ah;

    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const cplx dx = (A[r][c] + B[r][c]) / k;
            const cplx dy = I * (A[r][c] - B[r][c]) / k;
            J(2 * r, 2 * c) = dx.real();
            J(2 * r + 1, 2 * c) = dx.imag();
            J(2 * r, 2 * c + 1) = dy.real();
            J(2 * r + 1, 2 * c + 1) = dy.imag();
        }
    }
}

HbState apply_step(const HbState& s, const Eigen::Matrix<double, 6, 1>& d, double lambda) {
    HbState t = s;
    t.alpha_s += lambda * cplx(d(0), d(1));
    t.alpha_i += lambda * cplx(d(2), d(3));
    t.alpha_h += lambda * cplx(d(4), d(5));
    return t;
}

// Signal/idler response with alpha_h fixed and Kerr terms apart from alpha_h dropped.
void linear_signal_guess(HbState& s, const HbContext& ctx) {
    const cplx I(0.0, 1.0);
    const double nh = std::norm(s.alpha_h);
    const cplx gc = 4.0 * ctx.g3 * s.alpha_p;
    const cplx C = gc + ctx.K * s.alpha_h * s.alpha_h;
    const double db = ctx.delta_b - 2.0 * ctx.K * nh;
    // (w + db + i k/2) a_s - C conj(a_i) = u_s ; (-w + db - i k/2) conj(a_i) - conj(C) a_s = conj(u_i)
    const cplx a11 = s.omega + db + I * ctx.kappa / 2.0;
    const cplx a12 = -C;
    const cplx a21 = -std::conj(C);
    const cplx a22 = -s.omega + db - I * ctx.kappa / 2.0;
    const cplx det = a11 * a22 - a12 * a21;
    const cplx b1 = s.u_s, b2 = std::conj(s.u_i);
    s.alpha_s = (b1 * a22 - a12 * b2) / det;
    s.alpha_i = std::conj((a11 * b2 - a21 * b1) / det);
}

} // namespace

HbSolution newton_harmonic_balance(const HbState& guess, const HbContext& ctx, int max_iter) {
    HbSolution sol;
    sol.state = guess;
    auto r = hb_residual(sol.state, ctx);
    Eigen::Matrix<double, 6, 6> J;
    Eigen::Matrix<double, 6, 1> F;
    for (int it = 0; it < max_iter; ++it) {
        sol.iterations = it;
        if (max_abs(r) < 1e-10) break;
        hb_jacobian(sol.state, ctx, J);
        for (int j = 0; j < 3; ++j) {
            F(2 * j) = r[j].real();
            F(2 * j + 1) = r[j].imag();
        }
        const Eigen::Matrix<double, 6, 1> d = J.fullPivLu().solve(-F);
        const double f0 = sum_sq(r);
        double lambda = 1.0;
        HbState trial = apply_step(sol.state, d, lambda);
        auto rt = hb_residual(trial, ctx);
        for (int h = 0; h < 40 && !(sum_sq(rt) < f0); ++h) {
            lambda *= 0.5;
            trial = apply_step(sol.state, d, lambda);
            rt = hb_residual(trial, ctx);
        }
        if (!(sum_sq(rt) < f0)) break;
        sol.state = trial;
        r = rt;
    }
    sol.residual = max_abs(r);
    sol.converged = sol.residual < 1e-10;
    if (!sol.converged) sol.error = "NoConvergence";
    return sol;
}

HbResult solve_harmonic_balance(const HbState& state0, const HbContext& ctx) {
    std::vector<std::pair<std::string, HbState>> guesses;
    HbState zero = state0;
    zero.alpha_h = state0.u_h == cplx{} ? cplx{} : state0.alpha_h;
    linear_signal_guess(zero, ctx);
    guesses.emplace_back("trivial", zero);

    EffectiveModel em;
    em.delta_b = ctx.delta_b;
    em.g = 2.0 * std::abs(ctx.g3) * std::abs(state0.alpha_p);
    em.K = ctx.K;
    em.kappa = ctx.kappa;
    if (std::abs(ctx.K) >= 1e-6 * ctx.kappa) {
        const cplx gc = 4.0 * ctx.g3 * state0.alpha_p;
        for (const auto& pd : period_doubling_amplitudes(em)) {
            const double th = period_doubling_phase(em, pd.n_h, gc);
            for (int flip = 0; flip < 2; ++flip) {
                HbState g = state0;
                g.alpha_h = std::polar(std::sqrt(pd.n_h), th + flip * kPi);
                linear_signal_guess(g, ctx);
                guesses.emplace_back(std::string(pd.sign > 0 ? "plus" : "minus") + (flip ? "_shifted" : ""), g);
            }
        }
    }

    HbResult out;
    for (const auto& [name, g] : guesses) {
        HbSolution s = newton_harmonic_balance(g, ctx);
        s.start = name;
        out.starts.push_back(s);
        if (!s.converged) continue;
        bool dup = false;
        for (const auto& e : out.solutions) {
            const double d = std::abs(e.state.alpha_s - s.state.alpha_s) + std::abs(e.state.alpha_i - s.state.alpha_i) +
                             std::abs(e.state.alpha_h - s.state.alpha_h);
            const double scale = 1.0 + std::abs(s.state.alpha_h) + std::abs(s.state.alpha_s);
            if (d < 1e-7 * scale) { dup = true; break; }
        }
        if (!dup) out.solutions.push_back(s);
    }
    return out;
}

double hb_signal_gain(const HbState& s, double kappa) {
    const cplx I(0.0, 1.0);
    return std::norm(1.0 - I * kappa * s.alpha_s / s.u_s);
}

// ============================================================================
// Period doubling and stability
// ============================================================================

std::vector<PdAmplitude> period_doubling_amplitudes(const EffectiveModel& m) {
    if (std::abs(m.K) < 1e-6 * m.kappa)
        throw DegenerateKerr("|K| below 1e-6 kappa: period-doubling amplitude ill-conditioned");
    std::vector<PdAmplitude> out;
    const double s2 = 4.0 * m.g * m.g - m.kappa * m.kappa / 4.0;
    if (s2 < 0.0) return out;
    const double s = std::sqrt(s2);
    for (int sign : {-1, 1}) {
        if (sign > 0 && s == 0.0) break;
        const double n = (m.delta_b + sign * s) / m.K;
        if (n >= 0.0) out.push_back({n, sign});
    }
    return out;
}

double period_doubling_phase(const EffectiveModel& m, double n_h, cplx coupling) {
    const cplx I(0.0, 1.0);
    return 0.5 * std::arg(coupling / (m.delta_b - m.K * n_h + I * m.kappa / 2.0));
}

std::string region_name(Region r) {
    switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    default: return "III";
    }
}

Region classify_stability(double delta, double n_p, double flux, const ModeParams& mode, const PumpOptions& opts) {
    const EffectiveModel m = effective_params(flux, delta, n_p, mode, opts);
    const double drive = 4.0 * m.g * m.g;
    const double k2 = m.kappa * m.kappa / 4.0;
    if (drive - k2 > m.delta_b * m.delta_b) return Region::II;
    if (m.delta_b * m.K > 0.0 && drive > k2) return Region::III;
    return Region::I;
}

std::vector<Polyline> stability_boundaries(const ModeParams& mode, const std::vector<double>& delta_grid,
                                           const PumpOptions& opts) {
    Polyline lower{"threshold_lower", {}}, upper{"threshold_upper", {}}, i3{"I_III", {}};
    const double S = stark_coefficient(mode, opts);
    const double a16 = 16.0 * mode.g3 * mode.g3;
    const double k2 = mode.kappa * mode.kappa / 4.0;
    const double K = opts.kerr_scale * 12.0 * mode.g4_star;
    if (a16 == 0.0) return {lower, upper, i3};
    for (double d : delta_grid) {
        // S^2 n^2 - (2 d S + a16) n + d^2 + k2 = 0
        const double A = S * S;
        const double B = -(2.0 * d * S + a16);
        const double C = d * d + k2;
        if (A == 0.0) {
            lower.points.emplace_back(d, C / -B);
        } else {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
                const double r1 = q / A, r2 = C / q;
                lower.points.emplace_back(d, std::min(r1, r2));
                upper.points.emplace_back(d, std::max(r1, r2));
            }
        }
        const double n3 = k2 / a16;
        if ((d - S * n3) * K > 0.0) i3.points.emplace_back(d, n3);
    }
    return {lower, upper, i3};
}

StabilityClass classify_with_boundaries(double delta, double n_p, double flux, const ModeParams& mode,
                                        const std::vector<double>& delta_grid, const PumpOptions& opts) {
    StabilityClass c;
    c.region = classify_stability(delta, n_p, flux, mode, opts);
    c.boundaries = stability_boundaries(mode, delta_grid, opts);
    return c;
}

} // namespace spa
