#include "spa/mode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spa/constants.hpp"
#include "spa/errors.hpp"

namespace spa {

// ============================================================================
// KappaModel
// ============================================================================

KappaModel KappaModel::constant(double kappa) {
    KappaModel k;
    k.table_ = {{0.0, kappa}};
    k.validate();
    return k;
}

KappaModel KappaModel::table(std::vector<std::pair<double, double>> points) {
    KappaModel k;
    k.table_ = std::move(points);
    k.validate();
    return k;
}

void KappaModel::validate() const {
    if (table_.empty()) throw InvalidSpec("kappa table is empty");
    for (std::size_t i = 0; i < table_.size(); ++i) {
        if (!(table_[i].second > 0.0)) throw InvalidSpec("kappa must be positive");
        if (i > 0 && !(table_[i].first > table_[i - 1].first))
            throw InvalidSpec("kappa table flux values must be strictly increasing");
    }
}

double KappaModel::at(double flux) const {
    if (table_.size() == 1 || flux <= table_.front().first) return table_.front().second;
    if (flux >= table_.back().first) return table_.back().second;
    auto hi = std::upper_bound(table_.begin(), table_.end(), flux,
                               [](double f, const auto& p) { return f < p.first; });
    auto lo = hi - 1;
    const double t = (flux - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

void CircuitSpec::validate() const {
    if (!(Z_c > 0.0)) throw InvalidSpec("Z_c must be positive");
    if (!(omega0 > 0.0)) throw InvalidSpec("omega0 must be positive");
    kappa.validate();
    snail.validate();
}

double ModeParams::impedance_ratio() const { return Z1 / kRQ; }

CircuitSpec default_circuit() { return CircuitSpec{}; }

// ============================================================================
// Dispersion relation
// ============================================================================

double dispersion_residual(double omega, double L_s, const CircuitSpec& c) {
    return 2.0 * c.Z_c / (c.snail.M * L_s) - omega * std::tan(kPi * omega / (2.0 * c.omega0));
}

namespace {

double dispersion_slope(double omega, const CircuitSpec& c) {
    const double k = kPi / (2.0 * c.omega0);
    const double t = std::tan(k * omega);
    return -t - omega * k * (1.0 + t * t);
}

double root_on_branch(double lo, double hi, double L_s, const CircuitSpec& c) {
    double flo = dispersion_residual(lo, L_s, c);
    const double fhi = dispersion_residual(hi, L_s, c);
    if (!(flo > 0.0 && fhi < 0.0))
        throw RootNotBracketed("dispersion relation has no root in the bracket [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "] rad/s");
    while ((hi - lo) > 1e-3 * hi) {
        const double mid = 0.5 * (lo + hi);
        const double fm = dispersion_residual(mid, L_s, c);
        if (fm > 0.0) { lo = mid; flo = fm; } else { hi = mid; }
    }
    const double scale = 2.0 * c.Z_c / (c.snail.M * L_s);
    double w = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        const double f = dispersion_residual(w, L_s, c);
        if (std::abs(f) <= 1e-13 * scale) break;
        if (f > 0.0) lo = w; else hi = w;
        double next = w - f / dispersion_slope(w, c);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == w) break;
        w = next;
    }
    if (std::abs(dispersion_residual(w, L_s, c)) > 1e-10 * scale)
        throw RootNotBracketed("dispersion root did not converge");
    return w;
}

} // namespace

double mode_frequency_for_inductance(double L_s, const CircuitSpec& c) {
    if (!(L_s > 0.0)) throw RootNotBracketed("SNAIL inductance must be positive");
    const double d = 1e-6 * c.omega0;
    return root_on_branch(d, c.omega0 - d, L_s, c);
}

std::vector<double> dispersion_roots(double L_s, const CircuitSpec& c, int count) {
    std::vector<double> roots;
    const double d = 1e-6 * c.omega0;
    for (int n = 0; n < count; ++n) {
        const double lo = 2.0 * n * c.omega0 + d;
        const double hi = (2.0 * n + 1.0) * c.omega0 - d;
        roots.push_back(root_on_branch(lo, hi, L_s, c));
    }
    return roots;
}

double mode_frequency(double flux, const CircuitSpec& c) {
    const TaylorCoeffs t = taylor_coeffs(kTwoPi * flux, c.snail);
    return mode_frequency_for_inductance(c.snail.L_J / t.c2, c);
}

// ============================================================================
// Mode parameters
// ============================================================================

ModeLC mode_lc(double omega_a, const CircuitSpec& c) {
    const double q = kPi * omega_a / c.omega0;
    const double bracket = q + std::sin(q);
    ModeLC lc;
    lc.C1 = bracket / (2.0 * omega_a * c.Z_c);
    lc.L1 = 2.0 * c.Z_c / (omega_a * bracket);
    lc.Z1 = std::sqrt(lc.L1 / lc.C1);
    lc.phi_zpf = std::sqrt(kHbar * lc.Z1 / 2.0);
    return lc;
}

double g3_coefficient(const ModeParams& m, const CircuitSpec& c) {
    const double q = kPi * m.omega_a / c.omega0;
    const double M = c.snail.M;
    const double ratio = std::pow(std::cos(q / 2.0), 2) / (q + std::sin(q));
    return 4.0 * c.Z_c * m.coeffs.c3 / (3.0 * M * M * c.snail.L_J) * std::pow(ratio, 1.5) *
           std::sqrt(c.Z_c / kRQ);
}

QuarticCoeffs g4_star_coefficient(const ModeParams& m, const CircuitSpec& c) {
    const double q = kPi * m.omega_a / c.omega0;
    const double M = c.snail.M;
    const double c2 = m.coeffs.c2;
    const double c3 = m.coeffs.c3;
    const double x = m.omega_a * M * m.L_s / (2.0 * c.Z_c);
    const double prefactor = m.omega_a * std::pow(std::sin(q), 2) /
                             (12.0 * c2 * M * M * std::tan(q / 2.0) * std::pow(q + std::sin(q), 2)) *
                             (c.Z_c / kRQ);
    const double bracket = m.coeffs.c4 - c3 * c3 / c2 * (3.0 + 5.0 * x * x) / (1.0 + 3.0 * x * x);
    QuarticCoeffs out;
    out.g4_star = prefactor * bracket;
    out.g4 = out.g4_star + 5.0 * m.g3 * m.g3 / m.omega_a;
    return out;
}

double gk_blackbox(int k, const ModeParams& m, const CircuitSpec& c) {
    double ck = 0.0;
    switch (k) {
    case 2: ck = m.coeffs.c2; break;
    case 3: ck = m.coeffs.c3; break;
    case 4: ck = m.coeffs.c4; break;
    case 5: ck = m.coeffs.c5; break;
    case 6: ck = m.coeffs.c6; break;
    default: throw InvalidSpec("black-box coefficient order must be 2..6");
    }
    const double M = c.snail.M;
    return M * c.snail.E_J() * ck / (std::tgamma(k + 1.0) * kHbar) *
           std::pow(m.phase_per_quadrature, k);
}

ModeParams solve_mode(double flux, const CircuitSpec& c, std::optional<double> prev_phi_min) {
    c.validate();
    ModeParams m;
    m.flux = flux;
    m.coeffs = taylor_coeffs(kTwoPi * flux, c.snail, prev_phi_min);
    m.L_s = c.snail.L_J / m.coeffs.c2;
    m.omega_a = mode_frequency_for_inductance(m.L_s, c);
    const ModeLC lc = mode_lc(m.omega_a, c);
    m.C1 = lc.C1;
    m.L1 = lc.L1;
    m.Z1 = lc.Z1;
    m.phi_zpf = lc.phi_zpf;
    m.phase_per_quadrature = 2.0 * std::cos(kPi * m.omega_a / (2.0 * c.omega0)) * m.phi_zpf /
                             (c.snail.M * kPhi0);
    m.g3 = g3_coefficient(m, c);
    const QuarticCoeffs q4 = g4_star_coefficient(m, c);
    m.g4_star = q4.g4_star;
    m.g4 = q4.g4;
    m.kappa = c.kappa.at(flux);
    return m;
}

std::vector<ModeParams> solve_mode_sweep(const std::vector<double>& flux, const CircuitSpec& c) {
    std::vector<ModeParams> out;
    out.reserve(flux.size());
    std::optional<double> prev;
    for (double f : flux) {
        out.push_back(solve_mode(f, c, prev));
        prev = out.back().coeffs.phi_min;
    }
    return out;
}

} // namespace spa
