#include "spa/snail.hpp"

#include <cmath>
#include <string>

#include "spa/constants.hpp"
#include "spa/errors.hpp"

namespace spa {

namespace {

// cos(x + n pi/2), exact for the quarter-turn shift.
double cos_shift(double x, int n) {
    switch (((n % 4) + 4) % 4) {
    case 0: return std::cos(x);
    case 1: return -std::sin(x);
    case 2: return -std::cos(x);
    default: return std::sin(x);
    }
}

struct Bracket {
    double lo;
    double hi;
};

bool brackets_minimum(const Bracket& b, double phi_ext, double alpha) {
    return reduced_derivative(1, b.lo, phi_ext, alpha) < 0.0 &&
           reduced_derivative(1, b.hi, phi_ext, alpha) > 0.0;
}

double newton_bisect(double x, Bracket b, double phi_ext, double alpha) {
    for (int it = 0; it < 200; ++it) {
        const double f = reduced_derivative(1, x, phi_ext, alpha);
        if (std::abs(f) < 1e-15) return x;
        if (f < 0.0) b.lo = x; else b.hi = x;
        const double df = reduced_derivative(2, x, phi_ext, alpha);
        double next = (df > 0.0) ? x - f / df : 0.5 * (b.lo + b.hi);
        if (!(next > b.lo && next < b.hi)) next = 0.5 * (b.lo + b.hi);
        if (std::abs(next - x) < 1e-16 * (1.0 + std::abs(x)) || b.hi - b.lo < 1e-15) return next;
        x = next;
    }
    return x;
}

} // namespace

double SnailSpec::E_J() const { return kPhi0 * kPhi0 / L_J; }

void SnailSpec::validate() const {
    if (!(L_J > 0.0)) throw InvalidSpec("L_J must be positive");
    if (M < 1) throw InvalidSpec("M must be at least 1");
    if (!allow_any_alpha && !(alpha > 0.0 && alpha < 1.0 / 3.0))
        throw InvalidSpec("alpha must lie in (0, 1/3), got " + std::to_string(alpha));
    if (allow_any_alpha && !(alpha > 0.0)) throw InvalidSpec("alpha must be positive");
}

double reduced_derivative(int order, double phi, double phi_ext, double alpha) {
    const double theta = (phi_ext - phi) / 3.0;
    const double scale = 3.0 * std::pow(-1.0 / 3.0, order);
    return -alpha * cos_shift(phi, order) - scale * cos_shift(theta, order);
}

double potential(double phi, double phi_ext, const SnailSpec& spec) {
    return spec.E_J() * reduced_derivative(0, phi, phi_ext, spec.alpha);
}

double potential_derivative(int order, double phi, double phi_ext, const SnailSpec& spec) {
    return spec.E_J() * reduced_derivative(order, phi, phi_ext, spec.alpha);
}

double find_minimum(double phi_ext, std::optional<double> prev, const SnailSpec& spec) {
    spec.validate();
    const double alpha = spec.alpha;
    const double start = prev.value_or(phi_ext);

    std::vector<double> centres{start};
    if (prev) {
        // Same well, shifted by the 6 pi period of the small-junction term.
        const double k = std::round((start - phi_ext) / (6.0 * kPi));
        centres.push_back(phi_ext + 6.0 * kPi * k);
    }
    for (double c : centres) {
        Bracket b{c - kPi, c + kPi};
        if (!brackets_minimum(b, phi_ext, alpha)) continue;
        const double x = newton_bisect(c, b, phi_ext, alpha);
        if (std::abs(reduced_derivative(1, x, phi_ext, alpha)) < 1e-12 &&
            reduced_derivative(2, x, phi_ext, alpha) > 0.0)
            return x;
    }
    throw NoMinimumFound("no potential minimum near phi = " + std::to_string(start) +
                         " for phi_ext = " + std::to_string(phi_ext));
}

TaylorCoeffs taylor_coeffs(double phi_ext, const SnailSpec& spec, std::optional<double> prev) {
    TaylorCoeffs t;
    t.phi_ext = phi_ext;
    t.phi_min = find_minimum(phi_ext, prev, spec);
    t.c2 = reduced_derivative(2, t.phi_min, phi_ext, spec.alpha);
    t.c3 = reduced_derivative(3, t.phi_min, phi_ext, spec.alpha);
    t.c4 = reduced_derivative(4, t.phi_min, phi_ext, spec.alpha);
    t.c5 = reduced_derivative(5, t.phi_min, phi_ext, spec.alpha);
    t.c6 = reduced_derivative(6, t.phi_min, phi_ext, spec.alpha);
    return t;
}

std::vector<TaylorCoeffs> taylor_sweep(const std::vector<double>& phi_ext, const SnailSpec& spec) {
    std::vector<TaylorCoeffs> out;
    out.reserve(phi_ext.size());
    std::optional<double> prev;
    for (double p : phi_ext) {
        out.push_back(taylor_coeffs(p, spec, prev));
        prev = out.back().phi_min;
    }
    return out;
}

} // namespace spa
