#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "spa/constants.hpp"
#include "spa/errors.hpp"
#include "spa/metrics.hpp"
#include "spa/mode.hpp"
#include "spa/pump.hpp"

using namespace spa;

namespace {

const CircuitSpec& circuit() {
    static const CircuitSpec c = default_circuit();
    return c;
}

const ModeParams& mode_at(double flux) {
    static std::vector<std::pair<double, ModeParams>> cache;
    for (const auto& [f, m] : cache)
        if (f == flux) return m;
    cache.emplace_back(flux, solve_mode(flux, circuit()));
    return cache.back().second;
}

double mhz(double f) { return kTwoPi * f * 1e6; }

std::vector<double> dbm_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(from_dBm(lo + (hi - lo) * i / (n - 1)));
    return g;
}

} // namespace

TEST_CASE("unit conversions") {
    CHECK(to_dBm(1e-3) == doctest::Approx(0.0));
    CHECK(from_dBm(-100.0) == doctest::Approx(1e-13).epsilon(1e-12));
    CHECK(to_dB(100.0) == doctest::Approx(20.0));
    CHECK(from_dB(to_dB(37.0)) == doctest::Approx(37.0).epsilon(1e-14));
}

TEST_CASE("input power for a gain: branch counts by detuning side") {
    const ModeParams& m = mode_at(0.30);
    REQUIRE(m.g4_star < 0.0);
    SUBCASE("positive detuning: one solution below G0, none above") {
        const OperatingPoint op = make_operating_point(m, mhz(40), 100.0);
        REQUIRE(op.model.delta_b > 0.0);
        for (double G : {1.5, 10.0, 50.0, 99.0}) CHECK(input_power_for_gain(G, op).size() == 1);
        for (double G : {101.0, 200.0, 1e4}) CHECK_THROWS_AS(input_power_for_gain(G, op), NoSolution);
    }
    SUBCASE("negative detuning: two solutions above G0") {
        const OperatingPoint op = make_operating_point(m, mhz(-150), 100.0);
        REQUIRE(op.model.delta_b < 0.0);
        const auto p = input_power_for_gain(110.0, op);
        CHECK(p.size() == 2);
        for (double x : p) CHECK(x > 0.0);
    }
    SUBCASE("zero Kerr is unbounded") {
        PumpOptions o;
        o.kerr_scale = 0.0;
        const OperatingPoint op = make_operating_point(m, 0.0, 100.0, o);
        CHECK_THROWS_AS(input_power_for_gain(50.0, op), Unbounded);
        CHECK_THROWS_AS(p1db(op), Unbounded);
    }
    SUBCASE("power diverges as K shrinks") {
        double prev = 0.0;
        for (double s : {1.0, 1e-2, 1e-4, 1e-6}) {
            PumpOptions o;
            o.kerr_scale = s;
            const double p = p1db(make_operating_point(m, 0.0, 100.0, o));
            CHECK(p > prev);
            prev = p;
        }
        CHECK(prev > 1e5 * p1db(make_operating_point(m, 0.0, 100.0)));
    }
}

TEST_CASE("P1dB") {
    SUBCASE("grows toward negative detuning at flux 0.30") {
        const ModeParams& m = mode_at(0.30);
        double prev = 0.0;
        for (double d : {0.0, -25.0, -50.0, -75.0, -100.0}) {
            const double p = p1db(make_operating_point(m, mhz(d), 100.0));
            CHECK(p > prev);
            prev = p;
        }
    }
    SUBCASE("no compression point as G0 approaches 1") {
        const ModeParams& m = mode_at(0.30);
        const OperatingPoint op = operating_point_at(m, 0.0, 1e-6);
        CHECK(operating_gain(op) < 1.0001);
        CHECK_THROWS_AS(p1db(op), NoSolution);
        CHECK_THROWS_AS(p1db_numeric(op), NoSolution);
    }
    SUBCASE("numeric P1dB sits on the 1 dB compressed gain") {
        const OperatingPoint op = make_operating_point(mode_at(0.25), mhz(-60), 100.0);
        const double p = p1db_numeric(op);
        const SaturationCurve c = saturation_curve(op, {p});
        bool hit = false;
        for (double g : c.points[0].gains) hit |= std::abs(g - 100.0 / std::pow(10.0, 0.1)) < 1e-6 * g;
        CHECK(hit);
    }
}

TEST_CASE("numeric P1dB agrees with a photon-number traced saturation curve") {
    for (double f : {0.19, 0.25, 0.30, 0.34}) {
        for (double d : {-200.0, -150.0, -100.0, -50.0, -30.0, 0.0, 40.0}) {
            OperatingPoint op;
            try { op = make_operating_point(mode_at(f), mhz(d), 100.0); } catch (const GainUnreachable&) { continue; }
            const EffectiveModel& e = op.model;
            const double ref = oracle::saturation_p1db(e.delta_b, e.g, e.K, e.kappa, e.omega_a);
            REQUIRE(std::isfinite(ref));
            CHECK_MESSAGE(p1db_numeric(op) == doctest::Approx(ref).epsilon(1e-6), "flux " << f << " delta " << d);
        }
    }
}

TEST_CASE("closed-form P1dB matches the numeric crossing at flux 0.25, zero detuning" * doctest::may_fail()) {
    const OperatingPoint op = make_operating_point(mode_at(0.25), 0.0, 100.0);
    CHECK(std::abs(to_dBm(p1db(op)) - to_dBm(p1db_numeric(op))) < 0.1);
}

TEST_CASE("saturation curves") {
    const auto grid = dbm_grid(-150.0, -70.0, 321);
    SUBCASE("tiny input returns exactly G0") {
        for (double d : {-150.0, -50.0, 0.0, 50.0}) {
            const OperatingPoint op = make_operating_point(mode_at(0.30), mhz(d), 100.0);
            const SaturationCurve c = saturation_curve(op, {from_dBm(-200.0)});
            bool has = false;
            for (double g : c.points[0].gains) has |= std::abs(g - c.G0) < 1e-6 * c.G0;
            CHECK(has);
            CHECK(c.points[0].followed_gain == doctest::Approx(c.G0).epsilon(1e-6));
        }
    }
    SUBCASE("positive detuning is single valued and monotone decreasing") {
        for (double d : {10.0, 40.0, 80.0}) {
            double np;
            try { np = np_for_gain(100.0, 0.30, mhz(d), mode_at(0.30)); } catch (const GainUnreachable&) { continue; }
            (void)np;
            const SaturationCurve c = saturation_curve(make_operating_point(mode_at(0.30), mhz(d), 100.0), grid);
            CHECK(!c.shark_fin);
            CHECK(c.followed_monotone_decreasing);
            for (const auto& p : c.points) CHECK(p.gains.size() == 1);
        }
    }
    SUBCASE("flux 0.30, -150 MHz: three-branch interval and a large output jump") {
        const SaturationCurve c = saturation_curve(make_operating_point(mode_at(0.30), mhz(-150), 100.0), grid);
        CHECK(c.shark_fin);
        int three = 0;
        for (const auto& p : c.points) three += p.gains.size() == 3;
        CHECK(three > 0);
        for (const auto& p : c.points) CHECK(p.gains.size() <= 3);
        CHECK(c.max_output_jump_dB > 10.0);
        CHECK(c.jump_input_step_dB < 1.0);
        REQUIRE(c.low_branch_termination.has_value());
    }
    SUBCASE("low branch ends where the middle branch meets it") {
        const OperatingPoint op = make_operating_point(mode_at(0.30), mhz(-150), 100.0);
        const SaturationCurve c = saturation_curve(op, grid);
        REQUIRE(c.low_branch_termination.has_value());
        const double P = *c.low_branch_termination;
        const SaturationCurve near = saturation_curve(op, {P * (1.0 - 1e-3), P * (1.0 + 1e-3)});
        const auto& below = near.points[0].gains;
        const auto& above = near.points[1].gains;
        CHECK(below.size() == above.size() + 2);
        // The two merging gains approach each other just below the fold.
        double closest = INFINITY;
        for (std::size_t i = 1; i < below.size(); ++i) closest = std::min(closest, std::log(below[i] / below[i - 1]));
        CHECK(closest < 0.1);
    }
    SUBCASE("shark fins only on the negative side") {
        for (double f : {0.19, 0.25, 0.30, 0.34}) {
            for (int i = -20; i <= 20; ++i) {
                const double d = 10.0 * i;
                OperatingPoint op;
                try { op = make_operating_point(mode_at(f), mhz(d), 100.0); } catch (const GainUnreachable&) { continue; }
                const SaturationCurve c = saturation_curve(op, grid);
                if (d > 0.0 && op.model.K < 0.0) CHECK_MESSAGE(!c.shark_fin, "flux " << f << " delta " << d);
            }
        }
    }
}

TEST_CASE("IIP3") {
    const double k = mhz(200), K = -mhz(0.03), w = kTwoPi * 7e9;
    CHECK(iip3(1.0, K, k, w).iip3 * std::abs(K) == doctest::Approx(kHbar * w * k * k / 8.0).epsilon(1e-15));
    CHECK(iip3(100.0, K, k, w).iip3 / iip3(1.0, K, k, w).iip3 == doctest::Approx(std::pow(2.0 / 11.0, 3)).epsilon(1e-12));
    for (double s : {0.5, 2.0, 3.7})
        CHECK(iip3(30.0, K, s * k, w).iip3 == doctest::Approx(s * s * iip3(30.0, K, k, w).iip3).epsilon(1e-13));
    CHECK(iip3(30.0, K, k, w).iip3 > 0.0);
    CHECK(iip3(30.0, K, k, w).iip3_dBm == doctest::Approx(to_dBm(iip3(30.0, K, k, w).iip3)));
    CHECK_THROWS_AS(iip3(30.0, 0.0, k, w), Unbounded);
    CHECK(kerr_from_iip3(iip3(30.0, K, k, w).iip3, 30.0, k, w) == doctest::Approx(std::abs(K)).epsilon(1e-13));
    const ImdResult r = iip3(1.0, K, k, w);
    CHECK(r.delta1 == doctest::Approx(kTwoPi * 500e3));
    CHECK(r.delta2 == doctest::Approx(kTwoPi * 100e3));
}

TEST_CASE("pump-off IIP3 peaks at the g4* zero crossing") {
    std::vector<double> flux;
    for (int i = 0; i <= 200; ++i) flux.push_back(0.30 + 0.0009 * i);
    const auto modes = solve_mode_sweep(flux, circuit());
    double best = -INFINITY, where = 0.0, zero = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double v = iip3(1.0, 12.0 * modes[i].g4_star, modes[i].kappa, modes[i].omega_a).iip3;
        if (v > best) { best = v; where = flux[i]; }
        if (i > 0 && (modes[i].g4_star > 0) != (modes[i - 1].g4_star > 0)) zero = flux[i];
    }
    CHECK(std::abs(where - zero) <= 0.0009 + 1e-12);
}

TEST_CASE("power efficiency") {
    CHECK(power_efficiency(100.0, 1e-12, 1e-10) == doctest::Approx(1.0));
    PumpPortModel pp;
    pp.omega_p = kTwoPi * 14e9;
    pp.omega_a = kTwoPi * 7e9;
    pp.kappa = mhz(200);
    pp.n_p = 800.0;
    CHECK_THROWS_AS(modeled_pump_power(pp), MissingPumpCoupling);
    CHECK_THROWS_AS(power_efficiency(100.0, 1e-12, std::nullopt), MissingPumpCoupling);
    pp.kappa_pump = mhz(0.01);
    const double P1 = modeled_pump_power(pp);
    const double det = pp.omega_p - pp.omega_a;
    CHECK(P1 == doctest::Approx(kHbar * pp.omega_p * pp.n_p * (det * det + pp.kappa * pp.kappa / 4.0) / *pp.kappa_pump));
    const double e1 = power_efficiency(100.0, 1e-12, std::nullopt, pp);
    pp.kappa_pump = 2.0 * *pp.kappa_pump;
    CHECK(modeled_pump_power(pp) == doctest::Approx(P1 / 2.0).epsilon(1e-14));
    CHECK(power_efficiency(100.0, 1e-12, std::nullopt, pp) == doctest::Approx(2.0 * e1).epsilon(1e-14));
}

TEST_CASE("drive photon number") {
    const double w = kTwoPi * 7e9, k = mhz(200);
    CHECK(drive_photon_number(0.0, w, w, k) == 0.0);
    CHECK(drive_photon_number(1e-15, w, w, k) == doctest::Approx(4e-15 / (kHbar * w * k)).epsilon(1e-14));
    const double peak = drive_photon_number(1e-15, w + k / 2.0, w, k) * (w + k / 2.0) / w;
    CHECK(peak == doctest::Approx(drive_photon_number(1e-15, w, w, k) / 2.0).epsilon(1e-12));
    const double low = drive_photon_number(1e-15, w - k / 2.0, w, k) * (w - k / 2.0) / w;
    CHECK(low == doctest::Approx(drive_photon_number(1e-15, w, w, k) / 2.0).epsilon(1e-12));
}

TEST_CASE("Stark line") {
    const ModeParams& lo = mode_at(0.35);
    const ModeParams& hi = mode_at(0.45);
    const std::vector<double> nbar{0.0, 10.0, 50.0, 100.0};
    const StarkCurve a = stark_shift_curve(lo, lo.omega_a + mhz(1000), nbar);
    const StarkCurve b = stark_shift_curve(hi, hi.omega_a + mhz(1000), nbar);
    CHECK(a.points[0].shift == 0.0);
    CHECK(a.warning.empty());
    for (std::size_t i = 1; i < nbar.size(); ++i) {
        CHECK(a.points[i].shift == doctest::Approx(24.0 * lo.g4_star * nbar[i]));
        CHECK((a.points[i].shift > 0) != (b.points[i].shift > 0));
        CHECK(!a.points[i].oracle_shift.has_value());
    }
    CHECK(!stark_shift_curve(lo, lo.omega_a + mhz(100), nbar).warning.empty());
}
