// spa: coefficient, stability, saturation and Kerr-free sweeps for
// SNAIL parametric amplifiers. Data files only; no plotting.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spa/config.hpp"
#include "spa/constants.hpp"
#include "spa/errors.hpp"
#include "spa/mode.hpp"
#include "spa/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitFailed = 4;

struct Overrides {
    std::string config;
    std::string out;
    std::optional<double> flux;
    std::optional<double> delta_MHz;
    std::optional<double> gain_dB;
    bool seed_free = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool wants_flux, bool wants_delta) {
    cmd->add_option("--config", o.config, "JSON device/sweep config");
    cmd->add_option("--out", o.out, "Output directory (overrides output_dir)");
    cmd->add_option("--gain-dB", o.gain_dB, "Target small-signal gain in dB");
    cmd->add_flag("--seed-free", o.seed_free, "Solve every flux point without warm-starting from its neighbour");
    if (wants_flux) cmd->add_option("--flux", o.flux, "Flux bias in units of the flux quantum");
    if (wants_delta) cmd->add_option("--delta-MHz", o.delta_MHz, "Pump half-detuning in MHz");
}

spa::DeviceConfig resolve(const Overrides& o) {
    spa::DeviceConfig c = o.config.empty() ? spa::default_config() : spa::load_config(o.config);
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.gain_dB) c.target_gain_dB = *o.gain_dB;
    if (o.seed_free) c.seed_free = true;
    if (o.delta_MHz) c.delta_MHz_grid = {*o.delta_MHz};
    c.validate();
    return c;
}

double pick_flux(const Overrides& o, const spa::DeviceConfig& c) {
    if (o.flux) return *o.flux;
    if (c.flux_grid.size() == 1) return c.flux_grid.front();
    throw spa::ConfigError("--flux is required (or a single-entry flux_grid)");
}

int finish(const spa::SweepResult& r, const spa::DeviceConfig& c) {
    for (const auto& p : spa::write_result(r, c, c.output_dir)) std::cout << p << "\n";
    std::cerr << r.command << ": " << r.total_rows << " rows, " << r.failed_rows << " failed\n";
    if (r.failed_rows == 0) return kExitOk;
    return r.failed_rows < r.total_rows ? kExitPartial : kExitFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SNAIL parametric amplifier design sweeps"};
    app.require_subcommand(1);

    Overrides o;
    auto* coeffs = app.add_subcommand("coeffs", "Hamiltonian coefficients at one flux");
    add_common(coeffs, o, true, false);
    auto* flux_sweep = app.add_subcommand("flux-sweep", "Coefficients, P1dB and IIP3 over flux_grid");
    add_common(flux_sweep, o, true, false);
    auto* stability = app.add_subcommand("stability-map", "Region labels over (delta, n_p)");
    add_common(stability, o, true, true);
    auto* saturation = app.add_subcommand("saturation-map", "Saturation branches over detuning and input power");
    add_common(saturation, o, true, true);
    auto* kerr_free = app.add_subcommand("kerr-free", "Search for the P1dB maximum over flux and detuning");
    add_common(kerr_free, o, false, false);
    auto* oracle = app.add_subcommand("oracle", "Time-domain gain check and Stark curve at one point");
    add_common(oracle, o, true, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        spa::DeviceConfig c = resolve(o);
        if (*coeffs) return finish(spa::run_coeffs(c, pick_flux(o, c)), c);
        if (*flux_sweep) {
            if (o.flux) c.flux_grid = {*o.flux};
            return finish(spa::run_flux_sweep(c), c);
        }
        if (*stability) return finish(spa::run_stability_map(c, pick_flux(o, c)), c);
        if (*saturation) return finish(spa::run_saturation_map(c, pick_flux(o, c)), c);
        if (*kerr_free) return finish(spa::run_kerr_free(c), c);
        if (*oracle) {
            const double d = o.delta_MHz ? *o.delta_MHz : 0.0;
            return finish(spa::run_oracle(c, pick_flux(o, c), d), c);
        }
    } catch (const spa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailed;
    }
    return kExitConfig;
}
