#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spa/metrics.hpp"
#include "spa/mode.hpp"
#include "spa/pump.hpp"

namespace spa {

/// Everything a sweep needs. Units follow the JSON key suffixes; the
/// accessors convert to SI and rad/s.
struct DeviceConfig {
    double Zc_ohm = 45.8;
    double LJ_pH = 38.0;
    double alpha = 0.065;
    int M = 20;
    double omega0_GHz = 16.0;
    bool allow_any_alpha = false;
    double kappa_MHz = 200.0;
    /// (flux, kappa/2pi in MHz); overrides kappa_MHz when non-empty.
    std::vector<std::pair<double, double>> kappa_table;

    double target_gain_dB = 20.0;
    std::vector<double> flux_grid;
    std::vector<double> delta_MHz_grid;
    std::vector<double> pin_dBm_grid;
    std::vector<double> np_grid;

    std::optional<double> pump_np_max;
    double kerr_scale = 1.0;
    double stark_scale = 1.0;
    /// Added to every requested detuning before evaluation.
    double frequency_offset_MHz = 0.0;
    KerrForm kerr_mode = KerrForm::Dressed;
    /// Pump-port coupling for the modeled pump power, MHz.
    std::optional<double> pump_kappa_MHz;

    bool oracle_gain = true;
    bool oracle_stark = false;
    double oracle_stark_offset_MHz = 1000.0;
    std::vector<double> oracle_stark_nbar;

    int kerr_free_rounds = 3;
    /// Cold-start every flux point instead of warm-starting from its neighbour.
    bool seed_free = false;
    int workers = 0;
    std::string output_dir = "out";

    CircuitSpec circuit() const;
    PumpOptions pump_options() const;
    double target_G0() const;
    /// Requested detuning in MHz to model detuning in rad/s.
    double model_delta(double delta_MHz) const;

    /// Throws ConfigError.
    void validate() const;
};

/// Default grids of the fitted device.
DeviceConfig default_config();

/// Parse a JSON object on top of the defaults. Unknown keys are rejected.
/// Throws ConfigError.
DeviceConfig config_from_json(const nlohmann::json& j);
DeviceConfig load_config(const std::string& path);

/// Fully resolved configuration with every key present.
nlohmann::json config_to_json(const DeviceConfig& c);

/// FNV-1a 64-bit hash of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const DeviceConfig& c);

} // namespace spa
