#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "spa/config.hpp"

namespace spa {

/// Empty, number, integer or text.
using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

struct SweepResult {
    std::string command;
    std::string config_hash;
    std::vector<Table> tables;
    /// Rows carrying a failure code.
    int failed_rows = 0;
    int total_rows = 0;
    /// Small structured summary written to the manifest.
    nlohmann::json summary = nlohmann::json::object();
};

/// Optional value as a cell.
Cell cell(std::optional<double> v);

/// RFC-4180 CSV with "%.12g" numbers and a trailing config_hash column.
std::string render_csv(const Table& t, const std::string& hash);

/// Writes one CSV per table and manifest.json into `dir`. Returns file paths.
std::vector<std::string> write_result(const SweepResult& r, const DeviceConfig& c, const std::string& dir);

/// Runs fn(i) for i in [0, n) on up to `workers` threads; results keep index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, int workers, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(n);
    unsigned w = workers > 0 ? static_cast<unsigned>(workers) : std::max(1u, std::thread::hardware_concurrency());
    w = std::min<unsigned>(w, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
    };
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < w; ++k) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

/// Per-flux coefficients, P1dB and IIP3 at delta = 0 and the target gain.
SweepResult run_flux_sweep(const DeviceConfig& c);

/// Region labels on delta_MHz_grid x np_grid, the target-gain locus and the
/// boundary polylines.
SweepResult run_stability_map(const DeviceConfig& c, double flux);

/// Saturation branches over pin_dBm_grid for every detuning with a reachable
/// target gain.
SweepResult run_saturation_map(const DeviceConfig& c, double flux);

struct KerrFreePoint {
    double flux = 0.0;
    double delta = 0.0;
    double p1db = 0.0;
    double n_p = 0.0;
};

/// Coarse scan of P1dB over flux_grid x delta_MHz_grid, then alternating
/// golden-section refinement clamped to the grid bounds. Throws SearchFailed.
KerrFreePoint find_kerr_free_point(const DeviceConfig& c, Table* trace = nullptr);

SweepResult run_kerr_free(const DeviceConfig& c);

/// Oracle gain check at one operating point plus the optional Stark curve.
SweepResult run_oracle(const DeviceConfig& c, double flux, double delta_MHz);

/// Coefficients at a single flux (one flux-sweep row).
SweepResult run_coeffs(const DeviceConfig& c, double flux);

} // namespace spa
