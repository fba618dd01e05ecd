#include "spa/sweep.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>

#include "spa/constants.hpp"
#include "spa/errors.hpp"
#include "spa/oracle.hpp"

namespace spa {

using nlohmann::json;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double MHz(double omega) { return to_hz(omega) / 1e6; }
double GHz(double omega) { return to_hz(omega) / 1e9; }
double kHz(double omega) { return to_hz(omega) / 1e3; }

/// Points outside the reachable domain are flagged but are not failures.
bool is_failure(const std::string& code) { return !code.empty() && code != "GainUnreachable"; }

struct Status {
    std::string code;
    std::string message;

    void set(const std::exception& e) {
        if (auto* s = dynamic_cast<const Error*>(&e)) code = s->code();
        else code = "InternalError";
        message = e.what();
    }
    Cell code_cell() const { return code.empty() ? Cell(std::string("ok")) : Cell(code); }
    Cell message_cell() const { return message.empty() ? Cell() : Cell(message); }
};

void count(SweepResult& r, const Status& s) {
    ++r.total_rows;
    if (is_failure(s.code)) ++r.failed_rows;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string render_cell(const Cell& c) {
    struct V {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(double d) const { return format_number(d); }
        std::string operator()(long long i) const { return std::to_string(i); }
        std::string operator()(const std::string& s) const { return quote(s); }
    };
    return std::visit(V{}, c);
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Mode solves over a flux list, warm-started within fixed-size chunks.
std::vector<std::optional<ModeParams>> solve_modes(const DeviceConfig& c, const std::vector<double>& flux,
                                                   std::vector<Status>& status) {
    const CircuitSpec circuit = c.circuit();
    constexpr std::size_t chunk = 8;
    const std::size_t n_chunks = (flux.size() + chunk - 1) / chunk;
    using Chunk = std::vector<std::pair<std::optional<ModeParams>, Status>>;
    std::function<Chunk(std::size_t)> job = [&](std::size_t k) {
        Chunk out;
        std::optional<double> prev;
        for (std::size_t i = k * chunk; i < std::min(flux.size(), (k + 1) * chunk); ++i) {
            Status s;
            std::optional<ModeParams> m;
            try {
                m = solve_mode(flux[i], circuit, c.seed_free ? std::nullopt : prev);
                prev = m->coeffs.phi_min;
            } catch (const std::exception& e) {
                s.set(e);
                prev.reset();
            }
            out.emplace_back(std::move(m), s);
        }
        return out;
    };
    const auto chunks = parallel_map<Chunk>(n_chunks, c.workers, job);
    std::vector<std::optional<ModeParams>> modes;
    status.clear();
    for (const auto& ch : chunks)
        for (const auto& [m, s] : ch) {
            modes.push_back(m);
            status.push_back(s);
        }
    return modes;
}

Table flux_table() {
    Table t;
    t.name = "flux_sweep";
    t.columns = {"flux",        "omega_a_GHz",   "kappa_MHz",  "L_s_pH",      "Z1_ohm",       "Z1_over_RQ",
                 "c2",          "c3",            "c4",         "g3_MHz",      "g4_MHz",       "g4_star_kHz",
                 "K_kHz",       "perturbative",  "n_p",        "G0_dB",       "p1db_W",       "p1db_dBm",
                 "iip3_W",      "iip3_dBm",      "iip3_pump_off_W", "iip3_pump_off_dBm", "status", "message"};
    return t;
}

std::vector<Cell> flux_row(const DeviceConfig& c, double flux, const std::optional<ModeParams>& mode,
                           Status& status) {
    std::vector<Cell> row{flux};
    if (!mode) {
        row.resize(22);
        row.push_back(status.code_cell());
        row.push_back(status.message_cell());
        return row;
    }
    const ModeParams& m = *mode;
    const PumpOptions opts = c.pump_options();
    const double K = 12.0 * m.g4_star * opts.kerr_scale;
    row.insert(row.end(), {GHz(m.omega_a), MHz(m.kappa), m.L_s * 1e12, m.Z1, m.impedance_ratio(), m.coeffs.c2,
                           m.coeffs.c3, m.coeffs.c4, MHz(m.g3), MHz(m.g4), kHz(m.g4_star), kHz(K),
                           static_cast<long long>(m.perturbative())});
    double n_p = kNaN, G0 = kNaN, p = kNaN, ip = kNaN, ip0 = kNaN;
    try {
        ip0 = iip3(1.0, K, m.kappa, m.omega_a).iip3;
    } catch (const Error&) {
    }
    try {
        const OperatingPoint op = make_operating_point(m, c.model_delta(0.0), c.target_G0(), opts);
        n_p = op.n_p;
        G0 = operating_gain(op);
        ip = iip3(G0, op.model.K, m.kappa, m.omega_a).iip3;
        p = p1db(op, c.kerr_mode);
    } catch (const std::exception& e) {
        status.set(e);
    }
    auto dbm = [](double w) { return std::isfinite(w) && w > 0 ? to_dBm(w) : kNaN; };
    row.insert(row.end(), {n_p, std::isfinite(G0) ? to_dB(G0) : kNaN, p, dbm(p), ip, dbm(ip), ip0, dbm(ip0)});
    row.push_back(status.code_cell());
    row.push_back(status.message_cell());
    return row;
}

void flux_summary(SweepResult& r, const std::vector<double>& flux, const std::vector<std::optional<ModeParams>>& modes) {
    json zeros = json::array();
    bool monotone = true;
    for (std::size_t i = 1; i < flux.size(); ++i) {
        if (!modes[i] || !modes[i - 1]) continue;
        const double a = modes[i - 1]->g4_star, b = modes[i]->g4_star;
        if ((a < 0.0) != (b < 0.0)) zeros.push_back(flux[i - 1] + (flux[i] - flux[i - 1]) * a / (a - b));
        if (!(modes[i]->omega_a < modes[i - 1]->omega_a) && flux[i] <= 0.5 && flux[i - 1] >= 0.0) monotone = false;
    }
    r.summary["g4_star_zero_crossings"] = zeros;
    r.summary["omega_a_monotone_decreasing"] = monotone;
}

} // namespace

Cell cell(std::optional<double> v) { return v ? Cell(*v) : Cell(); }

std::string render_csv(const Table& t, const std::string& hash) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + quote(t.columns[i]);
    out += ",config_hash\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + render_cell(row[i]);
        out += "," + hash + "\r\n";
    }
    return out;
}

std::vector<std::string> write_result(const SweepResult& r, const DeviceConfig& c, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    std::vector<std::string> paths;
    json files = json::array();
    for (const auto& t : r.tables) {
        const fs::path p = fs::path(dir) / (t.name + ".csv");
        std::ofstream out(p, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + p.string());
        out << render_csv(t, r.config_hash);
        paths.push_back(p.string());
        files.push_back({{"file", t.name + ".csv"}, {"rows", t.rows.size()}, {"columns", t.columns}});
    }
    json manifest;
    manifest["command"] = r.command;
    manifest["config_hash"] = r.config_hash;
    manifest["config"] = config_to_json(c);
    manifest["files"] = files;
    manifest["summary"] = r.summary;
    manifest["rows"] = {{"total", r.total_rows}, {"failed", r.failed_rows}};
    manifest["metadata"] = {{"generated_at", utc_now()}};
    const fs::path mp = fs::path(dir) / "manifest.json";
    std::ofstream out(mp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + mp.string());
    out << manifest.dump(2) << "\n";
    paths.push_back(mp.string());
    return paths;
}

// ============================================================================
// Flux sweep
// ============================================================================

SweepResult run_flux_sweep(const DeviceConfig& c) {
    SweepResult r;
    r.command = "flux-sweep";
    r.config_hash = config_hash(c);
    std::vector<Status> status;
    const auto modes = solve_modes(c, c.flux_grid, status);
    std::function<std::pair<std::vector<Cell>, Status>(std::size_t)> job = [&](std::size_t i) {
        Status s = status[i];
        auto row = flux_row(c, c.flux_grid[i], modes[i], s);
        return std::make_pair(std::move(row), s);
    };
    const auto rows = parallel_map<std::pair<std::vector<Cell>, Status>>(c.flux_grid.size(), c.workers, job);
    Table t = flux_table();
    for (const auto& [row, s] : rows) {
        t.add(row);
        count(r, s);
    }
    r.tables.push_back(std::move(t));
    flux_summary(r, c.flux_grid, modes);
    return r;
}

SweepResult run_coeffs(const DeviceConfig& c, double flux) {
    SweepResult r;
    r.command = "coeffs";
    r.config_hash = config_hash(c);
    Status s;
    std::optional<ModeParams> m;
    try {
        m = solve_mode(flux, c.circuit());
    } catch (const std::exception& e) {
        s.set(e);
    }
    Table t = flux_table();
    t.name = "coeffs";
    t.add(flux_row(c, flux, m, s));
    count(r, s);
    r.tables.push_back(std::move(t));
    return r;
}

// ============================================================================
// Stability map
// ============================================================================

SweepResult run_stability_map(const DeviceConfig& c, double flux) {
    SweepResult r;
    r.command = "stability-map";
    r.config_hash = config_hash(c);
    const ModeParams mode = solve_mode(flux, c.circuit());
    const PumpOptions opts = c.pump_options();

    Table cells;
    cells.name = "stability_map";
    cells.columns = {"flux", "delta_MHz", "n_p", "delta_b_MHz", "g_MHz", "region"};
    bool seen[3] = {false, false, false};
    const std::size_t nd = c.delta_MHz_grid.size();
    using Rows = std::vector<std::vector<Cell>>;
    std::function<Rows(std::size_t)> job = [&](std::size_t i) {
        Rows rows;
        const double d = c.model_delta(c.delta_MHz_grid[i]);
        for (double n : c.np_grid) {
            const EffectiveModel em = effective_params(flux, d, n, mode, opts);
            const Region reg = classify_stability(d, n, flux, mode, opts);
            rows.push_back({flux, c.delta_MHz_grid[i], n, MHz(em.delta_b), MHz(em.g), region_name(reg)});
        }
        return rows;
    };
    for (auto& rows : parallel_map<Rows>(nd, c.workers, job))
        for (auto& row : rows) {
            const std::string& reg = std::get<std::string>(row.back());
            seen[reg == "I" ? 0 : (reg == "II" ? 1 : 2)] = true;
            cells.add(std::move(row));
            ++r.total_rows;
        }

    Table locus;
    locus.name = "gain_locus";
    locus.columns = {"flux", "delta_MHz", "target_gain_dB", "n_p", "threshold_n_p", "region", "status", "message"};
    std::optional<double> max_delta;
    for (double dm : c.delta_MHz_grid) {
        const double d = c.model_delta(dm);
        Status s;
        double n = kNaN, th = kNaN;
        std::string reg;
        try {
            th = threshold_np(flux, d, mode, opts);
        } catch (const Error&) {
        }
        try {
            n = np_for_gain(c.target_G0(), flux, d, mode, opts);
            reg = region_name(classify_stability(d, n, flux, mode, opts));
            max_delta = dm;
        } catch (const std::exception& e) {
            s.set(e);
        }
        locus.add({flux, dm, c.target_gain_dB, n, th, reg.empty() ? Cell() : Cell(reg), s.code_cell(),
                   s.message_cell()});
        count(r, s);
    }

    Table bounds;
    bounds.name = "boundaries";
    bounds.columns = {"flux", "curve", "delta_MHz", "n_p", "residual"};
    std::vector<double> deltas;
    for (double dm : c.delta_MHz_grid) deltas.push_back(c.model_delta(dm));
    const double k2 = mode.kappa * mode.kappa;
    for (const auto& pl : stability_boundaries(mode, deltas, opts)) {
        for (const auto& [d, n] : pl.points) {
            const EffectiveModel em = effective_params(flux, d, n, mode, opts);
            const double res = pl.name == "I_III" ? (4.0 * em.g * em.g - k2 / 4.0) / k2
                                                  : (4.0 * em.g * em.g - k2 / 4.0 - em.delta_b * em.delta_b) / k2;
            bounds.add({flux, pl.name, MHz(d) - c.frequency_offset_MHz, n, res});
        }
    }
    r.tables.push_back(std::move(cells));
    r.tables.push_back(std::move(locus));
    r.tables.push_back(std::move(bounds));
    r.summary["regions_present"] = {{"I", seen[0]}, {"II", seen[1]}, {"III", seen[2]}};
    r.summary["locus_max_delta_MHz"] = max_delta ? json(*max_delta) : json(nullptr);
    return r;
}

// ============================================================================
// Saturation map
// ============================================================================

SweepResult run_saturation_map(const DeviceConfig& c, double flux) {
    SweepResult r;
    r.command = "saturation-map";
    r.config_hash = config_hash(c);
    const ModeParams mode = solve_mode(flux, c.circuit());
    const PumpOptions opts = c.pump_options();
    std::vector<double> pin;
    for (double dbm : c.pin_dBm_grid) pin.push_back(from_dBm(dbm));

    struct DeltaResult {
        std::vector<Cell> summary;
        std::vector<std::vector<Cell>> branches;
        Status status;
        bool reachable = false;
        bool fin = false;
    };
    std::function<DeltaResult(std::size_t)> job = [&](std::size_t i) {
        DeltaResult out;
        const double dm = c.delta_MHz_grid[i];
        const double d = c.model_delta(dm);
        double n_p = kNaN, db = kNaN, G0 = kNaN, p = kNaN, pn = kNaN, ip = kNaN, term = kNaN, jump = kNaN,
               step = kNaN, pp = kNaN, eta = kNaN;
        std::string reg;
        long long fin = 0;
        try {
            const OperatingPoint op = make_operating_point(mode, d, c.target_G0(), opts);
            out.reachable = true;
            n_p = op.n_p;
            db = MHz(op.model.delta_b);
            G0 = operating_gain(op);
            reg = region_name(classify_stability(d, n_p, flux, mode, opts));
            const SaturationCurve sc = saturation_curve(op, pin);
            fin = sc.shark_fin;
            out.fin = sc.shark_fin;
            if (sc.p1db) pn = *sc.p1db;
            if (sc.low_branch_termination) term = *sc.low_branch_termination;
            jump = sc.max_output_jump_dB;
            step = sc.jump_input_step_dB;
            for (const auto& pt : sc.points) {
                std::vector<Cell> row{flux, dm, pt.p_in, to_dBm(pt.p_in), static_cast<long long>(pt.gains.size())};
                for (std::size_t k = 0; k < 3; ++k) row.push_back(k < pt.gains.size() ? Cell(to_dB(pt.gains[k])) : Cell());
                row.push_back(to_dB(pt.followed_gain));
                row.push_back(to_dBm(pt.followed_gain * pt.p_in));
                out.branches.push_back(std::move(row));
            }
            ip = iip3(G0, op.model.K, mode.kappa, mode.omega_a).iip3;
            p = p1db(op, c.kerr_mode);
            if (c.pump_kappa_MHz) {
                PumpPortModel pm{2.0 * (mode.omega_a + d), n_p, mode.omega_a, mode.kappa,
                                 to_angular(*c.pump_kappa_MHz * 1e6)};
                pp = modeled_pump_power(pm);
                eta = power_efficiency(G0, p, pp);
            }
        } catch (const std::exception& e) {
            out.status.set(e);
        }
        auto dbm = [](double w) { return std::isfinite(w) && w > 0 ? to_dBm(w) : kNaN; };
        out.summary = {flux, dm, MHz(d), n_p, db, std::isfinite(G0) ? to_dB(G0) : kNaN,
                       reg.empty() ? Cell() : Cell(reg), p, dbm(p), pn, dbm(pn), ip, dbm(ip), fin, term, dbm(term),
                       jump, step, pp, dbm(pp), eta, out.status.code_cell(), out.status.message_cell()};
        return out;
    };
    const auto results = parallel_map<DeltaResult>(c.delta_MHz_grid.size(), c.workers, job);

    Table summary;
    summary.name = "saturation_summary";
    summary.columns = {"flux", "delta_MHz", "delta_model_MHz", "n_p", "delta_b_MHz", "G0_dB", "region", "p1db_W",
                       "p1db_dBm", "p1db_numeric_W", "p1db_numeric_dBm", "iip3_W", "iip3_dBm", "shark_fin",
                       "low_branch_termination_W", "low_branch_termination_dBm", "max_output_jump_dB",
                       "jump_input_step_dB", "pump_power_W", "pump_power_dBm", "efficiency", "status", "message"};
    Table branches;
    branches.name = "saturation_branches";
    branches.columns = {"flux", "delta_MHz", "p_in_W", "p_in_dBm", "branch_count", "gain1_dB", "gain2_dB",
                        "gain3_dB", "followed_gain_dB", "followed_output_dBm"};
    json window = json::array(), fins = json::array();
    std::optional<double> lo, hi;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& res = results[i];
        summary.add(res.summary);
        count(r, res.status);
        for (const auto& row : res.branches) branches.add(row);
        if (res.reachable) {
            const double dm = c.delta_MHz_grid[i];
            if (!lo) lo = dm;
            hi = dm;
        }
        if (res.fin) fins.push_back(c.delta_MHz_grid[i]);
    }
    r.tables.push_back(std::move(summary));
    r.tables.push_back(std::move(branches));
    r.summary["reachable_delta_MHz"] = lo ? json::array({*lo, *hi}) : json(nullptr);
    r.summary["reachable_width_MHz"] = lo ? json(*hi - *lo) : json(nullptr);
    r.summary["shark_fin_delta_MHz"] = fins;
    return r;
}

// ============================================================================
// Kerr-free search
// ============================================================================

namespace {

struct Eval {
    double flux;
    double delta_MHz;
    double n_p = kNaN;
    double p1db = kNaN;
    Status status;

    double score() const { return std::isfinite(p1db) && p1db > 0 ? to_dBm(p1db) : -std::numeric_limits<double>::infinity(); }
};

Eval evaluate(const DeviceConfig& c, double flux, double delta_MHz) {
    Eval e;
    e.flux = flux;
    e.delta_MHz = delta_MHz;
    try {
        const ModeParams m = solve_mode(flux, c.circuit());
        const OperatingPoint op = make_operating_point(m, c.model_delta(delta_MHz), c.target_G0(), c.pump_options());
        e.n_p = op.n_p;
        e.p1db = p1db(op, c.kerr_mode);
    } catch (const std::exception& ex) {
        e.status.set(ex);
    }
    return e;
}

} // namespace

KerrFreePoint find_kerr_free_point(const DeviceConfig& c, Table* trace) {
    const auto& F = c.flux_grid;
    const auto& D = c.delta_MHz_grid;
    std::function<Eval(std::size_t)> job = [&](std::size_t k) { return evaluate(c, F[k / D.size()], D[k % D.size()]); };
    const auto coarse = parallel_map<Eval>(F.size() * D.size(), c.workers, job);

    auto log = [&](const std::string& phase, const Eval& e) {
        if (!trace) return;
        const double s = e.score();
        trace->add({phase, e.flux, e.delta_MHz, e.n_p, e.p1db, std::isfinite(s) ? Cell(s) : Cell(),
                    e.status.code_cell(), e.status.message_cell()});
    };
    if (trace) {
        trace->name = "kerr_free_trace";
        trace->columns = {"phase", "flux", "delta_MHz", "n_p", "p1db_W", "p1db_dBm", "status", "message"};
    }
    const Eval* best = nullptr;
    for (const auto& e : coarse) {
        log("coarse", e);
        if (std::isfinite(e.score()) && (!best || e.score() > best->score())) best = &e;
    }
    if (!best) throw SearchFailed("no finite P1dB anywhere on the coarse grid");
    Eval cur = *best;

    auto step_of = [](const std::vector<double>& g) {
        double s = 0.0;
        for (std::size_t i = 1; i < g.size(); ++i) s = std::max(s, g[i] - g[i - 1]);
        return s;
    };
    const double sf = step_of(F), sd = step_of(D);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;

    for (int round = 1; round <= c.kerr_free_rounds; ++round) {
        const double shrink = std::pow(0.5, round - 1);
        for (int axis = 0; axis < 2; ++axis) {
            const auto& g = axis == 0 ? F : D;
            const double width = (axis == 0 ? sf : sd) * shrink;
            if (!(width > 0.0)) continue;
            const double x0 = axis == 0 ? cur.flux : cur.delta_MHz;
            double a = std::max(g.front(), x0 - width), b = std::min(g.back(), x0 + width);
            const std::string phase = "round" + std::to_string(round) + (axis == 0 ? "_flux" : "_delta");
            auto at = [&](double x) {
                Eval e = axis == 0 ? evaluate(c, x, cur.delta_MHz) : evaluate(c, cur.flux, x);
                log(phase, e);
                if (e.score() > cur.score()) cur = e;
                return e.score();
            };
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            double f1 = at(x1), f2 = at(x2);
            for (int it = 0; it < 24; ++it) {
                if (f1 >= f2) {
                    b = x2; x2 = x1; f2 = f1;
                    x1 = b - gr * (b - a); f1 = at(x1);
                } else {
                    a = x1; x1 = x2; f1 = f2;
                    x2 = a + gr * (b - a); f2 = at(x2);
                }
            }
        }
    }
    return KerrFreePoint{cur.flux, to_angular(cur.delta_MHz * 1e6), cur.p1db, cur.n_p};
}

SweepResult run_kerr_free(const DeviceConfig& c) {
    SweepResult r;
    r.command = "kerr-free";
    r.config_hash = config_hash(c);
    Table trace;
    Table best;
    best.name = "kerr_free";
    best.columns = {"flux", "delta_MHz", "n_p", "p1db_W", "p1db_dBm", "status", "message"};
    Status s;
    try {
        const KerrFreePoint k = find_kerr_free_point(c, &trace);
        best.add({k.flux, MHz(k.delta), k.n_p, k.p1db, to_dBm(k.p1db), s.code_cell(), s.message_cell()});
        r.summary["kerr_free"] = {{"flux", k.flux}, {"delta_MHz", MHz(k.delta)}, {"p1db_dBm", to_dBm(k.p1db)}, {"n_p", k.n_p}};
    } catch (const std::exception& e) {
        s.set(e);
        best.add({Cell(), Cell(), Cell(), Cell(), Cell(), s.code_cell(), s.message_cell()});
    }
    count(r, s);
    r.tables.push_back(std::move(best));
    if (!trace.name.empty()) r.tables.push_back(std::move(trace));
    return r;
}

// ============================================================================
// Oracle
// ============================================================================

SweepResult run_oracle(const DeviceConfig& c, double flux, double delta_MHz) {
    SweepResult r;
    r.command = "oracle";
    r.config_hash = config_hash(c);
    const CircuitSpec circuit = c.circuit();
    const ModeParams mode = solve_mode(flux, circuit);
    const PumpOptions opts = c.pump_options();
    const double d = c.model_delta(delta_MHz);

    if (c.oracle_gain) {
        Table t;
        t.name = "oracle_gain";
        t.columns = {"flux", "delta_MHz", "n_p", "offset_MHz", "closed_form_dB", "closed_form_at_offset_dB",
                     "oracle_gain_dB", "relative_error", "n_p_measured", "status", "message"};
        Status s;
        double n = kNaN, cf = kNaN, cfo = kNaN, g = kNaN, npm = kNaN;
        const double offset = mode.kappa / 100.0;
        try {
            n = np_for_gain(c.target_G0(), flux, d, mode, opts);
            const OracleGainResult o = oracle_gain(mode, circuit, d, n, offset, opts);
            cf = o.closed_form;
            cfo = o.closed_form_at_offset;
            g = o.gain;
            npm = o.n_p_measured;
        } catch (const std::exception& e) {
            s.set(e);
        }
        auto db = [](double v) { return std::isfinite(v) && v > 0 ? to_dB(v) : kNaN; };
        t.add({flux, delta_MHz, n, MHz(offset), db(cf), db(cfo), db(g), std::isfinite(g) ? g / cf - 1.0 : kNaN, npm,
               s.code_cell(), s.message_cell()});
        count(r, s);
        r.tables.push_back(std::move(t));
    }
    if (c.oracle_stark) {
        Table t;
        t.name = "oracle_stark";
        t.columns = {"flux", "drive_offset_MHz", "nbar", "shift_MHz", "oracle_shift_MHz", "status", "message"};
        const double wd = mode.omega_a + to_angular(c.oracle_stark_offset_MHz * 1e6);
        for (double nb : c.oracle_stark_nbar) {
            Status s;
            double sh = 24.0 * mode.g4_star * nb, osh = kNaN;
            try {
                osh = nb > 0.0 ? oracle_stark_shift(mode, circuit, wd, nb) : 0.0;
            } catch (const std::exception& e) {
                s.set(e);
            }
            t.add({flux, c.oracle_stark_offset_MHz, nb, MHz(sh), MHz(osh), s.code_cell(), s.message_cell()});
            count(r, s);
        }
        r.tables.push_back(std::move(t));
    }
    return r;
}

} // namespace spa
