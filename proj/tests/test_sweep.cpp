#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "spa/config.hpp"
#include "spa/constants.hpp"
#include "spa/errors.hpp"
#include "spa/sweep.hpp"

using namespace spa;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int column(const Table& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return static_cast<int>(i);
    FAIL("no column " << name);
    return -1;
}

const Table& table(const SweepResult& r, const std::string& name) {
    for (const auto& t : r.tables)
        if (t.name == name) return t;
    FAIL("no table " << name);
    return r.tables.front();
}

double num(const Cell& c) {
    if (auto* d = std::get_if<double>(&c)) return *d;
    if (auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
    return std::nan("");
}

std::string text(const Cell& c) {
    if (auto* s = std::get_if<std::string>(&c)) return *s;
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spa_test_sweep_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_json(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

int run_cli(const std::string& args) {
    const char* cli = std::getenv("SPA_CLI");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

DeviceConfig small() {
    DeviceConfig c = default_config();
    c.delta_MHz_grid.clear();
    for (int d = -300; d <= 150; d += 25) c.delta_MHz_grid.push_back(d);
    c.pin_dBm_grid.clear();
    for (int i = 0; i <= 200; ++i) c.pin_dBm_grid.push_back(-150.0 + 0.4 * i);
    return c;
}

} // namespace

TEST_CASE("config parsing") {
    SUBCASE("defaults are the fitted device") {
        const DeviceConfig c = config_from_json(json::object());
        CHECK(c.Zc_ohm == 45.8);
        CHECK(c.LJ_pH == 38.0);
        CHECK(c.M == 20);
        CHECK(c.omega0_GHz == 16.0);
        CHECK(c.alpha == 0.065);
        const CircuitSpec circ = c.circuit();
        CHECK(circ.omega0 == doctest::Approx(kTwoPi * 16e9).epsilon(1e-15));
        CHECK(circ.snail.L_J == doctest::Approx(38e-12).epsilon(1e-15));
    }
    SUBCASE("grid syntax") {
        const DeviceConfig c = config_from_json({{"flux_grid", {{"start", 0.1}, {"stop", 0.3}, {"num", 5}}},
                                                 {"delta_MHz_grid", {-10.0, 0.0, 10.0}}});
        REQUIRE(c.flux_grid.size() == 5);
        CHECK(c.flux_grid[2] == doctest::Approx(0.2));
        CHECK(c.delta_MHz_grid.size() == 3);
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(config_from_json({{"Zc", 50.0}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"flux_grid", json::array()}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"flux_grid", {0.3, 0.2}}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"flux_grid", {0.2, 0.2}}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"flux_grid", {{"start", 0.0}, {"stop", 1.0}}}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"flux_grid", {{"start", 0.0}, {"stop", 1.0}, {"num", 3}, {"step", 1}}}}),
                        ConfigError);
        CHECK_THROWS_AS(config_from_json({{"LJ_pH", "38"}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"M", 2.5}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"Zc_ohm", -1.0}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"kerr_mode", "half"}}), ConfigError);
        CHECK_THROWS_AS(config_from_json({{"oracle", {{"gian", true}}}}), ConfigError);
        CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/spa.json"), ConfigError);
    }
    SUBCASE("round trip through the resolved echo") {
        DeviceConfig c = default_config();
        c.kappa_table = {{0.0, 150.0}, {0.5, 250.0}};
        c.pump_np_max = 5000.0;
        c.kerr_mode = KerrForm::Undressed;
        const DeviceConfig back = config_from_json(config_to_json(c));
        CHECK(config_to_json(back) == config_to_json(c));
        CHECK(config_hash(back) == config_hash(c));
    }
}

TEST_CASE("config hash") {
    const DeviceConfig a = default_config();
    DeviceConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.workers = 7;
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.alpha = 0.066;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("CSV rendering quotes and formats") {
    Table t;
    t.name = "x";
    t.columns = {"a", "b,c"};
    t.add({1.0 / 3.0, std::string("he said \"hi\"")});
    t.add({Cell(), static_cast<long long>(42)});
    t.add({1e-130, std::string("line\nbreak")});
    const std::string csv = render_csv(t, "00ff");
    CHECK(csv == "a,\"b,c\",config_hash\r\n"
                 "0.333333333333,\"he said \"\"hi\"\"\",00ff\r\n"
                 ",42,00ff\r\n"
                 "1e-130,\"line\nbreak\",00ff\r\n");
}

TEST_CASE("flux sweep over the working range") {
    DeviceConfig c = default_config();
    c.flux_grid.clear();
    for (int i = 5; i <= 45; ++i) c.flux_grid.push_back(0.01 * i);
    const SweepResult r = run_flux_sweep(c);
    const Table& t = table(r, "flux_sweep");
    REQUIRE(t.rows.size() == c.flux_grid.size());
    const int st = column(t, "status"), w = column(t, "omega_a_GHz"), g4 = column(t, "g4_star_kHz");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK((text(t.rows[i][st]) == "ok" || text(t.rows[i][st]) == "GainUnreachable"));
        CHECK(t.rows[i].size() == t.columns.size());
        if (i) CHECK(num(t.rows[i][w]) < num(t.rows[i - 1][w]));
    }
    CHECK(r.failed_rows == 0);
    CHECK(r.summary["omega_a_monotone_decreasing"] == true);
    const auto zeros = r.summary["g4_star_zero_crossings"];
    REQUIRE(zeros.size() == 1);
    CHECK(zeros[0].get<double>() >= 0.35);
    CHECK(zeros[0].get<double>() <= 0.45);
    int flips = 0;
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        if ((num(t.rows[i][g4]) < 0) != (num(t.rows[i - 1][g4]) < 0)) ++flips;
    CHECK(flips == 1);
}

TEST_CASE("flux sweep over 0.05 to 0.45 has an empty error column" * doctest::may_fail()) {
    DeviceConfig c = default_config();
    c.flux_grid.clear();
    for (int i = 5; i <= 45; ++i) c.flux_grid.push_back(0.01 * i);
    const SweepResult r = run_flux_sweep(c);
    const Table& t = table(r, "flux_sweep");
    const int st = column(t, "status");
    int flagged = 0;
    for (const auto& row : t.rows) flagged += text(row[st]) != "ok";
    MESSAGE(flagged << " of " << t.rows.size() << " rows flagged");
    CHECK(flagged == 0);
}

TEST_CASE("flux sweep records per-point errors and continues") {
    DeviceConfig c = default_config();
    c.flux_grid = {0.0, 0.3};
    c.kerr_scale = 0.0;
    const SweepResult r = run_flux_sweep(c);
    const Table& t = table(r, "flux_sweep");
    const int st = column(t, "status");
    CHECK(text(t.rows[0][st]) == "GainUnreachable");
    CHECK(text(t.rows[1][st]) == "Unbounded");
    CHECK(r.total_rows == 2);
    CHECK(r.failed_rows == 1);
}

TEST_CASE("stability map at flux 0.30") {
    const DeviceConfig c = default_config();
    const SweepResult r = run_stability_map(c, 0.30);
    CHECK(r.summary["regions_present"]["I"] == true);
    CHECK(r.summary["regions_present"]["II"] == true);
    CHECK(r.summary["regions_present"]["III"] == true);

    // Negative K: the 20 dB locus stops at a largest positive detuning inside the grid.
    REQUIRE(solve_mode(0.30, c.circuit()).g4_star < 0.0);
    REQUIRE(!r.summary["locus_max_delta_MHz"].is_null());
    const double dmax = r.summary["locus_max_delta_MHz"].get<double>();
    CHECK(dmax > 0.0);
    CHECK(dmax < c.delta_MHz_grid.back());
    const Table& locus = table(r, "gain_locus");
    const int ld = column(locus, "delta_MHz"), ls = column(locus, "status");
    for (const auto& row : locus.rows)
        if (num(row[ld]) > dmax) CHECK(text(row[ls]) == "GainUnreachable");

    const Table& b = table(r, "boundaries");
    const int res = column(b, "residual");
    REQUIRE(!b.rows.empty());
    for (const auto& row : b.rows) CHECK(std::abs(num(row[res])) < 1e-6);

    const Table& cells = table(r, "stability_map");
    CHECK(cells.rows.size() == c.delta_MHz_grid.size() * c.np_grid.size());
}

TEST_CASE("saturation map: fins on the negative side, efficiency when the pump port is given") {
    DeviceConfig c = small();
    c.pump_kappa_MHz = 20.0;
    const SweepResult r = run_saturation_map(c, 0.30);
    const Table& s = table(r, "saturation_summary");
    const int d = column(s, "delta_MHz"), fin = column(s, "shark_fin"), eta = column(s, "efficiency"),
              st = column(s, "status");
    int fins = 0;
    for (const auto& row : s.rows) {
        if (num(row[fin]) == 1.0) {
            ++fins;
            CHECK(num(row[d]) < 0.0);
        }
        if (text(row[st]) == "ok") {
            CHECK(num(row[eta]) > 0.0);
            CHECK(num(row[eta]) < 1.0);
        }
    }
    CHECK(fins > 0);
    for (const auto& f : r.summary["shark_fin_delta_MHz"]) CHECK(f.get<double>() < 0.0);
    CHECK(!r.summary["reachable_delta_MHz"].is_null());
}

TEST_CASE("Kerr-free search") {
    DeviceConfig c = default_config();
    c.flux_grid.clear();
    for (int i = 0; i <= 12; ++i) c.flux_grid.push_back(0.30 + 0.01 * i);
    c.delta_MHz_grid.clear();
    for (int d = -200; d <= 100; d += 25) c.delta_MHz_grid.push_back(d);
    c.workers = 0;
    SUBCASE("argmax stays inside the grid, trace persisted") {
        Table trace;
        const KerrFreePoint k = find_kerr_free_point(c, &trace);
        CHECK(k.flux >= c.flux_grid.front());
        CHECK(k.flux <= c.flux_grid.back());
        const double dm = to_hz(k.delta) / 1e6;
        CHECK(dm >= c.delta_MHz_grid.front() - 1e-9);
        CHECK(dm <= c.delta_MHz_grid.back() + 1e-9);
        CHECK(std::isfinite(k.p1db));
        CHECK(trace.rows.size() > c.flux_grid.size() * c.delta_MHz_grid.size());
        const int fl = column(trace, "flux"), de = column(trace, "delta_MHz");
        for (const auto& row : trace.rows) {
            CHECK(num(row[fl]) >= c.flux_grid.front());
            CHECK(num(row[fl]) <= c.flux_grid.back());
            CHECK(num(row[de]) >= c.delta_MHz_grid.front());
            CHECK(num(row[de]) <= c.delta_MHz_grid.back());
        }
    }
    SUBCASE("sign logic: negative detuning where the dressed Kerr turns negative") {
        const KerrFreePoint k = find_kerr_free_point(c);
        const ModeParams m = solve_mode(k.flux, c.circuit());
        MESSAGE("flux " << k.flux << " delta " << to_hz(k.delta) / 1e6 << " MHz, g4* " << m.g4_star);
        if (m.g4_star < 0.0) CHECK(k.delta < 0.0);
        else CHECK(k.delta > 0.0);
    }
    SUBCASE("flat landscape fails the search") {
        c.kerr_scale = 0.0;
        CHECK_THROWS_AS(find_kerr_free_point(c), SearchFailed);
        const SweepResult r = run_kerr_free(c);
        CHECK(r.failed_rows == r.total_rows);
    }
}

TEST_CASE("CLI exit codes") {
    const fs::path dir = scratch("exit");
    CHECK(run_cli("coeffs --flux 0.3 --out " + (dir / "ok").string()) == 0);
    CHECK(fs::exists(dir / "ok" / "coeffs.csv"));
    CHECK(fs::exists(dir / "ok" / "manifest.json"));

    CHECK(run_cli("coeffs --flux 0.3 --config " + (dir / "missing.json").string()) == 2);
    const fs::path bad = write_json(dir, {{"no_such_key", 1}});
    CHECK(run_cli("coeffs --flux 0.3 --config " + bad.string()) == 2);
    CHECK(run_cli("no-such-command") == 2);
    CHECK(run_cli("stability-map --out " + (dir / "x").string()) == 2);

    const fs::path partial = dir / "partial";
    fs::create_directories(partial);
    const fs::path pc = write_json(partial, {{"kerr_scale", 0.0}, {"flux_grid", {0.0, 0.3}}});
    CHECK(run_cli("flux-sweep --config " + pc.string() + " --out " + (partial / "out").string()) == 3);

    const fs::path total = dir / "total";
    fs::create_directories(total);
    const fs::path tc = write_json(total, {{"kerr_scale", 0.0}, {"flux_grid", {0.3, 0.35}}, {"delta_MHz_grid", {-50.0, 0.0}}});
    CHECK(run_cli("kerr-free --config " + tc.string() + " --out " + (total / "out").string()) == 4);
}

TEST_CASE("manifest echoes the config and hash") {
    const fs::path dir = scratch("manifest");
    const json cfg = {{"flux_grid", {0.25, 0.3}}, {"target_gain_dB", 15.0}};
    const fs::path p = write_json(dir, cfg);
    REQUIRE(run_cli("flux-sweep --config " + p.string() + " --out " + (dir / "out").string()) == 0);
    const json m = json::parse(slurp(dir / "out" / "manifest.json"));
    const DeviceConfig c = load_config(p.string());
    CHECK(m["config_hash"] == config_hash(c));
    CHECK(m["config"]["target_gain_dB"] == 15.0);
    CHECK(m["command"] == "flux-sweep");
    CHECK(m["metadata"].contains("generated_at"));
    const std::string csv = slurp(dir / "out" / "flux_sweep.csv");
    CHECK(csv.find("," + config_hash(c) + "\r\n") != std::string::npos);
}

TEST_CASE("reruns are byte-identical and single rows reproduce in isolation") {
    const fs::path dir = scratch("determinism");
    const json cfg = {{"flux_grid", {0.2, 0.25, 0.3, 0.35}}, {"workers", 4}};
    const fs::path p = write_json(dir, cfg);
    REQUIRE(run_cli("flux-sweep --config " + p.string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("flux-sweep --config " + p.string() + " --out " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "flux_sweep.csv") == slurp(dir / "b" / "flux_sweep.csv"));

    // Row for flux 0.3 from a single-point invocation with an otherwise identical config.
    const DeviceConfig c = load_config(p.string());
    const SweepResult full = run_flux_sweep(c);
    const SweepResult single = run_coeffs(c, 0.3);
    const Table& ft = table(full, "flux_sweep");
    const Table& st = table(single, "coeffs");
    REQUIRE(st.rows.size() == 1);
    CHECK(render_csv(Table{"", {}, {ft.rows[2]}}, "") == render_csv(Table{"", {}, {st.rows[0]}}, ""));

    DeviceConfig cold = c;
    cold.seed_free = true;
    const SweepResult ra = run_flux_sweep(c), rb = run_flux_sweep(cold);
    const Table& a = table(ra, "flux_sweep");
    const Table& b = table(rb, "flux_sweep");
    const int w = column(a, "omega_a_GHz");
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        CHECK(num(a.rows[i][w]) == doctest::Approx(num(b.rows[i][w])).epsilon(1e-12));
}

TEST_CASE("saturation-map reruns are byte-identical") {
    const fs::path dir = scratch("satmap");
    const json cfg = {{"delta_MHz_grid", {-150.0, -50.0, 0.0, 50.0}},
                      {"pin_dBm_grid", {{"start", -140.0}, {"stop", -90.0}, {"num", 101}}}};
    const fs::path p = write_json(dir, cfg);
    REQUIRE(run_cli("saturation-map --flux 0.3 --config " + p.string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("saturation-map --flux 0.3 --config " + p.string() + " --out " + (dir / "b").string()) == 0);
    for (const char* f : {"saturation_summary.csv", "saturation_branches.csv"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}
