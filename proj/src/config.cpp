#include "spa/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "spa/constants.hpp"
#include "spa/errors.hpp"

namespace spa {

using nlohmann::json;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return v;
}

void check_grid(const std::vector<double>& g, const char* name) {
    if (g.empty()) throw ConfigError(std::string(name) + " must not be empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw ConfigError(std::string(name) + " must be strictly increasing");
    for (double v : g)
        if (!std::isfinite(v)) throw ConfigError(std::string(name) + " contains a non-finite value");
}

/// A grid is either an explicit list or {"start", "stop", "num"}.
std::vector<double> parse_grid(const json& j, const char* name) {
    if (j.is_array()) {
        std::vector<double> v;
        for (const auto& x : j) {
            if (!x.is_number()) throw ConfigError(std::string(name) + " entries must be numbers");
            v.push_back(x.get<double>());
        }
        return v;
    }
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "start" && it.key() != "stop" && it.key() != "num")
                throw ConfigError(std::string(name) + ": unknown key '" + it.key() + "'");
        if (!j.contains("start") || !j.contains("stop") || !j.contains("num"))
            throw ConfigError(std::string(name) + " needs start, stop and num");
        const int n = j.at("num").get<int>();
        if (n < 1) throw ConfigError(std::string(name) + ".num must be at least 1");
        return linspace(j.at("start").get<double>(), j.at("stop").get<double>(), n);
    }
    throw ConfigError(std::string(name) + " must be a list or {start, stop, num}");
}

double number(const json& j, const char* name) {
    if (!j.is_number()) throw ConfigError(std::string(name) + " must be a number");
    return j.get<double>();
}

bool boolean(const json& j, const char* name) {
    if (!j.is_boolean()) throw ConfigError(std::string(name) + " must be true or false");
    return j.get<bool>();
}

} // namespace

CircuitSpec DeviceConfig::circuit() const {
    CircuitSpec c;
    c.Z_c = Zc_ohm;
    c.omega0 = to_angular(omega0_GHz * 1e9);
    c.snail.L_J = LJ_pH * 1e-12;
    c.snail.alpha = alpha;
    c.snail.M = M;
    c.snail.allow_any_alpha = allow_any_alpha;
    if (kappa_table.empty()) {
        c.kappa = KappaModel::constant(to_angular(kappa_MHz * 1e6));
    } else {
        std::vector<std::pair<double, double>> t;
        for (const auto& [f, k] : kappa_table) t.emplace_back(f, to_angular(k * 1e6));
        c.kappa = KappaModel::table(std::move(t));
    }
    return c;
}

PumpOptions DeviceConfig::pump_options() const {
    PumpOptions o;
    o.kerr_scale = kerr_scale;
    o.stark_scale = stark_scale;
    o.np_max = pump_np_max;
    return o;
}

double DeviceConfig::target_G0() const { return from_dB(target_gain_dB); }

double DeviceConfig::model_delta(double delta_MHz) const {
    return to_angular((delta_MHz + frequency_offset_MHz) * 1e6);
}

void DeviceConfig::validate() const {
    try {
        circuit().validate();
    } catch (const InvalidSpec& e) {
        throw ConfigError(e.what());
    }
    if (M < 1) throw ConfigError("M must be at least 1");
    if (!(target_gain_dB > 0.0)) throw ConfigError("target_gain_dB must be positive");
    check_grid(flux_grid, "flux_grid");
    check_grid(delta_MHz_grid, "delta_MHz_grid");
    check_grid(pin_dBm_grid, "pin_dBm_grid");
    check_grid(np_grid, "np_grid");
    for (double n : np_grid)
        if (n < 0.0) throw ConfigError("np_grid values must be non-negative");
    if (pump_np_max && !(*pump_np_max > 0.0)) throw ConfigError("pump_np_max must be positive");
    if (pump_kappa_MHz && !(*pump_kappa_MHz > 0.0)) throw ConfigError("pump_kappa_MHz must be positive");
    if (!(kerr_scale >= 0.0) || !(stark_scale >= 0.0)) throw ConfigError("kerr_scale and stark_scale must be >= 0");
    if (kerr_free_rounds < 1) throw ConfigError("kerr_free.rounds must be at least 1");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    check_grid(oracle_stark_nbar, "oracle.stark_nbar");
}

DeviceConfig default_config() {
    DeviceConfig c;
    c.flux_grid = linspace(0.0, 0.5, 51);
    c.delta_MHz_grid = linspace(-400.0, 300.0, 71);
    c.pin_dBm_grid = linspace(-150.0, -70.0, 321);
    c.np_grid = linspace(0.0, 4000.0, 81);
    c.oracle_stark_nbar = {0.0, 25.0, 50.0, 100.0, 200.0};
    return c;
}

DeviceConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    DeviceConfig c = default_config();
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            const json& v = it.value();
            if (k == "Zc_ohm") c.Zc_ohm = number(v, "Zc_ohm");
            else if (k == "LJ_pH") c.LJ_pH = number(v, "LJ_pH");
            else if (k == "alpha") c.alpha = number(v, "alpha");
            else if (k == "M") {
                if (!v.is_number_integer()) throw ConfigError("M must be an integer");
                c.M = v.get<int>();
            }
            else if (k == "omega0_GHz") c.omega0_GHz = number(v, "omega0_GHz");
            else if (k == "allow_any_alpha") c.allow_any_alpha = boolean(v, "allow_any_alpha");
            else if (k == "kappa_MHz") c.kappa_MHz = number(v, "kappa_MHz");
            else if (k == "kappa_table") {
                if (!v.is_array()) throw ConfigError("kappa_table must be a list of [flux, kappa_MHz]");
                c.kappa_table.clear();
                for (const auto& row : v) {
                    if (!row.is_array() || row.size() != 2)
                        throw ConfigError("kappa_table rows must be [flux, kappa_MHz]");
                    c.kappa_table.emplace_back(number(row[0], "kappa_table"), number(row[1], "kappa_table"));
                }
            }
            else if (k == "target_gain_dB") c.target_gain_dB = number(v, "target_gain_dB");
            else if (k == "flux_grid") c.flux_grid = parse_grid(v, "flux_grid");
            else if (k == "delta_MHz_grid") c.delta_MHz_grid = parse_grid(v, "delta_MHz_grid");
            else if (k == "pin_dBm_grid") c.pin_dBm_grid = parse_grid(v, "pin_dBm_grid");
            else if (k == "np_grid") c.np_grid = parse_grid(v, "np_grid");
            else if (k == "pump_np_max") {
                if (v.is_null()) c.pump_np_max.reset(); else c.pump_np_max = number(v, "pump_np_max");
            }
            else if (k == "kerr_scale") c.kerr_scale = number(v, "kerr_scale");
            else if (k == "stark_scale") c.stark_scale = number(v, "stark_scale");
            else if (k == "frequency_offset_MHz") c.frequency_offset_MHz = number(v, "frequency_offset_MHz");
            else if (k == "kerr_mode") {
                const std::string s = v.is_string() ? v.get<std::string>() : "";
                if (s == "dressed") c.kerr_mode = KerrForm::Dressed;
                else if (s == "undressed") c.kerr_mode = KerrForm::Undressed;
                else throw ConfigError("kerr_mode must be \"dressed\" or \"undressed\"");
            }
            else if (k == "pump_kappa_MHz") {
                if (v.is_null()) c.pump_kappa_MHz.reset(); else c.pump_kappa_MHz = number(v, "pump_kappa_MHz");
            }
            else if (k == "oracle") {
                if (!v.is_object()) throw ConfigError("oracle must be an object");
                for (auto o = v.begin(); o != v.end(); ++o) {
                    if (o.key() == "gain") c.oracle_gain = boolean(o.value(), "oracle.gain");
                    else if (o.key() == "stark") c.oracle_stark = boolean(o.value(), "oracle.stark");
                    else if (o.key() == "stark_offset_MHz") c.oracle_stark_offset_MHz = number(o.value(), "oracle.stark_offset_MHz");
                    else if (o.key() == "stark_nbar") c.oracle_stark_nbar = parse_grid(o.value(), "oracle.stark_nbar");
                    else throw ConfigError("oracle: unknown key '" + o.key() + "'");
                }
            }
            else if (k == "kerr_free") {
                if (!v.is_object()) throw ConfigError("kerr_free must be an object");
                for (auto o = v.begin(); o != v.end(); ++o) {
                    if (o.key() == "rounds") c.kerr_free_rounds = o.value().get<int>();
                    else throw ConfigError("kerr_free: unknown key '" + o.key() + "'");
                }
            }
            else if (k == "seed_free") c.seed_free = boolean(v, "seed_free");
            else if (k == "workers") c.workers = v.get<int>();
            else if (k == "output_dir") {
                if (!v.is_string()) throw ConfigError("output_dir must be a string");
                c.output_dir = v.get<std::string>();
            }
            else throw ConfigError("unknown config key '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config value: ") + e.what());
    }
    c.validate();
    return c;
}

DeviceConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const DeviceConfig& c) {
    json j;
    j["Zc_ohm"] = c.Zc_ohm;
    j["LJ_pH"] = c.LJ_pH;
    j["alpha"] = c.alpha;
    j["M"] = c.M;
    j["omega0_GHz"] = c.omega0_GHz;
    j["allow_any_alpha"] = c.allow_any_alpha;
    j["kappa_MHz"] = c.kappa_MHz;
    j["kappa_table"] = json::array();
    for (const auto& [f, k] : c.kappa_table) j["kappa_table"].push_back({f, k});
    j["target_gain_dB"] = c.target_gain_dB;
    j["flux_grid"] = c.flux_grid;
    j["delta_MHz_grid"] = c.delta_MHz_grid;
    j["pin_dBm_grid"] = c.pin_dBm_grid;
    j["np_grid"] = c.np_grid;
    j["pump_np_max"] = c.pump_np_max ? json(*c.pump_np_max) : json(nullptr);
    j["kerr_scale"] = c.kerr_scale;
    j["stark_scale"] = c.stark_scale;
    j["frequency_offset_MHz"] = c.frequency_offset_MHz;
    j["kerr_mode"] = c.kerr_mode == KerrForm::Dressed ? "dressed" : "undressed";
    j["pump_kappa_MHz"] = c.pump_kappa_MHz ? json(*c.pump_kappa_MHz) : json(nullptr);
    j["oracle"] = {{"gain", c.oracle_gain},
                   {"stark", c.oracle_stark},
                   {"stark_offset_MHz", c.oracle_stark_offset_MHz},
                   {"stark_nbar", c.oracle_stark_nbar}};
    j["kerr_free"] = {{"rounds", c.kerr_free_rounds}};
    j["seed_free"] = c.seed_free;
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;
    return j;
}

std::string config_hash(const DeviceConfig& c) {
    // Scheduling and destination do not change the data.
    json j = config_to_json(c);
    j.erase("workers");
    j.erase("output_dir");
    const std::string s = j.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace spa
