#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmsm/motor.hpp"
#include "pmsm/sim.hpp"

namespace pmsm {

/// Raised on any malformed or incomplete configuration; the message names
/// the offending key and, when known, the line.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A full run description: machine, scenario, output disposition.
struct RunConfig {
    MotorParams motor{};
    Scenario scenario{};
    std::string outputPath;  ///< empty means CLI --out (or stdout-only report)
    bool report = true;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct ConfigEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

using ConfigMap = std::map<std::string, ConfigEntry>;

inline ConfigMap tokenize_config(const std::string& text) {
    ConfigMap entries;
    std::istringstream in(text);
    std::string raw;
    int lineNo = 0;
    while (std::getline(in, raw)) {
        ++lineNo;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineNo) + ": empty key");
        }
        if (entries.count(key)) {
            throw ConfigError("line " + std::to_string(lineNo) + ": duplicate key " + key);
        }
        entries[key] = ConfigEntry{value, lineNo, false};
    }
    return entries;
}

inline double parse_double(const std::string& key, const ConfigEntry& e) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(e.line) + ": key " + key +
                          ": not a number: '" + e.value + "'");
    }
}

inline std::vector<double> parse_doubles(const std::string& key, const ConfigEntry& e) {
    std::istringstream in(e.value);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) {
        throw ConfigError("line " + std::to_string(e.line) + ": key " + key +
                          ": expected whitespace-separated numbers");
    }
    return out;
}

inline bool parse_bool(const std::string& key, const ConfigEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError("line " + std::to_string(e.line) + ": key " + key +
                      ": expected true or false");
}

class ConfigReader {
  public:
    explicit ConfigReader(const std::string& text) : entries_(tokenize_config(text)) {}

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    double require_double(const std::string& key) { return parse_double(key, require(key)); }

    std::optional<double> optional_double(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return parse_double(key, take(key));
    }

    std::string require_string(const std::string& key) { return require(key).value; }

    std::optional<std::string> optional_string(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return take(key).value;
    }

    std::optional<bool> optional_bool(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const ConfigEntry e = take(key);
        return parse_bool(key, e);
    }

    std::optional<std::vector<double>> optional_doubles(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const ConfigEntry e = take(key);
        return parse_doubles(key, e);
    }

    /// Every key must have been consumed; otherwise the first leftover is
    /// reported as unknown.
    void reject_unknown() const {
        for (const auto& [key, e] : entries_) {
            if (!e.used) {
                throw ConfigError("line " + std::to_string(e.line) + ": unknown key " + key);
            }
        }
    }

  private:
    ConfigEntry require(const std::string& key) {
        if (!has(key)) throw ConfigError("missing required key " + key);
        return take(key);
    }

    ConfigEntry take(const std::string& key) {
        auto& e = entries_.at(key);
        e.used = true;
        return e;
    }

    ConfigMap entries_;
};

inline Profile parse_profile(ConfigReader& r, const std::string& section) {
    const std::string kindKey = section + ".kind";
    const std::string kind = r.require_string(kindKey);
    if (kind == "constant") {
        Profile p = Profile::constant(r.require_double(section + ".value"));
        return p;
    }
    if (kind == "piecewise-linear") {
        const std::string pointsKey = section + ".points";
        const std::string text = r.require_string(pointsKey);
        std::vector<std::pair<double, double>> pts;
        std::istringstream in(text);
        std::string chunk;
        while (std::getline(in, chunk, ',')) {
            std::istringstream pair(chunk);
            double t, v;
            if (!(pair >> t >> v)) {
                throw ConfigError("key " + pointsKey + ": expected 'time value' pairs");
            }
            std::string rest;
            if (pair >> rest) {
                throw ConfigError("key " + pointsKey + ": expected 'time value' pairs");
            }
            pts.emplace_back(t, v);
        }
        try {
            return Profile::piecewise(std::move(pts));
        } catch (const std::invalid_argument& err) {
            throw ConfigError("key " + pointsKey + ": " + err.what());
        }
    }
    throw ConfigError("key " + kindKey + ": expected constant or piecewise-linear");
}

inline MotorParams parse_motor_block(ConfigReader& r) {
    MotorParams p;
    p.Ld = r.require_double("motor.Ld");
    p.Lq = r.require_double("motor.Lq");
    p.Rs = r.require_double("motor.Rs");
    p.Rm = r.require_double("motor.Rm");
    p.J = r.require_double("motor.J");
    p.np = r.require_double("motor.np");
    p.Phi = r.require_double("motor.Phi");
    try {
        p.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    return p;
}

}  // namespace detail

/// Parse a motor-parameters block, permitting (and ignoring) the scenario
/// sections a full run config would carry.
inline MotorParams parse_motor_config(const std::string& text) {
    detail::ConfigReader r(text);
    return detail::parse_motor_block(r);
}

inline RunConfig parse_config(const std::string& text) {
    detail::ConfigReader r(text);
    RunConfig cfg;
    cfg.motor = detail::parse_motor_block(r);

    const std::string id = r.require_string("scenario.id");
    if (id == "C1") cfg.scenario.id = ScenarioId::C1;
    else if (id == "C2") cfg.scenario.id = ScenarioId::C2;
    else if (id == "C3") cfg.scenario.id = ScenarioId::C3;
    else if (id == "C4") cfg.scenario.id = ScenarioId::C4;
    else throw ConfigError("key scenario.id: expected one of C1, C2, C3, C4");

    cfg.scenario.dt = r.require_double("scenario.dt");
    cfg.scenario.horizon = r.require_double("scenario.horizon");
    if (auto d = r.optional_double("scenario.decimation")) {
        cfg.scenario.decimation = static_cast<int>(*d);
    }
    if (auto x0 = r.optional_doubles("scenario.x0")) {
        if (x0->size() != 3) throw ConfigError("key scenario.x0: expected 3 numbers");
        cfg.scenario.x0 = MotorState{(*x0)[0], (*x0)[1], (*x0)[2]};
    }

    cfg.scenario.speedRef = detail::parse_profile(r, "speed_ref");
    cfg.scenario.loadTorque = detail::parse_profile(r, "load_torque");

    auto& g = cfg.scenario.gains;
    g.KP = r.require_double("gains.kp") * Mat2::Identity();
    g.KI = r.require_double("gains.ki") * Mat2::Identity();
    const ScenarioId sid = cfg.scenario.id;
    const bool needsObserver = sid == ScenarioId::C2 || sid == ScenarioId::C3;
    if (needsObserver) g.ell = r.require_double("gains.ell");
    else if (auto v = r.optional_double("gains.ell")) g.ell = *v;
    if (sid == ScenarioId::C3) {
        g.gamma = r.require_double("gains.gamma");
        g.alpha = r.require_double("gains.alpha");
        g.beta = r.require_double("gains.beta");
    } else {
        if (auto v = r.optional_double("gains.gamma")) g.gamma = *v;
        if (auto v = r.optional_double("gains.alpha")) g.alpha = *v;
        if (auto v = r.optional_double("gains.beta")) g.beta = *v;
    }
    if (sid == ScenarioId::C4) {
        g.aP = r.require_double("gains.ap");
        g.aI = r.require_double("gains.ai");
    } else {
        if (auto v = r.optional_double("gains.ap")) g.aP = *v;
        if (auto v = r.optional_double("gains.ai")) g.aI = *v;
    }

    auto& init = cfg.scenario.init;
    if (auto xc = r.optional_doubles("init.xc")) {
        if (xc->size() != 2) throw ConfigError("key init.xc: expected 2 numbers");
        init.xc0 = Vec2((*xc)[0], (*xc)[1]);
    }
    if (auto v = r.optional_double("init.chi")) init.chi0 = *v;
    if (auto v = r.optional_double("init.rm_hat")) init.rmHat0 = *v;
    if (auto v = r.optional_double("init.outer_chi")) init.outerChi0 = *v;
    if (auto w = r.optional_doubles("init.filters")) {
        if (w->size() != 4) throw ConfigError("key init.filters: expected 4 numbers");
        init.filters0 = Eigen::Vector4d((*w)[0], (*w)[1], (*w)[2], (*w)[3]);
    }
    if (auto v = r.optional_bool("init.at_equilibrium")) init.atEquilibrium = *v;

    if (auto v = r.optional_string("output.path")) cfg.outputPath = *v;
    if (auto v = r.optional_bool("output.report")) cfg.report = *v;

    r.reject_unknown();
    try {
        cfg.scenario.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    return cfg;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void serialize_profile(std::ostream& os, const std::string& section, const Profile& p) {
    if (p.kind == Profile::Kind::Constant) {
        os << section << ".kind = constant\n";
        os << section << ".value = " << fmt_double(p.value) << "\n";
    } else {
        os << section << ".kind = piecewise-linear\n";
        os << section << ".points = ";
        for (std::size_t i = 0; i < p.points.size(); ++i) {
            if (i) os << ", ";
            os << fmt_double(p.points[i].first) << " " << fmt_double(p.points[i].second);
        }
        os << "\n";
    }
}

}  // namespace detail

/// Canonical text form; parsing it back yields an identical configuration.
inline std::string serialize_config(const RunConfig& cfg) {
    using detail::fmt_double;
    std::ostringstream os;
    const auto& p = cfg.motor;
    os << "motor.Ld = " << fmt_double(p.Ld) << "\n";
    os << "motor.Lq = " << fmt_double(p.Lq) << "\n";
    os << "motor.Rs = " << fmt_double(p.Rs) << "\n";
    os << "motor.Rm = " << fmt_double(p.Rm) << "\n";
    os << "motor.J = " << fmt_double(p.J) << "\n";
    os << "motor.np = " << fmt_double(p.np) << "\n";
    os << "motor.Phi = " << fmt_double(p.Phi) << "\n";

    const auto& sc = cfg.scenario;
    os << "scenario.id = " << to_string(sc.id) << "\n";
    os << "scenario.dt = " << fmt_double(sc.dt) << "\n";
    os << "scenario.horizon = " << fmt_double(sc.horizon) << "\n";
    os << "scenario.decimation = " << sc.decimation << "\n";
    os << "scenario.x0 = " << fmt_double(sc.x0.id) << " " << fmt_double(sc.x0.iq) << " "
       << fmt_double(sc.x0.omega) << "\n";
    detail::serialize_profile(os, "speed_ref", sc.speedRef);
    detail::serialize_profile(os, "load_torque", sc.loadTorque);

    const auto& g = sc.gains;
    os << "gains.kp = " << fmt_double(g.KP(0, 0)) << "\n";
    os << "gains.ki = " << fmt_double(g.KI(0, 0)) << "\n";
    os << "gains.ell = " << fmt_double(g.ell) << "\n";
    os << "gains.gamma = " << fmt_double(g.gamma) << "\n";
    os << "gains.alpha = " << fmt_double(g.alpha) << "\n";
    os << "gains.beta = " << fmt_double(g.beta) << "\n";
    os << "gains.ap = " << fmt_double(g.aP) << "\n";
    os << "gains.ai = " << fmt_double(g.aI) << "\n";

    const auto& init = sc.init;
    os << "init.xc = " << fmt_double(init.xc0(0)) << " " << fmt_double(init.xc0(1)) << "\n";
    os << "init.chi = " << fmt_double(init.chi0) << "\n";
    os << "init.rm_hat = " << fmt_double(init.rmHat0) << "\n";
    os << "init.outer_chi = " << fmt_double(init.outerChi0) << "\n";
    os << "init.filters = " << fmt_double(init.filters0(0)) << " " << fmt_double(init.filters0(1))
       << " " << fmt_double(init.filters0(2)) << " " << fmt_double(init.filters0(3)) << "\n";
    os << "init.at_equilibrium = " << (init.atEquilibrium ? "true" : "false") << "\n";

    if (!cfg.outputPath.empty()) os << "output.path = " << cfg.outputPath << "\n";
    os << "output.report = " << (cfg.report ? "true" : "false") << "\n";
    return os.str();
}

}  // namespace pmsm
