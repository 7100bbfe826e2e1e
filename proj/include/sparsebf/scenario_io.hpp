// SPDX-License-Identifier: Apache-2.0
//
// Scenario files in YAML. Angles are in degrees, powers in dB and bands in
// normalized cycles/sample:
//
//   name: example
//   sensors: 20
//   carrier_ratio: 9.0909      # or fractional_bandwidth: 0.22
//   taps: 8
//   budget: 8
//   noise_db: 0
//   desired: {doa: 40, band: [-0.25, 0.25], power_db: 0}
//   jammers:
//     - {doa: 45, band: full, power_db: 30}
//     - {doa: 150, band: [0, 0], power_db: 30}

#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "sparsebf/signal_model.hpp"

namespace sparsebf {

class ScenarioError : public Error {
public:
    using Error::Error;
};

struct NamedScenario {
    std::string name;
    Scenario scenario;
};

namespace detail {

template <typename T>
T yaml_get(const YAML::Node& node, const char* key, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v) throw ScenarioError(where + ": missing key '" + key + "'");
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ScenarioError(where + ": key '" + key + "' has the wrong type");
    }
}

inline FrequencyBand parse_band(const YAML::Node& node, const std::string& where) {
    const YAML::Node b = node["band"];
    if (!b) throw ScenarioError(where + ": missing key 'band'");
    if (b.IsScalar()) {
        if (b.as<std::string>() == "full") return FrequencyBand::full();
        throw ScenarioError(where + ": band must be 'full' or [low, high] in cycles/sample");
    }
    if (!b.IsSequence() || b.size() != 2) throw ScenarioError(where + ": band must be [low, high]");
    try {
        const FrequencyBand fb = FrequencyBand::from_cycles(b[0].as<double>(), b[1].as<double>());
        fb.validate();
        return fb;
    } catch (const YAML::Exception&) {
        throw ScenarioError(where + ": band entries must be numbers");
    } catch (const DomainError& e) {
        throw ScenarioError(where + ": " + e.what());
    }
}

inline SourceSpec parse_source(const YAML::Node& node, const std::string& where) {
    if (!node.IsMap()) throw ScenarioError(where + ": expected a mapping");
    SourceSpec s;
    s.doa_deg = yaml_get<double>(node, "doa", where);
    s.band = parse_band(node, where);
    s.power = from_db(yaml_get<double>(node, "power_db", where));
    return s;
}

inline void emit_source(YAML::Emitter& out, const SourceSpec& s) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "doa" << YAML::Value << s.doa_deg;
    out << YAML::Key << "band";
    if (s.band.low == -1.0 && s.band.high == 1.0) {
        out << YAML::Value << "full";
    } else {
        out << YAML::Value << YAML::Flow << YAML::BeginSeq << s.band.low / 2.0 << s.band.high / 2.0 << YAML::EndSeq;
    }
    out << YAML::Key << "power_db" << YAML::Value << to_db(s.power) << YAML::EndMap;
}

}  // namespace detail

/// Reads the common grid keys shared by scenario and Monte Carlo files.
inline ArrayGrid parse_grid(const YAML::Node& root, const std::string& where) {
    ArrayGrid g;
    g.sensors = detail::yaml_get<int>(root, "sensors", where);
    const bool has_ratio = static_cast<bool>(root["carrier_ratio"]);
    const bool has_fb = static_cast<bool>(root["fractional_bandwidth"]);
    if (has_ratio == has_fb) throw ScenarioError(where + ": give exactly one of carrier_ratio, fractional_bandwidth");
    if (has_ratio) {
        g.carrier_ratio = detail::yaml_get<double>(root, "carrier_ratio", where);
    } else {
        // Full baseband width 2 omega_max over the carrier.
        const double fb = detail::yaml_get<double>(root, "fractional_bandwidth", where);
        if (!(fb > 0)) throw ScenarioError(where + ": fractional_bandwidth must be positive");
        g.carrier_ratio = 2.0 / fb;
    }
    return g;
}

inline NamedScenario parse_scenario(const YAML::Node& root, const std::string& where = "scenario") {
    if (!root.IsMap()) throw ScenarioError(where + ": top level must be a mapping");
    NamedScenario ns;
    ns.name = root["name"] ? root["name"].as<std::string>() : std::string("scenario");
    Scenario& sc = ns.scenario;
    sc.grid = parse_grid(root, where);
    sc.taps = detail::yaml_get<int>(root, "taps", where);
    sc.budget = detail::yaml_get<int>(root, "budget", where);
    sc.noise_var = from_db(root["noise_db"] ? detail::yaml_get<double>(root, "noise_db", where) : 0.0);
    if (!root["desired"]) throw ScenarioError(where + ": missing key 'desired'");
    sc.desired = detail::parse_source(root["desired"], where + ".desired");
    if (const YAML::Node js = root["jammers"]) {
        if (!js.IsSequence()) throw ScenarioError(where + ": jammers must be a list");
        for (std::size_t k = 0; k < js.size(); ++k)
            sc.jammers.push_back(detail::parse_source(js[k], where + ".jammers[" + std::to_string(k) + "]"));
    }
    try {
        sc.validate();
    } catch (const DomainError& e) {
        throw ScenarioError(where + ": " + e.what());
    }
    return ns;
}

inline NamedScenario parse_scenario(const std::string& text, const std::string& where = "scenario") {
    try {
        return parse_scenario(YAML::Load(text), where);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(where + ": " + e.what());
    }
}

inline NamedScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

inline void write_scenario(std::ostream& os, const Scenario& sc, const std::string& name = "scenario") {
    YAML::Emitter out;
    out.SetDoublePrecision(12);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << name;
    out << YAML::Key << "sensors" << YAML::Value << sc.grid.sensors;
    out << YAML::Key << "carrier_ratio" << YAML::Value << sc.grid.carrier_ratio;
    out << YAML::Key << "taps" << YAML::Value << sc.taps;
    out << YAML::Key << "budget" << YAML::Value << sc.budget;
    out << YAML::Key << "noise_db" << YAML::Value << to_db(sc.noise_var);
    out << YAML::Key << "desired" << YAML::Value;
    detail::emit_source(out, sc.desired);
    out << YAML::Key << "jammers" << YAML::Value << YAML::BeginSeq;
    for (const auto& j : sc.jammers) detail::emit_source(out, j);
    out << YAML::EndSeq << YAML::EndMap;
    os << out.c_str() << '\n';
}

}  // namespace sparsebf
