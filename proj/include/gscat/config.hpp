#pragma once

// Experiment configuration (JSON, "version": 1). Unknown keys are rejected;
// missing keys take the defaults below.

#include "gscat/errors.hpp"
#include "gscat/scattering.hpp"
#include "gscat/signal_model.hpp"
#include "gscat/windows.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace gscat {

struct LayerConfig {
    WindowKind window = WindowKind::gaussian;
    std::size_t length = 1;
    double shape = 1.0;
    std::size_t time_step = 1;
    std::size_t channels = 1;
    std::size_t atom_channel = 0;

    bool operator==(const LayerConfig&) const = default;
};

/// Sinusoidal deformation tau(t) = amplitude sin(2 pi rate t): seconds for an
/// envelope warp, cycles for a frequency modulation (shared by all harmonics).
struct DeformationConfig {
    DeformationKind kind = DeformationKind::none;
    double amplitude = 0.0;
    double rate_hz = 5.0;
    double eps = 0.1;
    double max_warp_s = 0.1;

    bool operator==(const DeformationConfig&) const = default;
};

struct ToneConfig {
    Tone tone;
    DeformationConfig deformation;

    bool operator==(const ToneConfig&) const = default;
};

struct ScatterConfig {
    std::size_t node_budget = 4'000'000;
    double prune_threshold = 0.0;

    bool operator==(const ScatterConfig&) const = default;
};

struct VerifyConfig {
    bool frames = true;
    bool prop1 = true;
    bool cor2 = true;
    bool cor3 = true;
    bool lemma_envelope = true;
    bool lemma_freqmod = true;
    bool contractivity = true;
    double decay_exponent = 3.0;
    double eps = 0.1;
    std::size_t trials = 10;

    bool operator==(const VerifyConfig&) const = default;
};

struct ExperimentConfig {
    int version = 1;
    std::vector<ToneConfig> tones;
    std::vector<LayerConfig> omega;
    std::size_t depth = 2;
    bool normalize = true;
    ScatterConfig scatter;
    VerifyConfig verify;
    std::string output_dir = "out";
    std::uint64_t seed = 1;

    bool operator==(const ExperimentConfig&) const = default;
};

inline std::string_view to_string(DeformationKind k) {
    switch (k) {
    case DeformationKind::none: return "none";
    case DeformationKind::envelope_warp: return "envelope_warp";
    case DeformationKind::frequency_mod: return "frequency_mod";
    }
    return "none";
}

inline DeformationKind parse_deformation_kind(std::string_view s) {
    if (s == "none") return DeformationKind::none;
    if (s == "envelope_warp") return DeformationKind::envelope_warp;
    if (s == "frequency_mod") return DeformationKind::frequency_mod;
    throw invalid_argument("unknown deformation kind '" + std::string(s) + "'");
}

/// Samples the configured deformation on the tone's grid.
inline Deformation materialize(const DeformationConfig& d, const Tone& tone) {
    if (d.kind == DeformationKind::none) return Deformation::identity();
    std::vector<double> tau(tone.length());
    for (std::size_t i = 0; i < tau.size(); ++i)
        tau[i] = d.amplitude * std::sin(2.0 * std::numbers::pi * d.rate_hz * static_cast<double>(i) / tone.fs);
    if (d.kind == DeformationKind::envelope_warp) return Deformation::envelope_warp(std::move(tau), d.max_warp_s);
    return Deformation::frequency_mod({std::move(tau)}, d.eps);
}

/// Layer 1: 40 ms gaussian, 25 Hz channels, 300 Hz frame rate at 44.1 kHz.
/// Layer 2: 5 Hz channels over the first-layer rate, so 20 Hz sits on channel 4.
inline std::vector<LayerConfig> default_omega() {
    return {
        {WindowKind::gaussian, 1764, 250.0, 147, 1764, 0},
        {WindowKind::gaussian, 144, 36.0, 10, 60, 0},
        {WindowKind::gaussian, 10, 3.0, 5, 10, 0},
    };
}

inline ExperimentConfig default_config() {
    ExperimentConfig c;
    c.omega = default_omega();

    ToneConfig adsr;
    adsr.tone.xi0_hz = 800.0;
    adsr.tone.n_harmonics = 15;
    EnvelopeSpec e;
    e.kind = EnvelopeKind::smooth_adsr;
    e.onset_s = 0.1;
    e.attack_s = 0.02;
    e.decay_s = 0.05;
    e.sustain_level = 0.7;
    e.release_s = 0.1;
    adsr.tone.envelopes = {e};
    adsr.deformation.kind = DeformationKind::frequency_mod;
    adsr.deformation.amplitude = 0.01;
    adsr.deformation.rate_hz = 5.0;
    adsr.deformation.eps = 0.1;

    ToneConfig am;
    am.tone.xi0_hz = 800.0;
    am.tone.n_harmonics = 15;
    EnvelopeSpec m;
    m.kind = EnvelopeKind::amplitude_modulated;
    m.onset_s = 0.1;
    m.attack_s = 0.05;
    m.release_s = 0.1;
    m.rate_hz = 20.0;
    m.depth = 1.0;
    am.tone.envelopes = {m};
    am.deformation.kind = DeformationKind::envelope_warp;
    am.deformation.amplitude = 0.01;
    am.deformation.rate_hz = 3.0;

    c.tones = {adsr, am};
    return c;
}

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw invalid_argument(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw invalid_argument("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            const auto& v = j.at(key);
            if (!v.is_number_integer() || v.template get<long long>() < 0)
                throw invalid_argument(where + "." + key + " must be a nonnegative integer");
            out = v.template get<T>();
        } else {
            out = j.at(key).template get<T>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw invalid_argument(where + "." + key + ": " + e.what());
    }
}

inline json envelope_to_json(const EnvelopeSpec& e) {
    return {{"kind", std::string(to_string(e.kind))},
            {"onset_s", e.onset_s},
            {"attack_s", e.attack_s},
            {"decay_s", e.decay_s},
            {"sustain_level", e.sustain_level},
            {"release_s", e.release_s},
            {"rate_hz", e.rate_hz},
            {"depth", e.depth},
            {"modulation", std::string(to_string(e.modulation))},
            {"peak", e.peak}};
}

inline EnvelopeSpec envelope_from_json(const json& j, const std::string& where) {
    check_keys(j, {"kind", "onset_s", "attack_s", "decay_s", "sustain_level", "release_s", "rate_hz", "depth",
                   "modulation", "peak"},
               where);
    EnvelopeSpec e;
    std::string kind = std::string(to_string(e.kind));
    std::string mod = std::string(to_string(e.modulation));
    read_field(j, "kind", kind, where);
    read_field(j, "modulation", mod, where);
    e.kind = parse_envelope_kind(kind);
    e.modulation = parse_modulation_shape(mod);
    read_field(j, "onset_s", e.onset_s, where);
    read_field(j, "attack_s", e.attack_s, where);
    read_field(j, "decay_s", e.decay_s, where);
    read_field(j, "sustain_level", e.sustain_level, where);
    read_field(j, "release_s", e.release_s, where);
    read_field(j, "rate_hz", e.rate_hz, where);
    read_field(j, "depth", e.depth, where);
    read_field(j, "peak", e.peak, where);
    return e;
}

inline json deformation_to_json(const DeformationConfig& d) {
    return {{"kind", std::string(to_string(d.kind))},
            {"amplitude", d.amplitude},
            {"rate_hz", d.rate_hz},
            {"eps", d.eps},
            {"max_warp_s", d.max_warp_s}};
}

inline DeformationConfig deformation_from_json(const json& j, const std::string& where) {
    check_keys(j, {"kind", "amplitude", "rate_hz", "eps", "max_warp_s"}, where);
    DeformationConfig d;
    std::string kind = "none";
    read_field(j, "kind", kind, where);
    d.kind = parse_deformation_kind(kind);
    read_field(j, "amplitude", d.amplitude, where);
    read_field(j, "rate_hz", d.rate_hz, where);
    read_field(j, "eps", d.eps, where);
    read_field(j, "max_warp_s", d.max_warp_s, where);
    return d;
}

inline json tone_to_json(const ToneConfig& t) {
    json envs = json::array();
    for (const auto& e : t.tone.envelopes) envs.push_back(envelope_to_json(e));
    return {{"xi0_hz", t.tone.xi0_hz},         {"n_harmonics", t.tone.n_harmonics},
            {"fs", t.tone.fs},                 {"duration_s", t.tone.duration_s},
            {"edge_fade_s", t.tone.edge_fade_s}, {"envelopes", envs},
            {"deformation", deformation_to_json(t.deformation)}};
}

inline ToneConfig tone_from_json(const json& j, const std::string& where) {
    check_keys(j, {"xi0_hz", "n_harmonics", "fs", "duration_s", "edge_fade_s", "envelopes", "deformation"}, where);
    ToneConfig t;
    read_field(j, "xi0_hz", t.tone.xi0_hz, where);
    read_field(j, "n_harmonics", t.tone.n_harmonics, where);
    read_field(j, "fs", t.tone.fs, where);
    read_field(j, "duration_s", t.tone.duration_s, where);
    read_field(j, "edge_fade_s", t.tone.edge_fade_s, where);
    if (j.contains("envelopes")) {
        const auto& envs = j.at("envelopes");
        if (!envs.is_array() || envs.empty()) throw invalid_argument(where + ".envelopes must be a nonempty array");
        t.tone.envelopes.clear();
        for (std::size_t i = 0; i < envs.size(); ++i)
            t.tone.envelopes.push_back(envelope_from_json(envs[i], where + ".envelopes[" + std::to_string(i) + "]"));
    }
    if (j.contains("deformation")) t.deformation = deformation_from_json(j.at("deformation"), where + ".deformation");
    return t;
}

inline json layer_to_json(const LayerConfig& l) {
    return {{"window", std::string(to_string(l.window))},
            {"length", l.length},
            {"shape", l.shape},
            {"time_step", l.time_step},
            {"channels", l.channels},
            {"atom_channel", l.atom_channel}};
}

inline LayerConfig layer_from_json(const json& j, const std::string& where) {
    check_keys(j, {"window", "length", "shape", "time_step", "channels", "atom_channel"}, where);
    LayerConfig l;
    std::string kind = "gaussian";
    read_field(j, "window", kind, where);
    l.window = parse_window_kind(kind);
    if (l.window == WindowKind::custom) throw invalid_argument(where + ".window cannot be custom in a config");
    read_field(j, "length", l.length, where);
    read_field(j, "shape", l.shape, where);
    read_field(j, "time_step", l.time_step, where);
    read_field(j, "channels", l.channels, where);
    read_field(j, "atom_channel", l.atom_channel, where);
    return l;
}

} // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    using nlohmann::json;
    json tones = json::array();
    for (const auto& t : c.tones) tones.push_back(detail::tone_to_json(t));
    json omega = json::array();
    for (const auto& l : c.omega) omega.push_back(detail::layer_to_json(l));
    return {{"version", c.version},
            {"tones", tones},
            {"omega", omega},
            {"depth", c.depth},
            {"normalize", c.normalize},
            {"scatter", {{"node_budget", c.scatter.node_budget}, {"prune_threshold", c.scatter.prune_threshold}}},
            {"verify",
             {{"frames", c.verify.frames},
              {"prop1", c.verify.prop1},
              {"cor2", c.verify.cor2},
              {"cor3", c.verify.cor3},
              {"lemma_envelope", c.verify.lemma_envelope},
              {"lemma_freqmod", c.verify.lemma_freqmod},
              {"contractivity", c.verify.contractivity},
              {"decay_exponent", c.verify.decay_exponent},
              {"eps", c.verify.eps},
              {"trials", c.verify.trials}}},
            {"output_dir", c.output_dir},
            {"seed", c.seed}};
}

/// Parses and validates a configuration. Schema violations throw invalid_argument.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::read_field;
    detail::check_keys(j, {"version", "tones", "omega", "depth", "normalize", "scatter", "verify", "output_dir", "seed"},
                       "config");
    if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != 1)
        throw invalid_argument("config must declare \"version\": 1");
    ExperimentConfig c;
    c.omega.clear();
    if (j.contains("tones")) {
        const auto& tones = j.at("tones");
        if (!tones.is_array()) throw invalid_argument("config.tones must be an array");
        for (std::size_t i = 0; i < tones.size(); ++i)
            c.tones.push_back(detail::tone_from_json(tones[i], "tones[" + std::to_string(i) + "]"));
    }
    if (j.contains("omega")) {
        const auto& omega = j.at("omega");
        if (!omega.is_array()) throw invalid_argument("config.omega must be an array");
        for (std::size_t i = 0; i < omega.size(); ++i)
            c.omega.push_back(detail::layer_from_json(omega[i], "omega[" + std::to_string(i) + "]"));
    } else {
        c.omega = default_omega();
    }
    read_field(j, "depth", c.depth, "config");
    read_field(j, "normalize", c.normalize, "config");
    read_field(j, "output_dir", c.output_dir, "config");
    read_field(j, "seed", c.seed, "config");
    if (j.contains("scatter")) {
        const auto& s = j.at("scatter");
        detail::check_keys(s, {"node_budget", "prune_threshold"}, "scatter");
        read_field(s, "node_budget", c.scatter.node_budget, "scatter");
        read_field(s, "prune_threshold", c.scatter.prune_threshold, "scatter");
    }
    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        detail::check_keys(v, {"frames", "prop1", "cor2", "cor3", "lemma_envelope", "lemma_freqmod", "contractivity",
                               "decay_exponent", "eps", "trials"},
                           "verify");
        read_field(v, "frames", c.verify.frames, "verify");
        read_field(v, "prop1", c.verify.prop1, "verify");
        read_field(v, "cor2", c.verify.cor2, "verify");
        read_field(v, "cor3", c.verify.cor3, "verify");
        read_field(v, "lemma_envelope", c.verify.lemma_envelope, "verify");
        read_field(v, "lemma_freqmod", c.verify.lemma_freqmod, "verify");
        read_field(v, "contractivity", c.verify.contractivity, "verify");
        read_field(v, "decay_exponent", c.verify.decay_exponent, "verify");
        read_field(v, "eps", c.verify.eps, "verify");
        read_field(v, "trials", c.verify.trials, "verify");
    }
    return c;
}

/// Structural checks that do not need a signal: tones valid, layers valid,
/// atom channels in range, depth supported by the layer count.
inline void validate(const ExperimentConfig& c) {
    if (c.omega.empty()) throw invalid_argument("omega needs at least one layer");
    for (std::size_t i = 0; i < c.omega.size(); ++i) {
        const auto& l = c.omega[i];
        const std::string where = "omega[" + std::to_string(i) + "]";
        if (l.length == 0 || l.time_step == 0 || l.channels == 0)
            throw invalid_argument(where + ": length, time_step and channels must be positive");
        if (l.window == WindowKind::gaussian && !(l.shape > 0))
            throw invalid_argument(where + ": gaussian shape must be positive");
        if (l.atom_channel >= l.channels)
            throw invalid_argument(where + ": atom_channel " + std::to_string(l.atom_channel) +
                                   " out of range for " + std::to_string(l.channels) + " channels");
    }
    if (c.depth + 1 > c.omega.size())
        throw invalid_argument("depth " + std::to_string(c.depth) + " needs " + std::to_string(c.depth + 1) +
                               " layers, omega has " + std::to_string(c.omega.size()));
    if (!(c.verify.decay_exponent > 1.0)) throw invalid_argument("verify.decay_exponent must exceed 1");
    for (const auto& t : c.tones) {
        t.tone.validate();
        validate_deformation(t.tone, materialize(t.deformation, t.tone));
    }
}

inline std::vector<LayerSpec> layer_specs(const std::vector<LayerConfig>& layers) {
    std::vector<LayerSpec> out;
    for (const auto& l : layers)
        out.push_back({make_window(l.window, l.length, l.shape), l.time_step, l.channels, l.atom_channel});
    return out;
}

inline TripletSequence build_omega(const ExperimentConfig& c, std::size_t input_length) {
    auto specs = layer_specs(c.omega);
    return TripletSequence::build(specs, input_length, c.normalize);
}

/// Applies "a.b.0.c=value" to an existing key. The value is parsed as JSON
/// when possible, otherwise taken as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw invalid_argument("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw invalid_argument("override key '" + key + "' has an empty component");
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(part, &used);
                if (used != part.size()) throw std::invalid_argument(part);
            } catch (const std::exception&) {
                throw invalid_argument("override key '" + key + "': '" + part + "' is not an array index");
            }
            if (idx >= node->size()) throw invalid_argument("override key '" + key + "': index out of range");
            node = &(*node)[idx];
        } else if (node->is_object()) {
            if (!node->contains(part)) throw invalid_argument("unknown key '" + key + "' in override");
            node = &(*node)[part];
        } else {
            throw invalid_argument("override key '" + key + "' descends into a scalar");
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    *node = value;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config " + path.string(), path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
    nlohmann::json j = read_json_file(path);
    for (const auto& o : overrides) apply_override(j, o);
    return config_from_json(j);
}

inline void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing", path.string());
    out << to_json(c).dump(2) << '\n';
    if (!out) throw io_error("failed writing " + path.string(), path.string());
}

} // namespace gscat
