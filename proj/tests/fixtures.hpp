#pragma once

// Small tones and frames at fs = 32768 Hz, L = 4096, shared by the bound tests
// and the acceptance binary.

#include "gscat/scattering.hpp"
#include "gscat/signal_model.hpp"

namespace fixture {

inline constexpr double fs = 32768.0;
inline constexpr std::size_t length = 4096;

inline std::vector<gscat::LayerSpec> desk_specs() {
    using gscat::make_window;
    using gscat::WindowKind;
    return {
        {make_window(WindowKind::gaussian, 256, 48), 32, 256, 0},
        {make_window(WindowKind::gaussian, 32, 8), 4, 32, 0},
        {make_window(WindowKind::gaussian, 8, 2), 2, 8, 0},
    };
}

inline gscat::TripletSequence desk_omega(bool normalize = true) {
    auto specs = desk_specs();
    return gscat::TripletSequence::build(specs, length, normalize);
}

inline gscat::Tone desk_tone(double xi0, std::size_t harmonics, gscat::EnvelopeSpec env) {
    gscat::Tone t;
    t.xi0_hz = xi0;
    t.n_harmonics = harmonics;
    t.fs = fs;
    t.duration_s = static_cast<double>(length) / fs;
    t.edge_fade_s = 0.002;
    t.envelopes = {env};
    return t;
}

inline gscat::EnvelopeSpec smooth_env() {
    gscat::EnvelopeSpec e;
    e.kind = gscat::EnvelopeKind::smooth_adsr;
    e.onset_s = 0.01;
    e.attack_s = 0.01;
    e.decay_s = 0.02;
    e.sustain_level = 0.7;
    e.release_s = 0.02;
    return e;
}

inline gscat::EnvelopeSpec sharp_env() {
    gscat::EnvelopeSpec e;
    e.kind = gscat::EnvelopeKind::sharp_attack;
    e.onset_s = 0.03;
    e.sustain_level = 0.7;
    e.release_s = 0.02;
    return e;
}

inline gscat::EnvelopeSpec am_env() {
    gscat::EnvelopeSpec e;
    e.kind = gscat::EnvelopeKind::amplitude_modulated;
    e.onset_s = 0.01;
    e.attack_s = 0.01;
    e.release_s = 0.02;
    e.rate_hz = 40.0;
    e.depth = 1.0;
    return e;
}

} // namespace fixture
