#pragma once

// The verification suite and the figure experiments driven by an
// ExperimentConfig.

#include "gscat/bounds.hpp"
#include "gscat/config.hpp"
#include "gscat/io.hpp"
#include "gscat/scattering.hpp"
#include "gscat/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace gscat {

// ---------------------------------------------------------------------------
// Random inputs

inline cvec random_signal(std::mt19937_64& rng, std::size_t len) {
    std::normal_distribution<double> normal;
    cvec x(len);
    for (auto& v : x) v = {normal(rng), normal(rng)};
    return x;
}

/// Smooth warp: a few random sinusoids rescaled to the requested sup-norm.
inline std::vector<double> random_smooth_function(std::mt19937_64& rng, const Tone& tone, double sup,
                                                  double max_rate_hz = 8.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t len = tone.length();
    std::vector<double> tau(len, 0.0);
    for (int c = 0; c < 3; ++c) {
        const double rate = 0.5 + (max_rate_hz - 0.5) * unit(rng);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        const double amp = 0.2 + unit(rng);
        for (std::size_t i = 0; i < len; ++i)
            tau[i] += amp * std::sin(2.0 * std::numbers::pi * rate * static_cast<double>(i) / tone.fs + phase);
    }
    const double m = sup_norm(tau);
    for (auto& v : tau) v *= sup / m;
    return tau;
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyResult {
    std::vector<BoundReport> reports;
    std::vector<std::string> notes;

    bool all_passed() const {
        return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.passed; });
    }
};

/// Coefficient-energy ratio against the frame bounds over random signals.
inline std::vector<BoundReport> frame_energy_check(const GaborFrame& frame, std::size_t signals, std::mt19937_64& rng,
                                                   const std::string& label) {
    const FrameBounds fb = frame_bounds(frame);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < signals; ++i) {
        const cvec x = random_signal(rng, frame.signal_length());
        const CoefficientGrid c = dgt(x, frame);
        double num = 0.0, den = 0.0;
        for (const auto& v : c.values()) num += std::norm(v);
        for (const auto& v : x) den += std::norm(v);
        lo = std::min(lo, num / den);
        hi = std::max(hi, num / den);
    }
    const double tol = 1e-8 * fb.upper;
    return {make_report("frame.upper", hi, fb.upper, tol, label),
            make_report("frame.lower", fb.lower, lo, tol, label)};
}

inline VerifyResult run_verification(const ExperimentConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    VerifyResult out;
    std::mt19937_64 rng(seed);
    const VerifyConfig& v = cfg.verify;
    Prop1Options p1;
    p1.s = v.decay_exponent;
    Cor2Options c2;
    c2.s = v.decay_exponent;

    if (cfg.tones.empty()) out.notes.push_back("no tones configured; only frame checks run");

    std::map<std::size_t, TripletSequence> omegas;
    auto omega_for = [&](std::size_t len) -> const TripletSequence& {
        auto it = omegas.find(len);
        if (it == omegas.end()) it = omegas.emplace(len, build_omega(cfg, len)).first;
        return it->second;
    };

    for (std::size_t ti = 0; ti < cfg.tones.size(); ++ti) {
        const Tone& tone = cfg.tones[ti].tone;
        const std::string id = "tone" + std::to_string(ti);
        const TripletSequence& omega = omega_for(tone.length());

        if (v.frames && ti == 0) {
            for (std::size_t l = 0; l < omega.size(); ++l) {
                const std::string label = "layer=" + std::to_string(l + 1) + " " + omega.frame(l).id();
                for (auto& r : frame_energy_check(omega.frame(l), 20, rng, label)) out.reports.push_back(r);
                const Layer& layer = omega.layers()[l];
                out.reports.push_back(make_report("frame.contractive", layer.upper_bound + layer.output_norm_sq, 1.0,
                                                  1e-9, label));
            }
        }

        const double freq = tone.normalized_frequency(1);
        const auto j0 = static_cast<std::size_t>(std::lround(freq * static_cast<double>(omega.frame(0).channels()))) %
                        omega.frame(0).channels();
        if (v.prop1) {
            auto r = prop1_check(tone, omega.frame(0), p1);
            r.context = id + " " + r.context;
            out.reports.push_back(r);
        }
        if (v.cor2 && omega.size() >= 2) {
            auto r = cor2_check(tone, omega.frame(0), omega.frame(1), c2);
            r.context = id + " " + r.context;
            out.reports.push_back(r);
        }
        if (v.cor3 && omega.size() >= 3) {
            auto res = cor3_smoothed_outputs(tone, omega, j0, p1, c2);
            res.layer1.context = id + " " + res.layer1.context;
            res.layer2.context = id + " " + res.layer2.context;
            out.reports.push_back(res.layer1);
            out.reports.push_back(res.layer2);
        }

        if (v.lemma_envelope) {
            bool continuous = true;
            for (std::size_t n = 1; n <= tone.n_harmonics && continuous; ++n)
                continuous = !envelope_has_jump(tone, n) && tone.edge_fade_s > 0.0;
            if (!continuous) {
                out.notes.push_back(id + ": envelope warp check skipped (envelope is discontinuous)");
            } else {
                std::vector<double> cn;
                for (std::size_t n = 1; n <= tone.n_harmonics; ++n)
                    cn.push_back(envelope_decay_constant(tone, n, v.decay_exponent));
                if (cfg.tones[ti].deformation.kind == DeformationKind::envelope_warp) {
                    auto r = lemma_envelope_bound(tone, materialize(cfg.tones[ti].deformation, tone), cn,
                                                  v.decay_exponent);
                    r.context = id + " configured " + r.context;
                    out.reports.push_back(r);
                }
                std::uniform_real_distribution<double> sup(0.0005, 0.02);
                for (std::size_t t = 0; t < v.trials; ++t) {
                    auto warp = Deformation::envelope_warp(random_smooth_function(rng, tone, sup(rng)));
                    auto r = lemma_envelope_bound(tone, warp, cn, v.decay_exponent);
                    r.context = id + " trial=" + std::to_string(t) + " " + r.context;
                    out.reports.push_back(r);
                }
            }
        }
        if (v.lemma_freqmod) {
            if (cfg.tones[ti].deformation.kind == DeformationKind::frequency_mod) {
                auto r = lemma_freqmod_bound(tone, materialize(cfg.tones[ti].deformation, tone));
                r.context = id + " configured " + r.context;
                out.reports.push_back(r);
            }
            const double limit = freqmod_threshold(v.eps);
            std::uniform_real_distribution<double> frac(0.05, 0.95);
            for (std::size_t t = 0; t < v.trials; ++t) {
                auto tau = random_smooth_function(rng, tone, frac(rng) * limit);
                auto r = lemma_freqmod_bound(tone, Deformation::frequency_mod({std::move(tau)}, v.eps));
                r.context = id + " trial=" + std::to_string(t) + " " + r.context;
                out.reports.push_back(r);
            }
        }
        if (v.contractivity) {
            const std::size_t depth = std::min(cfg.depth, omega.max_depth());
            const auto f = synthesize(tone);
            const auto g = deform(tone, materialize(cfg.tones[ti].deformation, tone));
            auto r = contractivity_check(f, g, omega, depth, {cfg.scatter.node_budget, cfg.scatter.prune_threshold});
            r.context = id + " deformed " + r.context;
            out.reports.push_back(r);
            const cvec zero(f.size());
            r = contractivity_check(f, zero, omega, depth, {cfg.scatter.node_budget, cfg.scatter.prune_threshold});
            r.context = id + " zero " + r.context;
            out.reports.push_back(r);
            for (std::size_t t = 0; t < std::min<std::size_t>(v.trials, 3); ++t) {
                const cvec a = random_signal(rng, f.size());
                const cvec b = random_signal(rng, f.size());
                r = contractivity_check(a, b, omega, depth, {cfg.scatter.node_budget, cfg.scatter.prune_threshold});
                r.context = id + " random trial=" + std::to_string(t) + " " + r.context;
                out.reports.push_back(r);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Figure experiments

struct FigureTones {
    Tone sharp;     // sharp attack, sustain 0.5
    Tone modulated; // soft attack, 20 Hz amplitude modulation with mean 0.5
    Tone low;       // 800 Hz, 15 harmonics
    Tone high;      // 1060 Hz, 10 harmonics
};

inline FigureTones figure_tones() {
    FigureTones t;
    EnvelopeSpec sharp;
    sharp.kind = EnvelopeKind::sharp_attack;
    sharp.onset_s = 0.1;
    sharp.sustain_level = 0.5;
    sharp.release_s = 0.1;
    t.sharp.xi0_hz = 800.0;
    t.sharp.n_harmonics = 15;
    t.sharp.envelopes = {sharp};

    EnvelopeSpec am;
    am.kind = EnvelopeKind::amplitude_modulated;
    am.onset_s = 0.1;
    am.attack_s = 0.05;
    am.rate_hz = 20.0;
    am.depth = 1.0;
    am.release_s = 0.1;
    t.modulated = t.sharp;
    t.modulated.envelopes = {am};

    EnvelopeSpec adsr;
    adsr.kind = EnvelopeKind::smooth_adsr;
    adsr.onset_s = 0.1;
    adsr.attack_s = 0.02;
    adsr.decay_s = 0.05;
    adsr.sustain_level = 0.7;
    adsr.release_s = 0.1;
    t.low.xi0_hz = 800.0;
    t.low.n_harmonics = 15;
    t.low.envelopes = {adsr};
    t.high = t.low;
    t.high.xi0_hz = 1060.0;
    t.high.n_harmonics = 10;
    return t;
}

inline std::size_t channel_for(double hz, double fs, std::size_t channels) {
    return static_cast<std::size_t>(std::lround(hz / fs * static_cast<double>(channels))) % channels;
}

struct FigureMetrics {
    // Envelope experiment: sharp-attack tone followed by the modulated tone.
    double smoothed_relative_distance = 0.0;
    double raw_relative_distance = 0.0;
    std::size_t compared_frames = 0;
    std::size_t am_peak_channel = 0;
    std::size_t am_expected_channel = 0;
    double am_peak_over_neighbors_db = 0.0;
    // Pitch experiment: the two harmonic tones.
    std::vector<std::size_t> low_peaks, low_expected, high_peaks, high_expected;
    // Slice experiment: second-layer slices, energy of the other tone relative to the own tone.
    double low_slice_leak = 0.0;
    double high_slice_leak = 0.0;
    double shared_low_share = 0.0;  // tone-1 energy / max of the two at the shared harmonic
    double shared_high_share = 0.0; // tone-2 energy / max of the two
    std::size_t shared_channel = 0;
};

struct FigureOutputs {
    MagnitudeGrid fig1_gabor, fig1_layer1, fig1_layer2;
    MagnitudeGrid fig2_gabor, fig2_layer1;
    MagnitudeGrid fig3_slices;
    FigureMetrics metrics;
};

namespace detail {

// Smoothed first-layer outputs (U_1[j] f * phi_1)(a_2 m) for every channel j.
inline MagnitudeGrid smoothed_layer1(const MagnitudeGrid& layer1, const TripletSequence& omega) {
    const Layer& next = omega.layers()[1];
    MagnitudeGrid out(layer1.channels(), next.frame.frames(), 1, omega.frame(0).id());
    for (std::size_t j = 0; j < layer1.channels(); ++j) {
        const rvec s = smooth(layer1.row(j), next.frame, next.atom_channel);
        for (std::size_t m = 0; m < s.size(); ++m) out(j, m) = s[m];
    }
    return out;
}

inline double band_energy(const MagnitudeGrid& g, std::size_t h, std::size_t m0, std::size_t m1) {
    double e = 0.0;
    for (std::size_t m = m0; m < m1; ++m) e += g(h, m) * g(h, m);
    return e;
}

inline double slice_energy(const MagnitudeGrid& g, std::size_t m0, std::size_t m1) {
    double e = 0.0;
    for (std::size_t h = 0; h < g.channels(); ++h) e += band_energy(g, h, m0, m1);
    return e;
}

// Local row-energy argmax within half a harmonic spacing of each harmonic.
inline std::vector<std::size_t> harmonic_peaks(const MagnitudeGrid& layer1, const Tone& tone, std::size_t k0,
                                               std::size_t k1) {
    const double channels = static_cast<double>(layer1.channels());
    std::vector<std::size_t> out;
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) {
        const double centre = tone.normalized_frequency(n) * channels;
        const double half = 0.5 * tone.normalized_frequency(1) * channels;
        const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(centre - half)));
        const auto hi = static_cast<std::size_t>(std::min(channels - 1.0, std::floor(centre + half)));
        std::size_t best = lo;
        double best_e = -1.0;
        for (std::size_t j = lo; j <= hi; ++j) {
            double e = 0.0;
            for (std::size_t k = k0; k < k1; ++k) e += layer1(j, k) * layer1(j, k);
            if (e > best_e) {
                best_e = e;
                best = j;
            }
        }
        out.push_back(best);
    }
    return out;
}

inline std::vector<std::size_t> nearest_bins(const Tone& tone, std::size_t channels) {
    std::vector<std::size_t> out;
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n)
        out.push_back(channel_for(static_cast<double>(n) * tone.xi0_hz, tone.fs, channels));
    return out;
}

inline MagnitudeGrid second_layer_slice(const MagnitudeGrid& layer1, std::size_t j, const TripletSequence& omega) {
    return layer_forward(layer1.row(j), omega.frame(1), 2);
}

} // namespace detail

/// Runs the three figure experiments on two-tone signals (each tone 1 s, so
/// 2 s per figure) with the configured layers.
inline FigureOutputs run_figures(const ExperimentConfig& cfg) {
    if (cfg.omega.size() < 2) throw invalid_argument("figures need at least two layers");
    const FigureTones tones = figure_tones();
    FigureOutputs out;
    FigureMetrics& mx = out.metrics;

    // Envelope experiment
    {
        const std::vector<cvec> parts{synthesize(tones.sharp), synthesize(tones.modulated)};
        const cvec signal = concatenate(parts);
        const TripletSequence omega = build_omega(cfg, signal.size());
        const GaborFrame& f1 = omega.frame(0);
        const GaborFrame& f2 = omega.frame(1);
        out.fig1_gabor = layer_forward(signal, f1, 1);
        out.fig1_layer1 = detail::smoothed_layer1(out.fig1_gabor, omega);
        const std::size_t j0 = channel_for(tones.sharp.xi0_hz, tones.sharp.fs, f1.channels());
        out.fig1_layer2 = detail::second_layer_slice(out.fig1_gabor, j0, omega);

        // Envelope invariance: compare both halves away from onsets and edges.
        const double frame_s = static_cast<double>(f1.time_step() * f2.time_step()) / tones.sharp.fs;
        const double reach_s = 2.0 * f2.window().shape_param() * static_cast<double>(f1.time_step()) / tones.sharp.fs;
        const EnvelopeSpec& am = tones.modulated.envelopes.front();
        const double start_s = std::max(tones.sharp.envelopes.front().onset_s, am.onset_s + am.attack_s) + reach_s;
        const double stop_s = tones.sharp.period() - std::max(am.release_s, tones.sharp.envelopes.front().release_s) - reach_s;
        const std::size_t half = out.fig1_layer1.frames() / 2;
        double diff = 0.0, ref = 0.0;
        mx.compared_frames = 0;
        for (std::size_t m = 0; m < half; ++m) {
            const double t = static_cast<double>(m) * frame_s;
            if (t < start_s || t > stop_s) continue;
            ++mx.compared_frames;
            for (std::size_t j = 0; j < out.fig1_layer1.channels(); ++j) {
                const double a = out.fig1_layer1(j, m);
                const double b = out.fig1_layer1(j, m + half);
                diff += (a - b) * (a - b);
                ref += a * a;
            }
        }
        mx.smoothed_relative_distance = ref > 0 ? std::sqrt(diff / ref) : 0.0;
        double rd = 0.0, rr = 0.0;
        for (std::size_t i = 0; i < parts[0].size(); ++i) {
            rd += std::norm(parts[0][i] - parts[1][i]);
            rr += std::norm(parts[0][i]);
        }
        mx.raw_relative_distance = std::sqrt(rd / rr);

        // Modulation channel in the second half of the slice.
        const double layer1_rate = tones.modulated.fs / static_cast<double>(f1.time_step());
        mx.am_expected_channel = channel_for(am.rate_hz, layer1_rate, f2.channels());
        const std::size_t m0 = out.fig1_layer2.frames() / 2;
        const std::size_t m1 = out.fig1_layer2.frames();
        double best = -1.0;
        for (std::size_t h = 1; h <= f2.channels() / 2; ++h) {
            const double e = detail::band_energy(out.fig1_layer2, h, m0, m1);
            if (e > best) {
                best = e;
                mx.am_peak_channel = h;
            }
        }
        const std::size_t p = mx.am_peak_channel;
        const double neighbours = std::max(detail::band_energy(out.fig1_layer2, p - 1, m0, m1),
                                           detail::band_energy(out.fig1_layer2, p + 1, m0, m1));
        mx.am_peak_over_neighbors_db = 10.0 * std::log10(best / neighbours);
    }

    // Pitch and slice experiments
    {
        const std::vector<cvec> parts{synthesize(tones.low), synthesize(tones.high)};
        const cvec signal = concatenate(parts);
        const TripletSequence omega = build_omega(cfg, signal.size());
        const GaborFrame& f1 = omega.frame(0);
        out.fig2_gabor = layer_forward(signal, f1, 1);
        out.fig2_layer1 = detail::smoothed_layer1(out.fig2_gabor, omega);

        const std::size_t k_half = out.fig2_gabor.frames() / 2;
        mx.low_peaks = detail::harmonic_peaks(out.fig2_gabor, tones.low, 0, k_half);
        mx.low_expected = detail::nearest_bins(tones.low, f1.channels());
        mx.high_peaks = detail::harmonic_peaks(out.fig2_gabor, tones.high, k_half, out.fig2_gabor.frames());
        mx.high_expected = detail::nearest_bins(tones.high, f1.channels());

        const std::size_t j_low = channel_for(tones.low.xi0_hz, tones.low.fs, f1.channels());
        const std::size_t j_high = channel_for(tones.high.xi0_hz, tones.high.fs, f1.channels());
        mx.shared_channel = channel_for(9550.0, tones.low.fs, f1.channels());
        const MagnitudeGrid s_low = detail::second_layer_slice(out.fig2_gabor, j_low, omega);
        const MagnitudeGrid s_high = detail::second_layer_slice(out.fig2_gabor, j_high, omega);
        const MagnitudeGrid s_shared = detail::second_layer_slice(out.fig2_gabor, mx.shared_channel, omega);
        const std::size_t m_half = s_low.frames() / 2;
        const std::size_t m_end = s_low.frames();
        mx.low_slice_leak = detail::slice_energy(s_low, m_half, m_end) / detail::slice_energy(s_low, 0, m_half);
        mx.high_slice_leak = detail::slice_energy(s_high, 0, m_half) / detail::slice_energy(s_high, m_half, m_end);
        const double e1 = detail::slice_energy(s_shared, 0, m_half);
        const double e2 = detail::slice_energy(s_shared, m_half, m_end);
        mx.shared_low_share = e1 / std::max(e1, e2);
        mx.shared_high_share = e2 / std::max(e1, e2);

        out.fig3_slices = MagnitudeGrid(3 * s_low.channels(), s_low.frames(), 2, omega.frame(1).id());
        const MagnitudeGrid* slices[] = {&s_low, &s_high, &s_shared};
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t h = 0; h < s_low.channels(); ++h)
                for (std::size_t m = 0; m < s_low.frames(); ++m)
                    out.fig3_slices(b * s_low.channels() + h, m) = (*slices[b])(h, m);
    }
    return out;
}

inline std::vector<std::string> write_figures(const FigureOutputs& figs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const MagnitudeGrid& g, const char* name, ImageScale scale) {
        const auto p = dir / name;
        write_spectrogram(g, p, scale);
        written.push_back(p.string());
    };
    emit(figs.fig1_gabor, "fig1_gabor.pgm", ImageScale::db);
    emit(figs.fig1_layer1, "fig1_layer1.pgm", ImageScale::db);
    emit(figs.fig1_layer2, "fig1_layer2.pgm", ImageScale::linear);
    emit(figs.fig2_gabor, "fig2_gabor.pgm", ImageScale::db);
    emit(figs.fig2_layer1, "fig2_layer1.pgm", ImageScale::db);
    emit(figs.fig3_slices, "fig3_layer2_slices.pgm", ImageScale::linear);

    const FigureMetrics& m = figs.metrics;
    auto join = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
        return s;
    };
    std::string csv = "metric,value\n";
    csv += "smoothed_relative_distance," + detail::format_double(m.smoothed_relative_distance) + "\n";
    csv += "raw_relative_distance," + detail::format_double(m.raw_relative_distance) + "\n";
    csv += "compared_frames," + std::to_string(m.compared_frames) + "\n";
    csv += "am_peak_channel," + std::to_string(m.am_peak_channel) + "\n";
    csv += "am_expected_channel," + std::to_string(m.am_expected_channel) + "\n";
    csv += "am_peak_over_neighbors_db," + detail::format_double(m.am_peak_over_neighbors_db) + "\n";
    csv += "low_peaks," + join(m.low_peaks) + "\n";
    csv += "low_expected," + join(m.low_expected) + "\n";
    csv += "high_peaks," + join(m.high_peaks) + "\n";
    csv += "high_expected," + join(m.high_expected) + "\n";
    csv += "low_slice_leak," + detail::format_double(m.low_slice_leak) + "\n";
    csv += "high_slice_leak," + detail::format_double(m.high_slice_leak) + "\n";
    csv += "shared_channel," + std::to_string(m.shared_channel) + "\n";
    csv += "shared_low_share," + detail::format_double(m.shared_low_share) + "\n";
    csv += "shared_high_share," + detail::format_double(m.shared_high_share) + "\n";
    const auto p = dir / "figure_metrics.csv";
    detail::write_file(p, csv);
    written.push_back(p.string());
    return written;
}

} // namespace gscat
