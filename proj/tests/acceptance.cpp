// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "gscat/bounds.hpp"
#include "gscat/config.hpp"
#include "gscat/experiments.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace gscat;

namespace {

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void criterion(const std::string& id, const std::string& title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.passed = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    std::cout << (o.passed ? "PASS " : "FAIL ") << id << " " << title << ":" << o.detail.str() << " ("
              << seconds_since(t0) << " s)" << std::endl;
    if (!o.passed) ++failures;
}

double l2(const cvec& x) {
    double s = 0.0;
    for (const auto& v : x) s += std::norm(v);
    return std::sqrt(s);
}

// 1. Coefficient energy inside [A - tol, B + tol]; normalized B in [1 - 1e-6, 1].
void frame_correctness(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    const ExperimentConfig cfg = default_config();
    std::vector<std::pair<std::string, GaborFrame>> frames;
    std::size_t len = cfg.tones.front().tone.length();
    for (std::size_t i = 0; i < cfg.omega.size(); ++i) {
        const LayerConfig& l = cfg.omega[i];
        GaborFrame f(make_window(l.window, l.length, l.shape), l.time_step, l.channels, len);
        frames.emplace_back("default layer " + std::to_string(i + 1) + " L=" + std::to_string(len), f);
        len = f.frames();
    }
    len = fixture::length;
    for (std::size_t i = 0; i < 3; ++i) {
        const LayerSpec& s = fixture::desk_specs()[i];
        GaborFrame f(s.window, s.time_step, s.channels, len);
        frames.emplace_back("desk layer " + std::to_string(i + 1) + " L=" + std::to_string(len), f);
        len = f.frames();
    }
    double worst_band = 0.0;
    for (const auto& [name, f] : frames) {
        const auto reports = frame_energy_check(f, 100, rng, name);
        for (const auto& r : reports) o.require(r.passed, r.name + " " + name);
        const Window n = normalize_for_contractivity(f.window(), {f.time_step(), f.channels()}, f.signal_length());
        const double b = frame_bounds(GaborFrame(n, f.time_step(), f.channels(), f.signal_length())).upper;
        o.require(b <= 1.0 && b >= 1.0 - 1e-6, "normalized B " + std::to_string(b) + " " + name);
        worst_band = std::max(worst_band, 1.0 - b);
    }
    const double elapsed = seconds_since(t0);
    o.detail << " frames=" << frames.size() << " signals=100 max(1-B_norm)=" << worst_band << " runtime=" << elapsed
             << " s";
    o.require(elapsed < 10.0, "runtime < 10 s");
}

// 2. dgt against direct inner products; depth-2 scatter against the composed oracle.
void oracle_equivalence(Outcome& o) {
    std::mt19937_64 rng(202);
    const std::size_t lengths[] = {48, 64, 96, 128, 192, 240, 256, 384, 512};
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
        const std::size_t len = lengths[std::uniform_int_distribution<std::size_t>(0, 8)(rng)];
        std::vector<std::size_t> divisors;
        for (std::size_t d = 1; d <= len; ++d)
            if (len % d == 0) divisors.push_back(d);
        std::uniform_int_distribution<std::size_t> pick(0, divisors.size() - 1);
        const std::size_t a = divisors[pick(rng)], m = divisors[pick(rng)];
        const std::size_t wlen = std::uniform_int_distribution<std::size_t>(1, len)(rng);
        const int kind = c % 4;
        Window w = kind == 0   ? make_window(WindowKind::gaussian, wlen, 0.25 * double(wlen) + 0.5)
                   : kind == 1 ? make_window(WindowKind::hann, wlen)
                   : kind == 2 ? make_window(WindowKind::rectangular, wlen)
                               : Window::from_samples(WindowKind::custom, oracle::random_complex(rng, wlen));
        const GaborFrame f(w, a, m, len);
        const cvec x = oracle::random_complex(rng, len);
        const CoefficientGrid got = dgt(x, f);
        const auto want = oracle::dgt(x, f);
        double err = 0.0, scale = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < f.frames(); ++k) {
                err = std::max(err, std::abs(got(j, k) - want[j][k]));
                scale = std::max(scale, std::abs(want[j][k]));
            }
        worst = std::max(worst, err / scale);
    }
    o.require(worst <= 1e-10, "dgt relative error");

    double worst_scatter = 0.0;
    for (int c = 0; c < 5; ++c) {
        const double s = 1.0 + 0.5 * c;
        const std::vector<LayerSpec> specs{
            {make_window(c % 2 ? WindowKind::hann : WindowKind::gaussian, 16, 4 * s), 4, 16, 0},
            {make_window(WindowKind::gaussian, 8, 2 * s), 2, 8, 0},
            {make_window(WindowKind::gaussian, 4, s), 2, 4, 0},
        };
        const TripletSequence omega = TripletSequence::build(specs, 128);
        const cvec x = oracle::random_complex(rng, 128);
        const ScatterTree tree = scatter(x, omega, 2);
        const auto first = oracle::layer(x, omega.frame(0));
        double err = 0.0, scale = 0.0;
        for (std::uint32_t j = 0; j < first.size(); ++j) {
            const cvec row(first[j].begin(), first[j].end());
            const rvec& u1 = tree.nodes.at(Path{j});
            for (std::size_t k = 0; k < u1.size(); ++k) {
                err = std::max(err, std::abs(u1[k] - first[j][k]));
                scale = std::max(scale, first[j][k]);
            }
            const auto second = oracle::layer(row, omega.frame(1));
            for (std::uint32_t h = 0; h < second.size(); ++h) {
                const rvec& u2 = tree.nodes.at(Path{j, h});
                for (std::size_t m = 0; m < u2.size(); ++m) {
                    err = std::max(err, std::abs(u2[m] - second[h][m]));
                    scale = std::max(scale, second[h][m]);
                }
            }
        }
        worst_scatter = std::max(worst_scatter, err / scale);
    }
    o.require(worst_scatter <= 1e-10, "depth-2 scatter relative error");
    o.detail << " dgt cases=20 max rel err=" << worst << "; scatter cases=5 max rel err=" << worst_scatter;
}

// 3. First-layer bound at every lattice point; residual at a fixed channel offset shrinks with pitch.
void prop1_dominance(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = default_config();
    const TripletSequence omega = build_omega(cfg, 44100);
    const GaborFrame& f = omega.frame(0);
    EnvelopeSpec smooth;
    smooth.kind = EnvelopeKind::smooth_adsr;
    smooth.onset_s = 0.1;
    smooth.attack_s = 0.01;
    smooth.decay_s = 0.05;
    smooth.sustain_level = 0.7;
    smooth.release_s = 0.2;
    EnvelopeSpec sharp = smooth;
    sharp.kind = EnvelopeKind::sharp_attack;
    const int offset = -4;
    std::size_t points = 0;
    for (const auto& [label, env] : {std::pair{"smooth", smooth}, std::pair{"sharp", sharp}}) {
        std::vector<double> means;
        for (double xi0 : {200.0, 400.0, 800.0, 1600.0}) {
            Tone tone;
            tone.xi0_hz = xi0;
            tone.n_harmonics = 10;
            tone.envelopes = {env};
            const BoundReport r = prop1_check(tone, f);
            o.require(r.passed, std::string(label) + " xi0=" + std::to_string(xi0) + " " + r.context);
            points += f.channels() * f.frames();
            const auto j = static_cast<std::size_t>(std::lround(xi0 / 25.0) + offset);
            const Prop1Decomposition dec = prop1_decompose(tone, f, j);
            double mean = 0.0;
            for (double v : dec.residual) mean += v;
            means.push_back(mean / double(dec.residual.size()));
        }
        o.detail << " " << label << " mean residual at offset " << offset << ":";
        for (double m : means) o.detail << " " << m;
        for (std::size_t i = 1; i < means.size(); ++i)
            o.require(means[i] <= means[i - 1], std::string(label) + " monotone in pitch");
    }
    const double elapsed = seconds_since(t0);
    o.detail << "; lattice points=" << points << " runtime=" << elapsed << " s";
    o.require(elapsed < 60.0, "runtime < 60 s");
}

// 4. Separation summand with s = 3 and unit spacing at r = 48.
void tail_decay(Outcome& o) {
    const double v = separation_summand(1.0, 48.0, 3.0);
    o.detail << " summand(48)=" << v;
    o.require(v < 1e-5, "summand < 1e-5");
}

// 5. Second-layer bound over the full (h, m) grid, 800 Hz / 15 harmonics, L = 4096.
void cor2_dominance(Outcome& o) {
    const TripletSequence omega = fixture::desk_omega();
    for (const auto& [label, env] : {std::pair{"smooth", fixture::smooth_env()}, std::pair{"sharp", fixture::sharp_env()},
                                     std::pair{"am", fixture::am_env()}}) {
        const Tone tone = fixture::desk_tone(800.0, 15, env);
        const BoundReport r = cor2_check(tone, omega.frame(0), omega.frame(1));
        o.require(r.passed, std::string(label) + " " + r.context);
        o.detail << " " << label << ": worst measured=" << r.measured << " bound=" << r.bound << " (" << r.context
                 << ")";
    }
}

// 6. Deformation lemmas on randomized admissible deformations; threshold rejection.
void deformation_stability(Outcome& o) {
    std::mt19937_64 rng(606);
    const Tone tone = fixture::desk_tone(800.0, 15, fixture::smooth_env());
    rvec cn;
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) cn.push_back(envelope_decay_constant(tone, n, 3.0));
    std::uniform_real_distribution<double> warp_sup(0.0002, 0.02), eps_dist(0.02, 1.0), frac(0.05, 0.95);
    std::size_t warp_ok = 0, mod_ok = 0;
    for (int i = 0; i < 50; ++i) {
        const auto warp = Deformation::envelope_warp(random_smooth_function(rng, tone, warp_sup(rng)));
        if (lemma_envelope_bound(tone, warp, cn).passed) ++warp_ok;
        const double eps = eps_dist(rng);
        auto tau = random_smooth_function(rng, tone, frac(rng) * freqmod_threshold(eps), 20.0);
        if (lemma_freqmod_bound(tone, Deformation::frequency_mod({std::move(tau)}, eps)).passed) ++mod_ok;
    }
    o.require(warp_ok == 50, "envelope warps");
    o.require(mod_ok == 50, "frequency modulations");

    std::size_t rejected = 0;
    double worst_inversion = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double eps = eps_dist(rng);
        const double limit = freqmod_threshold(eps);
        worst_inversion = std::max(worst_inversion, std::abs(limit - std::asin(eps / 2.0) / std::numbers::pi));
        worst_inversion =
            std::max(worst_inversion, std::abs(std::abs(std::polar(1.0, 2.0 * std::numbers::pi * limit) - 1.0) - eps));
        auto tau = random_smooth_function(rng, tone, limit * (1.0 + 0.1 * frac(rng)));
        try {
            lemma_freqmod_bound(tone, Deformation::frequency_mod({std::move(tau)}, eps));
        } catch (const invalid_argument& e) {
            if (std::string(e.what()).find(std::to_string(limit)) != std::string::npos) ++rejected;
        }
    }
    bool warp_rejected = false;
    try {
        lemma_envelope_bound(tone, Deformation::envelope_warp(rvec(tone.length(), 0.11)), cn);
    } catch (const invalid_argument&) {
        warp_rejected = true;
    }
    o.require(rejected == 50, "inadmissible modulations rejected with threshold");
    o.require(warp_rejected, "inadmissible warp rejected");
    o.require(worst_inversion <= 1e-12, "threshold inversion");
    o.detail << " warps " << warp_ok << "/50, modulations " << mod_ok << "/50, rejected " << rejected
             << "/50, threshold inversion err=" << worst_inversion;
}

// 7. Feature distance never exceeds the signal distance.
void contractivity(Outcome& o) {
    std::mt19937_64 rng(707);
    const std::vector<LayerSpec> specs{
        {make_window(WindowKind::gaussian, 32, 8), 8, 32, 0},
        {make_window(WindowKind::gaussian, 16, 4), 4, 16, 0},
        {make_window(WindowKind::gaussian, 8, 2), 2, 8, 0},
    };
    const TripletSequence omega = TripletSequence::build(specs, 512);
    double worst = -1e300;
    for (int i = 0; i < 200; ++i) {
        const cvec f = oracle::random_complex(rng, 512);
        cvec h = oracle::random_complex(rng, 512);
        if (i % 4 == 0)
            for (std::size_t t = 0; t < h.size(); ++t) h[t] = f[t] + 1e-3 * h[t];
        const BoundReport r = contractivity_check(f, h, omega, 2);
        worst = std::max(worst, r.measured - r.bound);
        o.require(r.passed, "pair " + std::to_string(i));
    }
    const cvec f = oracle::random_complex(rng, 512);
    const double phi = feature_norm(extract_features(f, omega, 2));
    o.require(phi <= l2(f), "h = 0");
    o.detail << " pairs=200 max(dist - |f-h|)=" << worst << "; |Phi f|/|f|=" << phi / l2(f);
}

// 8. Figure properties with thresholds frozen from the pilot run.
void figures(Outcome& o, const FigureMetrics& m, char part) {
    switch (part) {
    case 'a':
        o.require(m.low_peaks == m.low_expected, "800 Hz harmonic peaks");
        o.require(m.high_peaks == m.high_expected, "1060 Hz harmonic peaks");
        o.detail << " low peaks " << m.low_peaks.size() << "/" << m.low_expected.size() << ", high peaks "
                 << m.high_peaks.size() << "/" << m.high_expected.size() << " at nearest bins";
        break;
    case 'b':
        o.require(m.smoothed_relative_distance < 0.05, "smoothed distance < 5%");
        o.require(m.raw_relative_distance > 0.30, "raw distance > 30%");
        o.detail << " smoothed=" << m.smoothed_relative_distance << " raw=" << m.raw_relative_distance
                 << " frames=" << m.compared_frames;
        break;
    case 'c':
        o.require(m.am_peak_channel == m.am_expected_channel, "peak at 20 Hz channel");
        o.require(m.am_peak_over_neighbors_db >= 6.0, "dominance >= 6 dB");
        o.detail << " peak channel=" << m.am_peak_channel << " expected=" << m.am_expected_channel
                 << " dominance=" << m.am_peak_over_neighbors_db << " dB";
        break;
    case 'd':
        o.require(m.low_slice_leak < 0.01, "tone 2 leak at 800 Hz");
        o.require(m.high_slice_leak < 0.01, "tone 1 leak at 1060 Hz");
        o.require(m.shared_low_share > 0.1 && m.shared_high_share > 0.1, "shared harmonic");
        o.detail << " leaks=" << m.low_slice_leak << "/" << m.high_slice_leak << " shared channel "
                 << m.shared_channel << " shares=" << m.shared_low_share << "/" << m.shared_high_share;
        break;
    }
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion("1", "frame correctness", frame_correctness);
    criterion("2", "oracle equivalence", oracle_equivalence);
    criterion("3", "first-layer bound dominance", prop1_dominance);
    criterion("4", "tail-decay constant", tail_decay);
    criterion("5", "second-layer bound dominance", cor2_dominance);
    criterion("6", "deformation stability", deformation_stability);
    criterion("7", "contractivity", contractivity);
    FigureMetrics metrics;
    bool have_metrics = false;
    std::string figure_error;
    try {
        metrics = run_figures(default_config()).metrics;
        have_metrics = true;
    } catch (const std::exception& e) {
        figure_error = e.what();
    }
    const std::pair<char, const char*> parts[] = {
        {'a', "harmonic peaks"}, {'b', "envelope invariance"}, {'c', "AM detection"}, {'d', "pitch selectivity"}};
    for (const auto& [part, title] : parts)
        criterion(std::string("8") + part, title, [&](Outcome& o) {
            if (!have_metrics) throw std::runtime_error("figure run failed: " + figure_error);
            figures(o, metrics, part);
        });
    const double total = seconds_since(t0);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << " (" << total << " s)"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
