#pragma once

// Numerical evaluation of the layer approximation and stability bounds.
// Layer quantities are in coefficient units (plain sums over samples);
// deformation norms are sample l2 norms divided by sqrt(fs).

#include "gscat/errors.hpp"
#include "gscat/gabor.hpp"
#include "gscat/scattering.hpp"
#include "gscat/signal_model.hpp"
#include "gscat/windows.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace gscat {

struct BoundReport {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    double tol = 0.0;
    bool passed = false;
    std::string context;
};

inline BoundReport make_report(std::string name, double measured, double bound, double tol, std::string context = {}) {
    BoundReport r;
    r.name = std::move(name);
    r.measured = measured;
    r.bound = bound;
    r.margin = bound - measured;
    r.tol = tol;
    r.passed = measured <= bound + tol;
    r.context = std::move(context);
    return r;
}

/// Relative tolerance 1e-9 against the magnitude of the bound.
inline BoundReport make_report(std::string name, double measured, double bound, std::string context = {}) {
    const double tol = 1e-9 * std::max(1.0, std::abs(bound));
    return make_report(std::move(name), measured, bound, tol, std::move(context));
}

/// Keeps the report with the smallest margin relative to its tolerance.
inline void keep_worst(BoundReport& worst, const BoundReport& r, bool& have) {
    if (!have || r.margin + r.tol < worst.margin + worst.tol) {
        worst = r;
        have = true;
    }
}

// ---------------------------------------------------------------------------
// First layer

struct Prop1Options {
    double s = 3.0;
    std::size_t decay_oversample = 16; // C_ghat grid = window length * this
};

/// Summand of the frequency-separation series: (1 + (spacing |m - 1/2|)^s)^-1.
inline double separation_summand(double spacing, double m, double s) {
    return 1.0 / (1.0 + std::pow(spacing * std::abs(m - 0.5), s));
}

/// C_ghat times the series over the N - 1 other harmonics, two per distance
/// class m = 1, 1, 2, 2, ..., truncated once a summand drops below 1e-12.
inline double separation_term(double c_ghat, double spacing, double s, std::size_t n_harmonics) {
    if (!(s > 1.0)) throw invalid_argument("decay exponent s must exceed 1");
    double acc = 0.0;
    for (std::size_t i = 1; i < n_harmonics; ++i) {
        const double term = separation_summand(spacing, static_cast<double>((i + 1) / 2), s);
        if (term < 1e-12) break;
        acc += term;
    }
    return c_ghat * acc;
}

/// C_g * sum_n lip_n + separation.
inline double prop1_bound_value(double c_g, std::span<const double> lipschitz, double separation) {
    double sum = 0.0;
    for (double v : lipschitz) sum += v;
    return c_g * sum + separation;
}

/// Circular distance between two normalized frequencies.
inline double circular_distance(double u, double v) {
    double d = u - v;
    return std::abs(d - std::round(d));
}

/// Harmonic nearest to `freq` (cycles per sample) on the unit circle, ties to the smaller n.
inline std::size_t nearest_harmonic(const Tone& tone, double freq) {
    std::size_t best = 1;
    double best_d = circular_distance(freq, tone.normalized_frequency(1));
    for (std::size_t n = 2; n <= tone.n_harmonics; ++n) {
        double d = circular_distance(freq, tone.normalized_frequency(n));
        if (d < best_d - 1e-12) {
            best = n;
            best_d = d;
        }
    }
    return best;
}

struct Prop1Terms {
    DecayConstants decay;
    double spacing_bins = 0.0; // xi0 in window bins
    double separation = 0.0;
    std::vector<rvec> lipschitz; // [n - 1][k]: max per-sample increment over the window support
    rvec bound;                  // [k]
};

namespace detail {

// |A~_n[t+1] - A~_n[t]| for t in Z_L, where A~_n carries the carrier phase
// mismatch across the period boundary.
inline rvec envelope_increments(const Tone& tone, std::size_t n) {
    const auto a = sample_envelope(tone, n);
    const std::size_t len = a.size();
    rvec d(len);
    for (std::size_t t = 0; t + 1 < len; ++t) d[t] = std::abs(a[t + 1] - a[t]);
    const double cycles = tone.normalized_frequency(n) * static_cast<double>(len);
    const auto wrapped = std::polar(a.front(), -2.0 * std::numbers::pi * (cycles - std::floor(cycles)));
    d[len - 1] = std::abs(wrapped - a.back());
    return d;
}

} // namespace detail

inline Prop1Terms prop1_terms(const Tone& tone, const GaborFrame& frame, const Prop1Options& opt = {}) {
    tone.validate();
    if (tone.length() != frame.signal_length())
        throw invalid_argument("tone length " + std::to_string(tone.length()) + " does not match frame length " +
                               std::to_string(frame.signal_length()));
    const Window& w = frame.window();
    Prop1Terms out;
    out.decay = decay_constants(w, opt.s, w.length() * std::max<std::size_t>(1, opt.decay_oversample));
    out.spacing_bins = tone.xi0_hz / tone.fs * static_cast<double>(w.length());
    out.separation = separation_term(out.decay.c_ghat, out.spacing_bins, opt.s, tone.n_harmonics);

    const std::size_t frames = frame.frames();
    const long c = static_cast<long>(w.center());
    const long width = static_cast<long>(w.length());
    out.bound.assign(frames, 0.0);
    rvec lip_sum(frames, 0.0);
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) {
        const rvec d = detail::envelope_increments(tone, n);
        rvec lip(frames, 0.0);
        for (std::size_t k = 0; k < frames; ++k) {
            const long start = static_cast<long>(frame.time_step() * k) - c;
            double m = 0.0;
            for (long t = start; t < start + width - 1; ++t) m = std::max(m, d[frame.wrap(t)]);
            lip[k] = m;
            lip_sum[k] += m;
        }
        out.lipschitz.push_back(std::move(lip));
    }
    for (std::size_t k = 0; k < frames; ++k) out.bound[k] = out.decay.c_g * lip_sum[k] + out.separation;
    return out;
}

/// Bound on |U_1[j] f(k) - main_term(k)|; independent of j.
inline double prop1_error_bound(const Tone& tone, const GaborFrame& frame, std::size_t j, std::size_t k,
                                const Prop1Options& opt = {}) {
    if (j >= frame.channels()) throw invalid_argument("channel out of range");
    if (k >= frame.frames()) throw invalid_argument("time index out of range");
    return prop1_terms(tone, frame, opt).bound[k];
}

struct Prop1Decomposition {
    std::size_t channel = 0;
    std::size_t n0 = 1;
    double ghat = 0.0; // |g^(freq(j) - n0 xi0)|
    rvec main_term;
    rvec residual;
    rvec bound;
};

/// Uses a precomputed first-layer grid and bound terms.
inline Prop1Decomposition prop1_decompose(const Tone& tone, const GaborFrame& frame, std::size_t j,
                                          const MagnitudeGrid& layer1, const Prop1Terms& terms,
                                          std::span<const double> envelope_n0 = {}) {
    if (j >= frame.channels()) throw invalid_argument("channel out of range");
    Prop1Decomposition out;
    out.channel = j;
    const double freq = static_cast<double>(j) / static_cast<double>(frame.channels());
    out.n0 = nearest_harmonic(tone, freq);
    out.ghat = std::abs(frame.window().dtft(freq - tone.normalized_frequency(out.n0)));
    const std::size_t frames = frame.frames();
    out.main_term.resize(frames);
    out.residual.resize(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        const std::size_t t = frame.time_step() * k;
        const double amp = envelope_n0.empty() ? envelope_value(tone, out.n0, static_cast<double>(t) / tone.fs)
                                               : envelope_n0[t];
        out.main_term[k] = amp * out.ghat;
        out.residual[k] = std::abs(layer1(j, k) - out.main_term[k]);
    }
    out.bound = terms.bound;
    return out;
}

inline Prop1Decomposition prop1_decompose(const Tone& tone, const GaborFrame& frame, std::size_t j,
                                          const Prop1Options& opt = {}) {
    const Prop1Terms terms = prop1_terms(tone, frame, opt);
    const auto signal = synthesize(tone);
    const MagnitudeGrid layer1 = layer_forward(signal, frame, 1);
    return prop1_decompose(tone, frame, j, layer1, terms);
}

/// Worst-margin report over every (j, k) of the first layer.
inline BoundReport prop1_check(const Tone& tone, const GaborFrame& frame, const Prop1Options& opt = {},
                               const std::string& label = "prop1") {
    const Prop1Terms terms = prop1_terms(tone, frame, opt);
    const auto signal = synthesize(tone);
    const MagnitudeGrid layer1 = layer_forward(signal, frame, 1);
    std::vector<rvec> envelopes;
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) envelopes.push_back(sample_envelope(tone, n));
    BoundReport worst;
    bool have = false;
    std::size_t failures = 0;
    for (std::size_t j = 0; j < frame.channels(); ++j) {
        const double freq = static_cast<double>(j) / static_cast<double>(frame.channels());
        const std::size_t n0 = nearest_harmonic(tone, freq);
        auto dec = prop1_decompose(tone, frame, j, layer1, terms, envelopes[n0 - 1]);
        for (std::size_t k = 0; k < dec.residual.size(); ++k) {
            auto r = make_report(label, dec.residual[k], dec.bound[k],
                                 "j=" + std::to_string(j) + " k=" + std::to_string(k) + " n0=" + std::to_string(n0));
            if (!r.passed) ++failures;
            keep_worst(worst, r, have);
        }
    }
    worst.context += " points=" + std::to_string(frame.channels() * frame.frames()) +
                     " failures=" + std::to_string(failures);
    return worst;
}

// ---------------------------------------------------------------------------
// Second layer

/// max over base-band frequencies u in [-L/(2 alpha), L/(2 alpha)) of
/// sum_{p != 0} |c_{u + p L/alpha}|, with c the DFT of the envelope divided by
/// its length.
inline double envelope_aliasing_eps(std::span<const double> envelope, std::size_t alpha) {
    const std::size_t len = envelope.size();
    if (alpha == 0 || len == 0 || len % alpha != 0)
        throw invalid_argument("alpha " + std::to_string(alpha) + " does not divide envelope length " +
                               std::to_string(len));
    cvec c = dft(envelope);
    for (auto& v : c) v /= static_cast<double>(len);
    const std::size_t sub = len / alpha;
    const std::size_t upper = sub - sub / 2; // residues at or above this sit at negative frequencies
    double best = 0.0;
    for (std::size_t r = 0; r < sub; ++r) {
        const std::size_t kept = r < upper ? r : r + (alpha - 1) * sub;
        double acc = 0.0;
        for (std::size_t p = 0; p < alpha; ++p)
            if (r + p * sub != kept) acc += std::abs(c[r + p * sub]);
        best = std::max(best, acc);
    }
    return best;
}

namespace detail {

// Envelope restricted to its base band [-sub/2, sub/2) and sampled every alpha samples.
inline cvec baseband_samples(std::span<const double> envelope, std::size_t alpha) {
    const std::size_t len = envelope.size();
    const std::size_t sub = len / alpha;
    cvec c = dft(envelope);
    cvec base(sub);
    const long half = static_cast<long>(sub / 2);
    for (long u = -half; u < static_cast<long>(sub) - half; ++u) {
        const std::size_t src = static_cast<std::size_t>((u % static_cast<long>(len) + static_cast<long>(len)) %
                                                         static_cast<long>(len));
        const std::size_t dst = static_cast<std::size_t>((u + static_cast<long>(sub)) % static_cast<long>(sub));
        base[dst] = c[src] / static_cast<double>(len);
    }
    fft_inverse(base);
    return base;
}

} // namespace detail

struct Cor2Options {
    double s = 3.0;
};

struct Cor2Result {
    std::size_t channel = 0;
    std::size_t n0 = 1;
    double ghat1 = 0.0;
    double eps_alias = 0.0;
    double e1_sup = 0.0;
    double g2_l1 = 0.0;
    double c_ghat2 = 0.0;
    MagnitudeGrid main_term;
    MagnitudeGrid residual;
    rvec bound; // per second-layer channel h
};

namespace detail {

inline Cor2Result cor2_from_row(const Tone& tone, const GaborFrame& frame1, const GaborFrame& frame2,
                                std::size_t j, std::span<const double> row, std::span<const double> envelope_n0,
                                std::size_t n0, double eps_alias, const DecayConstants& decay2) {
    Cor2Result out;
    out.channel = j;
    out.n0 = n0;
    out.eps_alias = eps_alias;
    const double freq = static_cast<double>(j) / static_cast<double>(frame1.channels());
    out.ghat1 = std::abs(frame1.window().dtft(freq - tone.normalized_frequency(n0)));
    const std::size_t a1 = frame1.time_step();
    for (std::size_t k = 0; k < row.size(); ++k)
        out.e1_sup = std::max(out.e1_sup, std::abs(row[k] - envelope_n0[a1 * k] * out.ghat1));

    const cvec base = baseband_samples(envelope_n0, a1);
    out.main_term = layer_forward(base, frame2, 2);
    for (auto& v : out.main_term.values()) v *= out.ghat1;
    out.residual = layer_forward(row, frame2, 2);
    auto res = out.residual.values();
    auto main = out.main_term.values();
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = std::abs(res[i] - main[i]);

    out.g2_l1 = frame2.window().l1_norm();
    out.c_ghat2 = decay2.c_ghat;
    const std::size_t sub = frame2.signal_length();
    const double width2 = static_cast<double>(frame2.window().length());
    const long l1 = static_cast<long>(sub);
    out.bound.resize(frame2.channels());
    for (std::size_t h = 0; h < frame2.channels(); ++h) {
        const long shift = static_cast<long>(h * (sub / frame2.channels()));
        double series = 0.0;
        for (long u = 0; u < l1; ++u) {
            long d = ((u - shift) % l1 + l1) % l1;
            if (d > l1 / 2) d -= l1;
            const double omega = std::abs(static_cast<double>(d)) * width2 / static_cast<double>(sub);
            series += 1.0 / (1.0 + std::pow(omega, decay2.s));
        }
        out.bound[h] = out.ghat1 * eps_alias * out.c_ghat2 * series + out.e1_sup * out.g2_l1;
    }
    return out;
}

} // namespace detail

/// Second-layer decomposition U_2[h] U_1[j] f(m) on the full (h, m) grid.
/// frame2 must act on sequences of length frame1.frames().
inline Cor2Result cor2_decompose(const Tone& tone, const GaborFrame& frame1, const GaborFrame& frame2,
                                 std::size_t j, const Cor2Options& opt = {}) {
    tone.validate();
    if (j >= frame1.channels()) throw invalid_argument("first-layer channel out of range");
    if (frame2.signal_length() != frame1.frames())
        throw invalid_argument("second-layer frame length does not match first-layer frame count");
    const auto signal = synthesize(tone);
    const MagnitudeGrid layer1 = layer_forward(signal, frame1, 1);
    const double freq = static_cast<double>(j) / static_cast<double>(frame1.channels());
    const std::size_t n0 = nearest_harmonic(tone, freq);
    const rvec env = sample_envelope(tone, n0);
    const double eps = envelope_aliasing_eps(env, frame1.time_step());
    const DecayConstants decay2 = decay_constants(frame2.window(), opt.s, frame2.signal_length());
    auto row = layer1.row(j);
    return detail::cor2_from_row(tone, frame1, frame2, j, row, env, n0, eps, decay2);
}

inline Cor2Result cor2_decompose(const Tone& tone, const TripletSequence& omega, std::size_t j,
                                 const Cor2Options& opt = {}) {
    if (omega.size() < 2) throw invalid_argument("second-layer decomposition needs two frames");
    return cor2_decompose(tone, omega.frame(0), omega.frame(1), j, opt);
}

/// Worst-margin report over every first-layer channel j and (h, m).
inline BoundReport cor2_check(const Tone& tone, const GaborFrame& frame1, const GaborFrame& frame2,
                              const Cor2Options& opt = {}, const std::string& label = "cor2") {
    tone.validate();
    if (frame2.signal_length() != frame1.frames())
        throw invalid_argument("second-layer frame length does not match first-layer frame count");
    const auto signal = synthesize(tone);
    const MagnitudeGrid layer1 = layer_forward(signal, frame1, 1);
    const DecayConstants decay2 = decay_constants(frame2.window(), opt.s, frame2.signal_length());
    std::map<std::size_t, std::pair<rvec, double>> per_harmonic;
    BoundReport worst;
    bool have = false;
    std::size_t failures = 0;
    std::size_t points = 0;
    for (std::size_t j = 0; j < frame1.channels(); ++j) {
        const double freq = static_cast<double>(j) / static_cast<double>(frame1.channels());
        const std::size_t n0 = nearest_harmonic(tone, freq);
        auto it = per_harmonic.find(n0);
        if (it == per_harmonic.end()) {
            rvec env = sample_envelope(tone, n0);
            double eps = envelope_aliasing_eps(env, frame1.time_step());
            it = per_harmonic.emplace(n0, std::make_pair(std::move(env), eps)).first;
        }
        auto res = detail::cor2_from_row(tone, frame1, frame2, j, layer1.row(j), it->second.first, n0,
                                         it->second.second, decay2);
        for (std::size_t h = 0; h < res.residual.channels(); ++h)
            for (std::size_t m = 0; m < res.residual.frames(); ++m) {
                auto r = make_report(label, res.residual(h, m), res.bound[h],
                                     "j=" + std::to_string(j) + " h=" + std::to_string(h) + " m=" +
                                         std::to_string(m));
                if (!r.passed) ++failures;
                ++points;
                keep_worst(worst, r, have);
            }
    }
    worst.context += " points=" + std::to_string(points) + " failures=" + std::to_string(failures);
    return worst;
}

// ---------------------------------------------------------------------------
// Smoothed outputs

struct Cor3Result {
    std::size_t channel = 0;
    rvec layer1_main, layer1_residual, eps1;        // over m (second-layer lattice)
    MagnitudeGrid layer2_main, layer2_residual;     // (h, m) on the third-layer lattice
    double eps2 = 0.0;
    BoundReport layer1;
    BoundReport layer2;
};

/// Compares the smoothed first- and second-layer features of channel j with
/// the smoothed main terms. Needs at least three frames in omega.
inline Cor3Result cor3_smoothed_outputs(const Tone& tone, const TripletSequence& omega, std::size_t j,
                                        const Prop1Options& p1 = {}, const Cor2Options& c2 = {}) {
    if (omega.size() < 3) throw invalid_argument("smoothed second-layer outputs need three frames");
    const GaborFrame& f1 = omega.frame(0);
    const GaborFrame& f2 = omega.frame(1);
    const GaborFrame& f3 = omega.frame(2);
    const Layer& l2 = omega.layers()[1];
    const Layer& l3 = omega.layers()[2];
    if (j >= f1.channels()) throw invalid_argument("first-layer channel out of range");

    const auto signal = synthesize(tone);
    const MagnitudeGrid layer1 = layer_forward(signal, f1, 1);
    const Prop1Terms terms = prop1_terms(tone, f1, p1);
    const double freq = static_cast<double>(j) / static_cast<double>(f1.channels());
    const std::size_t n0 = nearest_harmonic(tone, freq);
    const rvec env = sample_envelope(tone, n0);
    const auto dec = prop1_decompose(tone, f1, j, layer1, terms, env);

    Cor3Result out;
    out.channel = j;
    auto row = layer1.row(j);
    const rvec feat1 = smooth(row, f2, l2.atom_channel);
    out.layer1_main = smooth(std::span<const double>(dec.main_term), f2, l2.atom_channel);
    out.layer1_residual.resize(feat1.size());
    out.eps1.resize(feat1.size());
    {
        const Window& w = f2.window();
        const long c = static_cast<long>(w.center());
        BoundReport worst;
        bool have = false;
        for (std::size_t m = 0; m < feat1.size(); ++m) {
            out.layer1_residual[m] = std::abs(feat1[m] - out.layer1_main[m]);
            double acc = 0.0;
            const long base = static_cast<long>(f2.time_step() * m);
            for (std::size_t s = 0; s < w.length(); ++s)
                acc += std::abs(w[s]) * terms.bound[f2.wrap(base - (static_cast<long>(s) - c))];
            out.eps1[m] = acc;
            keep_worst(worst, make_report("cor3.layer1", out.layer1_residual[m], acc,
                                          "j=" + std::to_string(j) + " m=" + std::to_string(m)),
                       have);
        }
        out.layer1 = worst;
    }

    const double eps = envelope_aliasing_eps(env, f1.time_step());
    const DecayConstants decay2 = decay_constants(f2.window(), c2.s, f2.signal_length());
    const Cor2Result second = detail::cor2_from_row(tone, f1, f2, j, row, env, n0, eps, decay2);
    const double phi2_l1 = f3.window().l1_norm();
    out.layer2_main = MagnitudeGrid(f2.channels(), f3.frames(), 2, f3.id());
    out.layer2_residual = MagnitudeGrid(f2.channels(), f3.frames(), 2, f3.id());
    const MagnitudeGrid layer2 = layer_forward(row, f2, 2);
    BoundReport worst;
    bool have = false;
    for (std::size_t h = 0; h < f2.channels(); ++h) {
        const rvec feat = smooth(layer2.row(h), f3, l3.atom_channel);
        const rvec main = smooth(second.main_term.row(h), f3, l3.atom_channel);
        const double eps2 = second.bound[h] * phi2_l1;
        out.eps2 = std::max(out.eps2, eps2);
        for (std::size_t m = 0; m < feat.size(); ++m) {
            out.layer2_main(h, m) = main[m];
            out.layer2_residual(h, m) = std::abs(feat[m] - main[m]);
            keep_worst(worst, make_report("cor3.layer2", out.layer2_residual(h, m), eps2,
                                          "j=" + std::to_string(j) + " h=" + std::to_string(h) + " m=" +
                                              std::to_string(m)),
                       have);
        }
    }
    out.layer2 = worst;
    return out;
}

// ---------------------------------------------------------------------------
// Deformations

/// int_R (1 + |x|^s)^-2 dx by Simpson's rule after mapping [0, inf) to [0, 1).
inline double decay_profile_l2_sq(double s) {
    if (!(s > 1.0)) throw invalid_argument("decay exponent s must exceed 1");
    auto f = [s](double u) {
        if (u >= 1.0) return 0.0;
        const double x = u / (1.0 - u);
        const double p = 1.0 + std::pow(x, s);
        return 1.0 / (p * p * (1.0 - u) * (1.0 - u));
    };
    const std::size_t n = 200000;
    const double h = 1.0 / static_cast<double>(n);
    double acc = f(0.0) + f(1.0);
    for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(static_cast<double>(i) * h);
    return 2.0 * acc * h / 3.0;
}

/// D with D^2 = 2 + ||(1 + |x|^s)^-1||_2^2 / (1 - ||tau||_inf).
inline double warp_constant(double s, double tau_sup) {
    if (tau_sup < 0.0 || tau_sup >= 1.0) throw invalid_argument("warp sup-norm must lie in [0, 1)");
    return std::sqrt(2.0 + decay_profile_l2_sq(s) / (1.0 - tau_sup));
}

inline double scaled_l2_distance(std::span<const std::complex<double>> x, std::span<const std::complex<double>> y,
                                 double fs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::norm(x[i] - y[i]);
    return std::sqrt(acc / fs);
}

/// ||f - F_{A_tau} f|| against D ||tau||_inf sum_n C_n. Empty `decay_constants_n`
/// computes C_n from the envelopes with exponent s.
inline BoundReport lemma_envelope_bound(const Tone& tone, const Deformation& warp,
                                        std::span<const double> decay_constants_n = {}, double s = 3.0) {
    if (warp.kind != DeformationKind::envelope_warp && warp.kind != DeformationKind::none)
        throw invalid_argument("envelope lemma needs an envelope warp");
    tone.validate();
    validate_deformation(tone, warp);
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) {
        const double edge = 1e-6 * tone.peak(n);
        if (envelope_has_jump(tone, n) || envelope_value(tone, n, 0.0) > edge ||
            envelope_value(tone, n, std::nextafter(tone.period(), 0.0)) > edge)
            throw precondition_violation("envelope of harmonic " + std::to_string(n) +
                                         " is discontinuous; the warp bound needs a continuous envelope");
    }
    std::vector<double> cn(decay_constants_n.begin(), decay_constants_n.end());
    if (cn.empty())
        for (std::size_t n = 1; n <= tone.n_harmonics; ++n) cn.push_back(envelope_decay_constant(tone, n, s));
    if (cn.size() != tone.n_harmonics) throw invalid_argument("need one derivative constant per harmonic");
    double sum = 0.0;
    for (double c : cn) sum += c;

    const double tau = warp.kind == DeformationKind::none ? 0.0 : sup_norm(warp.warp_s);
    const auto f = synthesize(tone);
    const auto g = deform(tone, warp);
    const double measured = scaled_l2_distance(f, g, tone.fs);
    const double bound = warp_constant(s, tau) * tau * sum;
    return make_report("lemma.envelope", measured, bound,
                       "xi0=" + std::to_string(tone.xi0_hz) + " tau=" + std::to_string(tau));
}

/// ||f - F_tau f|| against eps sum_n ||A_n||_2.
inline BoundReport lemma_freqmod_bound(const Tone& tone, const Deformation& mod) {
    if (mod.kind != DeformationKind::frequency_mod)
        throw invalid_argument("frequency lemma needs a frequency modulation");
    tone.validate();
    validate_deformation(tone, mod);
    double mass = 0.0;
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) {
        double acc = 0.0;
        for (double v : sample_envelope(tone, n)) acc += v * v;
        mass += std::sqrt(acc / tone.fs);
    }
    const auto f = synthesize(tone);
    const auto g = deform(tone, mod);
    double tau = 0.0;
    for (const auto& p : mod.phase) tau = std::max(tau, sup_norm(p));
    return make_report("lemma.freqmod", scaled_l2_distance(f, g, tone.fs), mod.eps * mass,
                       "xi0=" + std::to_string(tone.xi0_hz) + " eps=" + std::to_string(mod.eps) +
                           " tau=" + std::to_string(tau));
}

/// ||Phi(f) - Phi(h)|| against ||f - h||, absolute tolerance 1e-9.
inline BoundReport contractivity_check(std::span<const std::complex<double>> f,
                                       std::span<const std::complex<double>> h, const TripletSequence& omega,
                                       std::size_t depth, const ScatterOptions& opt = {}) {
    if (!omega.normalized() || !omega.is_contractive())
        throw precondition_violation("contractivity check needs a contractivity-normalized triplet sequence");
    if (f.size() != h.size()) throw invalid_argument("signals differ in length");
    const FeatureVector u = extract_features(f, omega, depth, opt);
    const FeatureVector v = extract_features(h, omega, depth, opt);
    double diff = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) diff += std::norm(f[i] - h[i]);
    return make_report("contractivity", feature_distance(u, v), std::sqrt(diff), 1e-9,
                       "depth=" + std::to_string(depth));
}

} // namespace gscat
