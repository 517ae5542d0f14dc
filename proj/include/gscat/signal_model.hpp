#pragma once

// Harmonic tone model f(t) = sum_n A_n(t) exp(2 pi i n xi0 t) with nonnegative
// envelopes bounded by 1/n, plus the envelope-warp and frequency-modulation
// deformations. Envelopes are evaluated analytically, so deformed signals are
// re-synthesized rather than resampled.

#include "gscat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gscat {

enum class EnvelopeKind { constant, smooth_adsr, sharp_attack, amplitude_modulated };

// Nonnegative modulator for amplitude-modulated envelopes. The textbook
// sin(2 pi r t) is signed, so it is either lifted ((1 + sin) / 2) or rectified
// (|sin|, which moves the fundamental to 2r).
enum class ModulationShape { offset_sine, rectified_sine };

inline std::string_view to_string(EnvelopeKind k) {
    switch (k) {
    case EnvelopeKind::constant: return "constant";
    case EnvelopeKind::smooth_adsr: return "smooth_adsr";
    case EnvelopeKind::sharp_attack: return "sharp_attack";
    case EnvelopeKind::amplitude_modulated: return "amplitude_modulated";
    }
    return "constant";
}

inline EnvelopeKind parse_envelope_kind(std::string_view s) {
    if (s == "constant") return EnvelopeKind::constant;
    if (s == "smooth_adsr") return EnvelopeKind::smooth_adsr;
    if (s == "sharp_attack") return EnvelopeKind::sharp_attack;
    if (s == "amplitude_modulated") return EnvelopeKind::amplitude_modulated;
    throw invalid_argument("unknown envelope kind '" + std::string(s) + "'");
}

inline std::string_view to_string(ModulationShape m) {
    return m == ModulationShape::offset_sine ? "offset_sine" : "rectified_sine";
}

inline ModulationShape parse_modulation_shape(std::string_view s) {
    if (s == "offset_sine") return ModulationShape::offset_sine;
    if (s == "rectified_sine") return ModulationShape::rectified_sine;
    throw invalid_argument("unknown modulation shape '" + std::string(s) + "'");
}

/// Envelope shape with values in [0, 1], later multiplied by the harmonic's peak.
/// Times are in seconds from the start of the tone. ADSR segments are linear;
/// sharp_attack ignores attack_s and jumps to 1 at onset_s. The release ramps
/// to zero over the final release_s seconds.
struct EnvelopeSpec {
    EnvelopeKind kind = EnvelopeKind::constant;
    double onset_s = 0.0;
    double attack_s = 0.0;
    double decay_s = 0.0;
    double sustain_level = 1.0;
    double release_s = 0.0;
    double rate_hz = 0.0;
    double depth = 0.0;
    ModulationShape modulation = ModulationShape::offset_sine;
    double peak = 0.0; // 0 selects 1/n

    bool operator==(const EnvelopeSpec&) const = default;

    void validate() const {
        if (onset_s < 0 || attack_s < 0 || decay_s < 0 || release_s < 0)
            throw invalid_argument("envelope times must be nonnegative");
        if (sustain_level < 0 || sustain_level > 1)
            throw invalid_argument("sustain level must lie in [0, 1]");
        if (peak < 0) throw invalid_argument("envelope peak must be nonnegative");
        if (kind == EnvelopeKind::amplitude_modulated) {
            if (!(rate_hz > 0)) throw invalid_argument("modulation rate must be positive");
            if (depth < 0 || depth > 1) throw invalid_argument("modulation depth must lie in [0, 1]");
        }
    }
};

struct Tone {
    double xi0_hz = 800.0;
    std::size_t n_harmonics = 1;
    std::vector<EnvelopeSpec> envelopes{EnvelopeSpec{}}; // one shared spec, or one per harmonic
    double fs = 44100.0;
    double duration_s = 1.0;
    double edge_fade_s = 0.005; // raised-cosine fade at both signal edges; 0 disables

    bool operator==(const Tone&) const = default;

    std::size_t length() const { return static_cast<std::size_t>(std::llround(fs * duration_s)); }
    double period() const { return static_cast<double>(length()) / fs; }

    const EnvelopeSpec& envelope(std::size_t n) const {
        return envelopes.size() == 1 ? envelopes.front() : envelopes.at(n - 1);
    }

    /// Realized peak of harmonic n, never above 1/n.
    double peak(std::size_t n) const {
        const double cap = 1.0 / static_cast<double>(n);
        const double p = envelope(n).peak;
        return p > 0.0 ? std::min(p, cap) : cap;
    }

    /// Harmonic frequency in cycles per sample.
    double normalized_frequency(std::size_t n) const {
        return static_cast<double>(n) * xi0_hz / fs;
    }

    void validate() const {
        if (n_harmonics < 1) throw invalid_argument("a tone needs at least one harmonic");
        if (!(fs > 0)) throw invalid_argument("sample rate must be positive");
        if (!(xi0_hz > 0)) throw invalid_argument("fundamental frequency must be positive");
        if (!(duration_s > 0) || length() == 0) throw invalid_argument("duration must be positive");
        const double top = static_cast<double>(n_harmonics) * xi0_hz;
        if (!(top < fs / 2.0))
            throw invalid_argument("Nyquist violation: N*xi0 = " + std::to_string(top) +
                                   " Hz is not below fs/2 = " + std::to_string(fs / 2.0) + " Hz");
        if (envelopes.size() != 1 && envelopes.size() != n_harmonics)
            throw invalid_argument("expected 1 or " + std::to_string(n_harmonics) + " envelope specs, got " +
                                   std::to_string(envelopes.size()));
        if (edge_fade_s < 0 || 2.0 * edge_fade_s > period())
            throw invalid_argument("edge fade must be nonnegative and fit twice into the tone");
        for (const auto& e : envelopes) e.validate();
    }
};

namespace detail {

struct ShapeValue {
    double value = 0.0;
    double slope = 0.0; // right derivative, per second
};

inline ShapeValue attack_decay_sustain(const EnvelopeSpec& e, double u) {
    if (u < 0) return {0.0, 0.0};
    const double attack = e.kind == EnvelopeKind::sharp_attack ? 0.0 : e.attack_s;
    // Without a decay segment the attack ramps straight to the sustain level.
    const double top = e.decay_s > 0.0 ? 1.0 : e.sustain_level;
    if (u < attack) return {top * u / attack, top / attack};
    u -= attack;
    if (u < e.decay_s)
        return {1.0 - (1.0 - e.sustain_level) * u / e.decay_s, -(1.0 - e.sustain_level) / e.decay_s};
    return {e.sustain_level, 0.0};
}

inline ShapeValue adsr_shape(const EnvelopeSpec& e, double t, double end) {
    if (e.release_s > 0.0) {
        const double start = end - e.release_s;
        if (t >= start) {
            const double level = attack_decay_sustain(e, start - e.onset_s).value;
            return {level * (end - t) / e.release_s, -level / e.release_s};
        }
    }
    return attack_decay_sustain(e, t - e.onset_s);
}

inline ShapeValue modulator(const EnvelopeSpec& e, double t) {
    const double w = 2.0 * std::numbers::pi * e.rate_hz;
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    double mod = 0.0;
    double dmod = 0.0;
    if (e.modulation == ModulationShape::offset_sine) {
        mod = 0.5 * (1.0 + s);
        dmod = 0.5 * w * c;
    } else {
        mod = std::abs(s);
        dmod = (s >= 0 ? 1.0 : -1.0) * w * c;
    }
    return {1.0 - e.depth + e.depth * mod, e.depth * dmod};
}

inline ShapeValue shape(const EnvelopeSpec& e, double t, double end) {
    if (t < 0.0 || t >= end) return {0.0, 0.0};
    switch (e.kind) {
    case EnvelopeKind::constant:
        return t < e.onset_s ? ShapeValue{} : ShapeValue{1.0, 0.0};
    case EnvelopeKind::smooth_adsr:
    case EnvelopeKind::sharp_attack:
        return adsr_shape(e, t, end);
    case EnvelopeKind::amplitude_modulated: {
        ShapeValue carrier = adsr_shape(e, t, end);
        ShapeValue m = modulator(e, t);
        return {carrier.value * m.value, carrier.slope * m.value + carrier.value * m.slope};
    }
    }
    return {};
}

inline ShapeValue fade(double t, double end, double width) {
    if (width <= 0.0) return {1.0, 0.0};
    const double k = std::numbers::pi / width;
    if (t < width) return {0.5 * (1.0 - std::cos(k * t)), 0.5 * k * std::sin(k * t)};
    if (end - t < width) {
        double r = end - t;
        return {0.5 * (1.0 - std::cos(k * r)), -0.5 * k * std::sin(k * r)};
    }
    return {1.0, 0.0};
}

} // namespace detail

/// A_n(t), zero outside [0, T).
inline double envelope_value(const Tone& tone, std::size_t n, double t) {
    const double end = tone.period();
    if (t < 0.0 || t >= end) return 0.0;
    auto s = detail::shape(tone.envelope(n), t, end);
    auto f = detail::fade(t, end, tone.edge_fade_s);
    return tone.peak(n) * s.value * f.value;
}

/// Analytic right derivative of A_n at t, per second.
inline double envelope_derivative(const Tone& tone, std::size_t n, double t) {
    const double end = tone.period();
    if (t < 0.0 || t >= end) return 0.0;
    auto s = detail::shape(tone.envelope(n), t, end);
    auto f = detail::fade(t, end, tone.edge_fade_s);
    return tone.peak(n) * (s.slope * f.value + s.value * f.slope);
}

/// A_n on the sample grid t_i = i / fs.
inline std::vector<double> sample_envelope(const Tone& tone, std::size_t n) {
    const std::size_t len = tone.length();
    std::vector<double> out(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = envelope_value(tone, n, static_cast<double>(i) / tone.fs);
    return out;
}

/// True when A_n jumps inside the tone.
inline bool envelope_has_jump(const Tone& tone, std::size_t n) {
    const EnvelopeSpec& e = tone.envelope(n);
    if (e.kind == EnvelopeKind::sharp_attack) return true;
    if (e.onset_s <= 0.0) return false;
    const double after = detail::shape(e, e.onset_s, tone.period()).value;
    const bool ramps = (e.kind == EnvelopeKind::smooth_adsr || e.kind == EnvelopeKind::amplitude_modulated) &&
                       e.attack_s > 0.0;
    return after > 0.0 && !ramps;
}

namespace detail {

inline std::complex<double> harmonic_phasor(const Tone& tone, std::size_t n, std::size_t i, double extra_cycles) {
    double cycles = static_cast<double>(n) * tone.xi0_hz * static_cast<double>(i) / tone.fs;
    cycles -= std::floor(cycles);
    return std::polar(1.0, 2.0 * std::numbers::pi * (cycles + extra_cycles));
}

} // namespace detail

/// Single harmonic A_n(t) exp(2 pi i n xi0 t) on the sample grid.
inline std::vector<std::complex<double>> synthesize_harmonic(const Tone& tone, std::size_t n) {
    tone.validate();
    const std::size_t len = tone.length();
    std::vector<std::complex<double>> out(len);
    for (std::size_t i = 0; i < len; ++i) {
        double a = envelope_value(tone, n, static_cast<double>(i) / tone.fs);
        out[i] = a * detail::harmonic_phasor(tone, n, i, 0.0);
    }
    return out;
}

inline std::vector<std::complex<double>> synthesize(const Tone& tone) {
    tone.validate();
    const std::size_t len = tone.length();
    std::vector<std::complex<double>> out(len);
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) {
        for (std::size_t i = 0; i < len; ++i) {
            double a = envelope_value(tone, n, static_cast<double>(i) / tone.fs);
            if (a != 0.0) out[i] += a * detail::harmonic_phasor(tone, n, i, 0.0);
        }
    }
    return out;
}

inline std::vector<std::complex<double>> concatenate(std::span<const std::vector<std::complex<double>>> parts) {
    std::vector<std::complex<double>> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

inline std::vector<double> real_part(std::span<const std::complex<double>> x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].real();
    return out;
}

/// Largest admissible sup-norm of a phase deformation for error level eps.
inline double freqmod_threshold(double eps) {
    if (!(eps > 0.0) || eps > 2.0) throw invalid_argument("eps must lie in (0, 2]");
    return std::acos(1.0 - eps * eps / 2.0) / (2.0 * std::numbers::pi);
}

enum class DeformationKind { none, envelope_warp, frequency_mod };

struct Deformation {
    DeformationKind kind = DeformationKind::none;
    std::vector<double> warp_s;              // tau(t_i) in seconds, envelope_warp
    std::vector<std::vector<double>> phase;  // tau_n(t_i) in cycles, frequency_mod (1 shared or N)
    double eps = 0.1;                        // frequency_mod error level
    double max_warp_s = 0.1;                 // admissible ||tau||_inf for envelope_warp

    static Deformation identity() { return {}; }

    static Deformation envelope_warp(std::vector<double> tau, double max_warp_s = 0.1) {
        Deformation d;
        d.kind = DeformationKind::envelope_warp;
        d.warp_s = std::move(tau);
        d.max_warp_s = max_warp_s;
        return d;
    }

    static Deformation frequency_mod(std::vector<std::vector<double>> tau_n, double eps) {
        Deformation d;
        d.kind = DeformationKind::frequency_mod;
        d.phase = std::move(tau_n);
        d.eps = eps;
        return d;
    }
};

inline double sup_norm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline void validate_deformation(const Tone& tone, const Deformation& d) {
    const std::size_t len = tone.length();
    if (d.kind == DeformationKind::envelope_warp) {
        if (d.warp_s.size() != len)
            throw invalid_argument("warp has " + std::to_string(d.warp_s.size()) + " samples, tone has " +
                                   std::to_string(len));
        double sup = sup_norm(d.warp_s);
        if (sup > d.max_warp_s)
            throw invalid_argument("envelope warp violates ||tau||_inf <= " + std::to_string(d.max_warp_s) +
                                   " s (got " + std::to_string(sup) + " s)");
    } else if (d.kind == DeformationKind::frequency_mod) {
        if (d.phase.size() != 1 && d.phase.size() != tone.n_harmonics)
            throw invalid_argument("frequency modulation needs 1 or N phase functions");
        const double limit = freqmod_threshold(d.eps);
        for (std::size_t i = 0; i < d.phase.size(); ++i) {
            if (d.phase[i].size() != len) throw invalid_argument("phase function length mismatch");
            double sup = sup_norm(d.phase[i]);
            if (!(sup < limit))
                throw invalid_argument("frequency modulation violates ||tau_n||_inf < arccos(1-eps^2/2)/(2 pi) = " +
                                       std::to_string(limit) + " (harmonic " + std::to_string(i + 1) +
                                       " has " + std::to_string(sup) + ")");
        }
    }
}

inline std::vector<std::complex<double>> deform(const Tone& tone, const Deformation& d) {
    tone.validate();
    validate_deformation(tone, d);
    if (d.kind == DeformationKind::none) return synthesize(tone);
    const std::size_t len = tone.length();
    std::vector<std::complex<double>> out(len);
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) {
        for (std::size_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(i) / tone.fs;
            if (d.kind == DeformationKind::envelope_warp) {
                double a = envelope_value(tone, n, t + d.warp_s[i]);
                if (a != 0.0) out[i] += a * detail::harmonic_phasor(tone, n, i, 0.0);
            } else {
                const auto& tau = d.phase.size() == 1 ? d.phase.front() : d.phase[n - 1];
                double a = envelope_value(tone, n, t);
                if (a != 0.0) out[i] += a * detail::harmonic_phasor(tone, n, i, tau[i]);
            }
        }
    }
    return out;
}

struct DerivativeBound {
    double value = 0.0; // per second
    bool nondifferentiable = false;
};

/// sup |A_n'| on the sample grid: analytic for continuous envelopes, the
/// largest forward difference times fs when the envelope jumps.
inline DerivativeBound envelope_derivative_bound(const Tone& tone, std::size_t n) {
    tone.validate();
    if (n < 1 || n > tone.n_harmonics) throw invalid_argument("harmonic index out of range");
    DerivativeBound out;
    const std::size_t len = tone.length();
    if (envelope_has_jump(tone, n)) {
        out.nondifferentiable = true;
        auto a = sample_envelope(tone, n);
        for (std::size_t i = 0; i + 1 < len; ++i)
            out.value = std::max(out.value, std::abs(a[i + 1] - a[i]) * tone.fs);
        return out;
    }
    for (std::size_t i = 0; i < len; ++i)
        out.value = std::max(out.value, std::abs(envelope_derivative(tone, n, static_cast<double>(i) / tone.fs)));
    return out;
}

/// Smallest C with |A_n'(t)| <= C (1 + |t|^s)^-1 over a 4x oversampled grid,
/// both sides of every knot and the steepest points of the edge fades.
inline double envelope_decay_constant(const Tone& tone, std::size_t n, double s) {
    if (!(s > 1.0)) throw invalid_argument("decay exponent s must exceed 1");
    const EnvelopeSpec& e = tone.envelope(n);
    const double end = tone.period();
    const std::size_t len = tone.length();
    auto weight = [s](double t) { return 1.0 + std::pow(std::abs(t), s); };
    double c = 0.0;
    constexpr std::size_t oversample = 4;
    for (std::size_t i = 0; i < len * oversample; ++i) {
        double t = static_cast<double>(i) / (tone.fs * oversample);
        c = std::max(c, std::abs(envelope_derivative(tone, n, t)) * weight(t));
    }
    const double attack = e.kind == EnvelopeKind::sharp_attack ? 0.0 : e.attack_s;
    const double fade = tone.edge_fade_s;
    const double knots[] = {e.onset_s, e.onset_s + attack, e.onset_s + attack + e.decay_s,
                            end - e.release_s, fade, end - fade, end, fade / 2, end - fade / 2};
    for (double k : knots) {
        for (double t : {k - 1e-9, k + 1e-9}) {
            if (t < 0.0 || t >= end) continue;
            c = std::max(c, std::abs(envelope_derivative(tone, n, t)) * weight(t));
        }
    }
    return c;
}

} // namespace gscat
