#pragma once

// Analysis windows and the decay constants used by the layer error bounds.
//
// A window of length W is stored as W samples; sample t sits at offset
// t - center from the window origin, with center = floor(W / 2). Frequencies
// handed to decay_constants are measured in window bins: one unit equals
// 1 / W cycles per sample, so for a frame whose window length equals its
// channel count one unit is exactly one channel.

#include "gscat/errors.hpp"
#include "gscat/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gscat {

enum class WindowKind { gaussian, hann, rectangular, custom };

inline std::string_view to_string(WindowKind kind) {
    switch (kind) {
    case WindowKind::gaussian: return "gaussian";
    case WindowKind::hann: return "hann";
    case WindowKind::rectangular: return "rectangular";
    case WindowKind::custom: return "custom";
    }
    return "custom";
}

inline WindowKind parse_window_kind(std::string_view name) {
    if (name == "gaussian") return WindowKind::gaussian;
    if (name == "hann") return WindowKind::hann;
    if (name == "rectangular") return WindowKind::rectangular;
    throw invalid_argument("unknown window kind '" + std::string(name) + "'");
}

class Window {
public:
    static Window from_samples(WindowKind kind, std::vector<std::complex<double>> samples,
                               double shape_param = 0.0) {
        if (samples.empty()) throw invalid_argument("window length must be at least 1");
        bool nonzero = std::any_of(samples.begin(), samples.end(),
                                   [](const auto& v) { return v != std::complex<double>{}; });
        if (!nonzero) throw invalid_argument("window samples are all zero");
        return Window(kind, std::move(samples), shape_param);
    }

    WindowKind kind() const noexcept { return kind_; }
    std::size_t length() const noexcept { return samples_.size(); }
    std::size_t center() const noexcept { return samples_.size() / 2; }
    double shape_param() const noexcept { return shape_; }
    std::span<const std::complex<double>> samples() const noexcept { return samples_; }
    const std::complex<double>& operator[](std::size_t t) const { return samples_[t]; }

    double l1_norm() const noexcept { return l1_; }
    double l2_norm() const noexcept { return l2_; }

    bool is_real() const noexcept {
        return std::all_of(samples_.begin(), samples_.end(),
                           [](const auto& v) { return v.imag() == 0.0; });
    }

    Window scaled(double factor) const {
        std::vector<std::complex<double>> s(samples_);
        for (auto& v : s) v *= factor;
        return from_samples(kind_, std::move(s), shape_);
    }

    /// Discrete-time Fourier transform at `freq` cycles per sample, phase
    /// referenced to the window center.
    std::complex<double> dtft(double freq) const {
        std::complex<double> acc{};
        const auto c = static_cast<double>(center());
        for (std::size_t t = 0; t < samples_.size(); ++t) {
            double phase = -2.0 * std::numbers::pi * freq * (static_cast<double>(t) - c);
            acc += samples_[t] * std::polar(1.0, phase);
        }
        return acc;
    }

private:
    Window(WindowKind kind, std::vector<std::complex<double>> samples, double shape)
        : kind_(kind), shape_(shape), samples_(std::move(samples)) {
        double sq = 0.0;
        for (const auto& v : samples_) {
            l1_ += std::abs(v);
            sq += std::norm(v);
        }
        l2_ = std::sqrt(sq);
    }

    WindowKind kind_;
    double shape_ = 0.0;
    std::vector<std::complex<double>> samples_;
    double l1_ = 0.0;
    double l2_ = 0.0;
};

/// Builds a window. For gaussian, shape_param is the width in samples and
/// g[t] = exp(-pi ((t - center) / shape_param)^2). Hann and rectangular ignore it.
inline Window make_window(WindowKind kind, std::size_t length, double shape_param = 0.0) {
    if (length == 0) throw invalid_argument("window length must be at least 1");
    std::vector<std::complex<double>> s(length);
    const auto c = static_cast<double>(length / 2);
    const auto n = static_cast<double>(length);
    switch (kind) {
    case WindowKind::gaussian:
        if (!(shape_param > 0.0))
            throw invalid_argument("gaussian shape parameter must be positive");
        for (std::size_t t = 0; t < length; ++t) {
            double x = (static_cast<double>(t) - c) / shape_param;
            s[t] = std::exp(-std::numbers::pi * x * x);
        }
        break;
    case WindowKind::hann:
        // Periodic Hann centred on `center`; peak 1 at the center sample.
        for (std::size_t t = 0; t < length; ++t) {
            double x = (static_cast<double>(t) - c) / n;
            s[t] = 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * x);
        }
        if (length == 1) s[0] = 1.0;
        break;
    case WindowKind::rectangular:
        std::fill(s.begin(), s.end(), std::complex<double>(1.0));
        break;
    case WindowKind::custom:
        throw invalid_argument("custom windows are built with Window::from_samples");
    }
    return Window::from_samples(kind, std::move(s), shape_param);
}

struct DecayConstants {
    double c_g = 0.0;    // sum_t |t - center| |w[t]|
    double c_ghat = 0.0; // max_w |w^(w)| (1 + |w|^s), w in window bins
    double s = 0.0;
    std::size_t grid_length = 0;
};

/// Decay constants of a window. C_ghat is the maximum over the DFT grid of
/// length `grid_length` (default: the window length, i.e. whole bins); a
/// longer grid samples the spectrum at fractional bins.
inline DecayConstants decay_constants(const Window& w, double s, std::size_t grid_length = 0) {
    if (!(s > 1.0)) throw invalid_argument("decay exponent s must exceed 1");
    const std::size_t n = w.length();
    if (grid_length == 0) grid_length = n;
    if (grid_length < n) throw invalid_argument("decay grid shorter than the window");

    DecayConstants out;
    out.s = s;
    out.grid_length = grid_length;
    const auto c = static_cast<long>(w.center());
    for (std::size_t t = 0; t < n; ++t)
        out.c_g += static_cast<double>(std::labs(static_cast<long>(t) - c)) * std::abs(w[t]);

    // Place the window circularly with its center at index 0; only |w^| is used.
    std::vector<std::complex<double>> buf(grid_length);
    for (std::size_t t = 0; t < n; ++t) {
        long idx = static_cast<long>(t) - c;
        if (idx < 0) idx += static_cast<long>(grid_length);
        buf[static_cast<std::size_t>(idx)] += w[t];
    }
    fft_forward(buf);
    const double bin_scale = static_cast<double>(n) / static_cast<double>(grid_length);
    const auto g = static_cast<long>(grid_length);
    for (long u = 0; u < g; ++u) {
        long centred = (u <= g / 2) ? u : u - g;
        double omega = std::abs(static_cast<double>(centred) * bin_scale);
        double value = std::abs(buf[static_cast<std::size_t>(u)]) * (1.0 + std::pow(omega, s));
        out.c_ghat = std::max(out.c_ghat, value);
    }
    return out;
}

} // namespace gscat
