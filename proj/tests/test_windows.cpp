#include "gscat/gabor.hpp"
#include "gscat/windows.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gscat;

TEST(MakeWindow, RectangularFour) {
    const Window w = make_window(WindowKind::rectangular, 4);
    ASSERT_EQ(w.length(), 4u);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(w[t], std::complex<double>(1.0));
    EXPECT_DOUBLE_EQ(w.l2_norm(), 2.0);
    EXPECT_DOUBLE_EQ(w.l1_norm(), 4.0);
}

TEST(MakeWindow, GaussianPeakAndSymmetry) {
    const Window w = make_window(WindowKind::gaussian, 65, 16);
    EXPECT_EQ(w.center(), 32u);
    EXPECT_DOUBLE_EQ(w[w.center()].real(), 1.0);
    for (std::size_t k = 1; k <= 32; ++k) EXPECT_EQ(w[32 + k], w[32 - k]);
    const double x = 5.0 / 16.0;
    EXPECT_NEAR(w[37].real(), std::exp(-std::numbers::pi * x * x), 1e-15);
}

TEST(MakeWindow, HannNormMatchesDirectSum) {
    const Window w = make_window(WindowKind::hann, 64);
    double sq = 0.0;
    for (int t = 0; t < 64; ++t) {
        const double v = std::pow(std::sin(std::numbers::pi * t / 64.0), 2);
        sq += v * v;
    }
    EXPECT_NEAR(w.l2_norm(), std::sqrt(sq), 1e-12);
}

TEST(MakeWindow, RejectsBadArguments) {
    EXPECT_THROW(make_window(WindowKind::gaussian, 0, 1.0), invalid_argument);
    EXPECT_THROW(make_window(WindowKind::gaussian, 16, 0.0), invalid_argument);
    EXPECT_THROW(make_window(WindowKind::gaussian, 16, -2.0), invalid_argument);
    EXPECT_THROW(Window::from_samples(WindowKind::custom, {0.0, 0.0}), invalid_argument);
    EXPECT_THROW(Window::from_samples(WindowKind::custom, {}), invalid_argument);
    EXPECT_NO_THROW(make_window(WindowKind::hann, 16, 0.0));
}

TEST(WindowProperties, SymmetryNonnegativityAndCachedNorms) {
    for (std::size_t len : {1u, 2u, 7u, 16u, 33u, 64u, 101u}) {
        for (auto kind : {WindowKind::gaussian, WindowKind::hann}) {
            const Window w = make_window(kind, len, 0.3 * static_cast<double>(len) + 0.5);
            const std::size_t c = w.center();
            double l1 = 0.0, sq = 0.0;
            for (std::size_t t = 0; t < len; ++t) {
                EXPECT_EQ(w[t].imag(), 0.0);
                EXPECT_GE(w[t].real(), 0.0);
                l1 += std::abs(w[t]);
                sq += std::norm(w[t]);
            }
            for (std::size_t k = 1; k <= c && c + k < len; ++k) EXPECT_NEAR(w[c + k].real(), w[c - k].real(), 1e-12);
            EXPECT_NEAR(w.l1_norm(), l1, 1e-12 * l1);
            EXPECT_NEAR(w.l2_norm(), std::sqrt(sq), 1e-12 * std::sqrt(sq));
            EXPECT_GE(w.l1_norm() + 1e-12, w.l2_norm());
            EXPECT_GE(w.l2_norm() + 1e-12, w.l2_norm() * w.l2_norm() / w.l1_norm());
        }
    }
}

TEST(DecayConstants, DeltaWindowHasZeroTimeSpread) {
    std::vector<std::complex<double>> s(9, 0.0);
    s[4] = 1.0;
    const Window w = Window::from_samples(WindowKind::custom, s);
    for (double exponent : {1.5, 2.0, 3.0}) EXPECT_EQ(decay_constants(w, exponent).c_g, 0.0);
}

TEST(DecayConstants, RectangularThree) {
    EXPECT_DOUBLE_EQ(decay_constants(make_window(WindowKind::rectangular, 3), 3.0).c_g, 2.0);
}

TEST(DecayConstants, SpectralConstantMatchesExhaustiveScan) {
    const Window w = make_window(WindowKind::gaussian, 65, 16);
    const double s = 3.0;
    const int n = 65;
    double best = 0.0;
    for (int u = 0; u < n; ++u) {
        std::complex<double> acc{};
        for (int t = 0; t < n; ++t)
            acc += w[static_cast<std::size_t>(t)] * std::polar(1.0, -2.0 * std::numbers::pi * u * (t - 32) / n);
        const int centred = u <= n / 2 ? u : u - n;
        best = std::max(best, std::abs(acc) * (1.0 + std::pow(std::abs(centred), s)));
    }
    EXPECT_NEAR(decay_constants(w, s).c_ghat, best, 1e-10 * best);
}

TEST(DecayConstants, CorpusMatchesScan) {
    for (auto kind : {WindowKind::gaussian, WindowKind::hann, WindowKind::rectangular}) {
        for (std::size_t len : {8u, 31u, 64u}) {
            const Window w = make_window(kind, len, static_cast<double>(len) / 4.0);
            const auto n = static_cast<int>(len);
            const int c = n / 2;
            double cg = 0.0, best = 0.0;
            for (int t = 0; t < n; ++t) cg += std::abs(t - c) * std::abs(w[static_cast<std::size_t>(t)]);
            for (int u = 0; u < n; ++u) {
                std::complex<double> acc{};
                for (int t = 0; t < n; ++t)
                    acc += w[static_cast<std::size_t>(t)] * std::polar(1.0, -2.0 * std::numbers::pi * u * (t - c) / n);
                const int centred = u <= n / 2 ? u : u - n;
                best = std::max(best, std::abs(acc) * (1.0 + std::pow(std::abs(centred), 2.5)));
            }
            const auto dc = decay_constants(w, 2.5);
            EXPECT_NEAR(dc.c_g, cg, 1e-12 * std::max(1.0, cg));
            EXPECT_NEAR(dc.c_ghat, best, 1e-10 * best);
        }
    }
}

TEST(DecayConstants, RejectsExponentAtMostOne) {
    const Window w = make_window(WindowKind::hann, 16);
    EXPECT_THROW(decay_constants(w, 1.0), invalid_argument);
    EXPECT_THROW(decay_constants(w, 0.5), invalid_argument);
}

TEST(Normalize, UpperBoundLandsInUnitBand) {
    struct Case {
        WindowKind kind;
        std::size_t len;
        double shape;
        std::size_t a, m, l;
    };
    for (const Case& c : {Case{WindowKind::gaussian, 65, 16, 16, 64, 256}, Case{WindowKind::hann, 64, 0, 16, 64, 512},
                          Case{WindowKind::gaussian, 144, 36, 10, 60, 300},
                          Case{WindowKind::rectangular, 8, 0, 4, 8, 64}}) {
        const Window w = make_window(c.kind, c.len, c.shape).scaled(3.7);
        const Window n = normalize_for_contractivity(w, {c.a, c.m}, c.l);
        const FrameBounds fb = frame_bounds(GaborFrame(n, c.a, c.m, c.l));
        EXPECT_LE(fb.upper, 1.0);
        EXPECT_GE(fb.upper, 1.0 - 1e-6);
    }
}

TEST(Normalize, Idempotent) {
    const Window w = normalize_for_contractivity(make_window(WindowKind::gaussian, 65, 16), {16, 64}, 256);
    const Window again = normalize_for_contractivity(w, {16, 64}, 256);
    for (std::size_t t = 0; t < w.length(); ++t) EXPECT_NEAR(std::abs(again[t] - w[t]), 0.0, 1e-9);
}

TEST(Normalize, ScaleMatchesIterativeBound) {
    const Window w = make_window(WindowKind::gaussian, 65, 16);
    const GaborFrame f(w, 16, 64, 256);
    const FrameBounds iter = frame_bounds_iterative(f);
    const Window n = normalize_for_contractivity(w, {16, 64}, 256);
    const double scale = n[w.center()].real() / w[w.center()].real();
    EXPECT_NEAR(scale, 1.0 / std::sqrt(iter.upper), 1e-6 / std::sqrt(iter.upper));
}

TEST(Normalize, RejectsNonFrame) {
    // Support 4 with hop 8 leaves gaps, so the lower frame bound is 0.
    EXPECT_THROW(normalize_for_contractivity(make_window(WindowKind::rectangular, 4), {8, 8}, 64), not_a_frame);
    EXPECT_THROW(normalize_for_contractivity(make_window(WindowKind::rectangular, 4), {0, 8}, 64),
                 invalid_argument);
}
