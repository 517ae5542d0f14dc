#pragma once

// Slow reference implementations used as test oracles.

#include "gscat/gabor.hpp"
#include "gscat/scattering.hpp"

#include <Eigen/Eigenvalues>

#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using gscat::cvec;
using gscat::rvec;

inline cvec random_complex(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d;
    cvec x(n);
    for (auto& v : x) v = {d(rng), d(rng)};
    return x;
}

inline rvec random_real(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d;
    rvec x(n);
    for (auto& v : x) v = d(rng);
    return x;
}

/// Direct inner products c[j][k] = sum_t x[t] conj(g[t - ak] e^{2 pi i j t / M}).
inline std::vector<std::vector<std::complex<double>>> dgt(const cvec& x, const gscat::GaborFrame& f) {
    const cvec g = f.periodic_window();
    const std::size_t len = f.signal_length();
    const std::size_t m = f.channels();
    std::vector<std::vector<std::complex<double>>> c(m, std::vector<std::complex<double>>(f.frames()));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < f.frames(); ++k) {
            std::complex<double> acc{};
            for (std::size_t t = 0; t < len; ++t) {
                const std::size_t u = (t + len - (f.time_step() * k) % len) % len;
                const double ph = 2.0 * std::numbers::pi * static_cast<double>((j * t) % m) / static_cast<double>(m);
                acc += x[t] * std::conj(g[u] * std::polar(1.0, ph));
            }
            c[j][k] = acc;
        }
    return c;
}

/// Dense frame operator S = sum_{j,k} g_jk g_jk^*.
inline Eigen::MatrixXcd frame_matrix(const gscat::GaborFrame& f) {
    const cvec g = f.periodic_window();
    const std::size_t len = f.signal_length();
    const std::size_t m = f.channels();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(len));
    Eigen::VectorXcd atom(static_cast<Eigen::Index>(len));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < f.frames(); ++k) {
            for (std::size_t t = 0; t < len; ++t) {
                const std::size_t u = (t + len - (f.time_step() * k) % len) % len;
                const double ph = 2.0 * std::numbers::pi * static_cast<double>((j * t) % m) / static_cast<double>(m);
                atom[static_cast<Eigen::Index>(t)] = g[u] * std::polar(1.0, ph);
            }
            s += atom * atom.adjoint();
        }
    return s;
}

inline std::pair<double, double> dense_bounds(const gscat::GaborFrame& f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(frame_matrix(f), Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

/// Modulus of the direct DGT, as a channel-major matrix.
inline std::vector<rvec> layer(const cvec& x, const gscat::GaborFrame& f) {
    auto c = dgt(x, f);
    std::vector<rvec> out(c.size());
    for (std::size_t j = 0; j < c.size(); ++j)
        for (const auto& v : c[j]) out[j].push_back(std::abs(v));
    return out;
}

inline double max_abs(const cvec& x) {
    double m = 0.0;
    for (const auto& v : x) m = std::max(m, std::abs(v));
    return m;
}

} // namespace oracle
