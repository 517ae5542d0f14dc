#pragma once

// Discrete Gabor analysis on Z_L with a separable lattice (time step a,
// M channels). All shifts are circular. Channel j corresponds to normalized
// frequency j / M (j * fs / M Hz at layer 0).
//
//   c[j][k] = sum_t x[t] conj(g[t - a k]) exp(-2 pi i j t / M)
//
// where g is the window placed on Z_L with its center at index 0.

#include "gscat/errors.hpp"
#include "gscat/fft.hpp"
#include "gscat/windows.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gscat {

using cvec = std::vector<std::complex<double>>;
using rvec = std::vector<double>;

struct Lattice {
    std::size_t time_step = 1;
    std::size_t channels = 1;
};

class GaborFrame {
public:
    GaborFrame(Window window, std::size_t time_step, std::size_t channels, std::size_t signal_length)
        : window_(std::move(window)), a_(time_step), m_(channels), l_(signal_length) {
        if (a_ == 0 || m_ == 0 || l_ == 0)
            throw invalid_argument("lattice parameters and signal length must be positive");
        if (l_ % a_ != 0)
            throw invalid_argument("time step " + std::to_string(a_) + " does not divide signal length " +
                                   std::to_string(l_));
        if (l_ % m_ != 0)
            throw invalid_argument("channel count " + std::to_string(m_) +
                                   " does not divide signal length " + std::to_string(l_));
        if (window_.length() > l_)
            throw invalid_argument("window length " + std::to_string(window_.length()) +
                                   " exceeds signal length " + std::to_string(l_));
    }

    const Window& window() const noexcept { return window_; }
    std::size_t time_step() const noexcept { return a_; }
    std::size_t channels() const noexcept { return m_; }
    std::size_t signal_length() const noexcept { return l_; }
    std::size_t frames() const noexcept { return l_ / a_; }
    Lattice lattice() const noexcept { return {a_, m_}; }
    double redundancy() const noexcept { return static_cast<double>(m_) / static_cast<double>(a_); }

    /// Window support fits inside one channel period, so the frame operator is diagonal.
    bool is_painless() const noexcept { return window_.length() <= m_; }

    GaborFrame with_window(Window w) const { return GaborFrame(std::move(w), a_, m_, l_); }

    std::string id() const {
        return std::string(to_string(window_.kind())) + "-W" + std::to_string(window_.length()) + "-a" +
               std::to_string(a_) + "-M" + std::to_string(m_) + "-L" + std::to_string(l_);
    }

    /// The window laid out on Z_L with its center at index 0.
    cvec periodic_window() const {
        cvec g(l_);
        const long c = static_cast<long>(window_.center());
        for (std::size_t t = 0; t < window_.length(); ++t)
            g[wrap(static_cast<long>(t) - c)] += window_[t];
        return g;
    }

    /// Time-frequency atom M_{j} T_{0} g on Z_L, modulation phase taken at absolute time.
    cvec atom(std::size_t channel) const {
        cvec g = periodic_window();
        for (std::size_t t = 0; t < l_; ++t) g[t] *= modulation(channel, static_cast<long>(t));
        return g;
    }

    std::complex<double> modulation(std::size_t channel, long t) const {
        auto r = static_cast<long>((static_cast<unsigned long long>(channel) *
                                    static_cast<unsigned long long>(wrap(t))) % m_);
        return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(m_));
    }

    std::size_t wrap(long t) const noexcept {
        auto l = static_cast<long>(l_);
        long r = t % l;
        return static_cast<std::size_t>(r < 0 ? r + l : r);
    }

private:
    Window window_;
    std::size_t a_;
    std::size_t m_;
    std::size_t l_;
};

/// Channel-by-time matrix, row-major in the channel index.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t channels, std::size_t frames, std::size_t layer = 0, std::string frame_id = {})
        : channels_(channels), frames_(frames), layer_(layer), frame_id_(std::move(frame_id)),
          values_(channels * frames) {}

    std::size_t channels() const noexcept { return channels_; }
    std::size_t frames() const noexcept { return frames_; }
    std::size_t layer() const noexcept { return layer_; }
    const std::string& frame_id() const noexcept { return frame_id_; }
    bool empty() const noexcept { return values_.empty(); }

    T& operator()(std::size_t j, std::size_t k) { return values_[j * frames_ + k]; }
    const T& operator()(std::size_t j, std::size_t k) const { return values_[j * frames_ + k]; }

    std::span<T> row(std::size_t j) { return {values_.data() + j * frames_, frames_}; }
    std::span<const T> row(std::size_t j) const { return {values_.data() + j * frames_, frames_}; }

    std::span<const T> values() const noexcept { return values_; }
    std::span<T> values() noexcept { return values_; }

private:
    std::size_t channels_ = 0;
    std::size_t frames_ = 0;
    std::size_t layer_ = 0;
    std::string frame_id_;
    std::vector<T> values_;
};

using CoefficientGrid = Grid<std::complex<double>>;
using MagnitudeGrid = Grid<double>;

namespace detail {

template <class Sample>
CoefficientGrid dgt_impl(std::span<const Sample> signal, const GaborFrame& frame, std::size_t layer) {
    const std::size_t len = frame.signal_length();
    if (signal.size() != len)
        throw invalid_argument("signal length " + std::to_string(signal.size()) +
                               " does not match frame length " + std::to_string(len));
    const std::size_t a = frame.time_step();
    const std::size_t m = frame.channels();
    const std::size_t frames = frame.frames();
    const Window& w = frame.window();
    const std::size_t width = w.length();
    cvec taps(width);
    for (std::size_t s = 0; s < width; ++s) taps[s] = std::conj(w[s]);

    CoefficientGrid grid(m, frames, layer, frame.id());
    cvec buf(m);
    for (std::size_t k = 0; k < frames; ++k) {
        std::fill(buf.begin(), buf.end(), std::complex<double>{});
        std::size_t t = frame.wrap(static_cast<long>(a * k) - static_cast<long>(w.center()));
        std::size_t r = t % m;
        for (std::size_t s = 0; s < width; ++s) {
            buf[r] += signal[t] * taps[s];
            if (++t == len) { t = 0; r = 0; }
            else if (++r == m) r = 0;
        }
        fft_forward(buf);
        for (std::size_t j = 0; j < m; ++j) grid(j, k) = buf[j];
    }
    return grid;
}

} // namespace detail

/// Sampled short-time Fourier transform on the frame's lattice.
inline CoefficientGrid dgt(std::span<const std::complex<double>> signal, const GaborFrame& frame,
                           std::size_t layer = 0) {
    return detail::dgt_impl(signal, frame, layer);
}

inline CoefficientGrid dgt(std::span<const double> signal, const GaborFrame& frame, std::size_t layer = 0) {
    return detail::dgt_impl(signal, frame, layer);
}

inline MagnitudeGrid modulus(const CoefficientGrid& grid) {
    MagnitudeGrid out(grid.channels(), grid.frames(), grid.layer(), grid.frame_id());
    auto src = grid.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::abs(src[i]);
    return out;
}

struct FrameBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool exact = false;
    std::size_t iterations = 0;
};

struct IterationOptions {
    double tolerance = 1e-8;           // relative to B
    std::size_t max_iterations = 10000; // operator applications per bound
    std::size_t krylov_dim = 64;        // Lanczos basis size before a restart
    std::uint64_t seed = 0x5eedULL;
};

/// Applies the frame operator S = sum_{j,k} <., g_jk> g_jk through its Walnut
/// form: (S x)[t] = M sum_p G_p[t mod a] x[t - pM], with
/// G_p[t] = sum_k g[t - ak] conj(g[t - pM - ak]).
class FrameOperator {
public:
    explicit FrameOperator(const GaborFrame& frame)
        : len_(frame.signal_length()), a_(frame.time_step()), m_(frame.channels()) {
        const cvec g = frame.periodic_window();
        const std::size_t width = frame.window().length();
        const std::size_t shifts = len_ / m_;
        for (std::size_t p = 0; p < shifts; ++p) {
            std::size_t d = (p * m_) % len_;
            std::size_t dist = std::min(d, len_ - d);
            if (p != 0 && dist >= width) continue;
            cvec gp(a_);
            for (std::size_t t = 0; t < a_; ++t) {
                std::complex<double> acc{};
                for (std::size_t k = 0; k < len_ / a_; ++k) {
                    std::size_t u = frame.wrap(static_cast<long>(t) - static_cast<long>(a_ * k));
                    std::size_t v = frame.wrap(static_cast<long>(u) - static_cast<long>(p * m_));
                    acc += g[u] * std::conj(g[v]);
                }
                gp[t] = acc * static_cast<double>(m_);
            }
            shifts_.push_back(p);
            diagonals_.push_back(std::move(gp));
        }
    }

    std::size_t size() const noexcept { return len_; }

    void apply(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
        std::fill(out.begin(), out.end(), std::complex<double>{});
        for (std::size_t i = 0; i < shifts_.size(); ++i) {
            const std::size_t shift = (shifts_[i] * m_) % len_;
            const cvec& gp = diagonals_[i];
            for (std::size_t t = 0; t < len_; ++t) {
                std::size_t src = (t + len_ - shift) % len_;
                out[t] += gp[t % a_] * in[src];
            }
        }
    }

    /// Diagonal of S (the p = 0 term), a-periodic.
    const cvec& diagonal() const { return diagonals_.front(); }

    /// Nonzero shift indices p (shift by p M samples) and their a-periodic coefficients.
    const std::vector<std::size_t>& shifts() const { return shifts_; }
    const std::vector<cvec>& coefficients() const { return diagonals_; }
    std::size_t time_step() const noexcept { return a_; }
    std::size_t channels() const noexcept { return m_; }

private:
    std::size_t len_;
    std::size_t a_;
    std::size_t m_;
    std::vector<std::size_t> shifts_;
    std::vector<cvec> diagonals_;
};

namespace detail {

inline double norm2(std::span<const std::complex<double>> x) {
    double s = 0.0;
    for (const auto& v : x) s += std::norm(v);
    return std::sqrt(s);
}

// Extreme eigenvalue (largest or smallest) of a Hermitian operator by restarted
// Lanczos with full reorthogonalization. Stops when the Ritz residual
// ||S y - theta y|| drops below tolerance * scale, which puts an eigenvalue
// within that distance of theta. On a cap, `converged` is false and the last
// Ritz value is returned.
template <class Op>
double lanczos_extreme(const Op& op, std::size_t n, const IterationOptions& opt, bool largest, double scale,
                       std::size_t& iterations, bool& converged) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    cvec start(n);
    for (auto& v : start) v = {normal(rng), normal(rng)};

    const std::size_t dim = std::max<std::size_t>(2, std::min(opt.krylov_dim, n));
    std::vector<cvec> basis;
    cvec w(n);
    double theta = 0.0;
    iterations = 0;
    converged = false;
    while (iterations < opt.max_iterations) {
        const double ns = norm2(start);
        for (auto& v : start) v /= ns;
        basis.assign(1, start);
        std::vector<double> alpha, beta;
        Eigen::VectorXd ritz_vec;
        for (std::size_t j = 0; j < dim && iterations < opt.max_iterations; ++j) {
            op(basis[j], w);
            ++iterations;
            std::complex<double> dot{};
            for (std::size_t i = 0; i < n; ++i) dot += std::conj(basis[j][i]) * w[i];
            alpha.push_back(dot.real());
            // Full reorthogonalization, twice for stability.
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& v : basis) {
                    std::complex<double> c{};
                    for (std::size_t i = 0; i < n; ++i) c += std::conj(v[i]) * w[i];
                    for (std::size_t i = 0; i < n; ++i) w[i] -= c * v[i];
                }
            const double b = norm2(w);

            const auto m = static_cast<Eigen::Index>(alpha.size());
            Eigen::VectorXd diag(m), sub(std::max<Eigen::Index>(m - 1, 1));
            for (Eigen::Index i = 0; i < m; ++i) diag[i] = alpha[static_cast<std::size_t>(i)];
            for (Eigen::Index i = 0; i + 1 < m; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
            tri.computeFromTridiagonal(diag, sub.head(std::max<Eigen::Index>(m - 1, 0)), Eigen::ComputeEigenvectors);
            const Eigen::Index pick = largest ? m - 1 : 0;
            theta = tri.eigenvalues()[pick];
            ritz_vec = tri.eigenvectors().col(pick);
            const double residual = b * std::abs(ritz_vec[m - 1]);
            const double ref = scale > 0.0 ? scale : std::abs(theta);
            if (residual <= opt.tolerance * ref || b <= std::numeric_limits<double>::epsilon() * ref) {
                converged = true;
                return theta;
            }
            beta.push_back(b);
            cvec next(n);
            for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / b;
            basis.push_back(std::move(next));
        }
        // Restart from the current Ritz vector.
        std::fill(start.begin(), start.end(), std::complex<double>{});
        for (Eigen::Index c = 0; c < ritz_vec.size(); ++c)
            for (std::size_t i = 0; i < n; ++i) start[i] += ritz_vec[c] * basis[static_cast<std::size_t>(c)][i];
    }
    return theta;
}

} // namespace detail

/// Extreme eigenvalues of S by matrix-free Lanczos iteration, an independent
/// cross-check of frame_bounds. Throws numerical_failure with the partial
/// estimates when either run hits the iteration cap.
inline FrameBounds frame_bounds_iterative(const GaborFrame& frame, const IterationOptions& opt = {}) {
    FrameOperator op(frame);
    const std::size_t n = op.size();
    auto apply_s = [&](std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
        op.apply(in, out);
    };
    std::size_t it_upper = 0, it_lower = 0;
    bool ok_upper = false, ok_lower = false;
    const double upper = detail::lanczos_extreme(apply_s, n, opt, true, 0.0, it_upper, ok_upper);
    if (!ok_upper)
        throw numerical_failure("upper frame bound did not converge in " + std::to_string(opt.max_iterations) +
                                    " iterations",
                                0.0, upper);
    const double lower = std::max(0.0, detail::lanczos_extreme(apply_s, n, opt, false, upper, it_lower, ok_lower));
    if (!ok_lower)
        throw numerical_failure("lower frame bound did not converge in " + std::to_string(opt.max_iterations) +
                                    " iterations",
                                lower, upper);
    return {lower, upper, false, it_upper + it_lower};
}

namespace detail {

// S couples t only with t - pM, so it splits over residues r = t mod M. Inside
// a residue class (t = r + qM) the coefficients depend on q through
// (r + qM) mod a, which has period P = a / gcd(a, M); a DFT over q / P then
// leaves one P x P Hermitian matrix per frequency. Residues congruent mod
// gcd(a, M) give unitarily equivalent blocks.
inline std::pair<double, double> blockwise_extremes(const FrameOperator& op) {
    const std::size_t len = op.size();
    const std::size_t a = op.time_step();
    const std::size_t m = op.channels();
    const std::size_t k_len = len / m;
    const std::size_t classes = std::gcd(a, m);
    const std::size_t period = a / classes;
    const std::size_t k_sub = k_len / period;
    const auto& shifts = op.shifts();
    const auto& coeffs = op.coefficients();

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXcd block(period, period);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
    for (std::size_t r = 0; r < classes; ++r) {
        for (std::size_t zeta = 0; zeta < k_sub; ++zeta) {
            block.setZero();
            for (std::size_t i = 0; i < period; ++i) {
                const std::size_t phase_index = (r + i * m) % a;
                for (std::size_t s = 0; s < shifts.size(); ++s) {
                    const std::size_t p = shifts[s] % k_len;
                    const std::size_t ip = (i + period - p % period) % period;
                    const std::size_t u = ((p + ip + k_len - i) % k_len) / period;
                    const double angle = -2.0 * std::numbers::pi * static_cast<double>(u * zeta % k_sub) /
                                         static_cast<double>(k_sub);
                    block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ip)) +=
                        coeffs[s][phase_index] * std::polar(1.0, angle);
                }
            }
            solver.compute(block, Eigen::EigenvaluesOnly);
            const auto& ev = solver.eigenvalues();
            lo = std::min(lo, ev.minCoeff());
            hi = std::max(hi, ev.maxCoeff());
        }
    }
    return {lo, hi};
}

} // namespace detail

/// Optimal frame bounds (A, B) of the frame operator S. The painless case
/// reads them off the diagonal; otherwise S is block-diagonalized and each
/// small Hermitian block is solved exactly.
inline FrameBounds frame_bounds(const GaborFrame& frame) {
    FrameOperator op(frame);
    FrameBounds fb;
    fb.exact = true;
    if (frame.is_painless()) {
        const cvec& d = op.diagonal();
        fb.lower = d.front().real();
        fb.upper = d.front().real();
        for (const auto& v : d) {
            fb.lower = std::min(fb.lower, v.real());
            fb.upper = std::max(fb.upper, v.real());
        }
        return fb;
    }
    auto [lo, hi] = detail::blockwise_extremes(op);
    fb.lower = std::max(0.0, lo);
    fb.upper = hi;
    return fb;
}

/// Returns a copy of `w` scaled so that G(w, a, M) on Z_L has upper frame bound
/// just below 1.
inline Window normalize_for_contractivity(const Window& w, Lattice lattice, std::size_t signal_length) {
    if (lattice.time_step == 0 || lattice.channels == 0)
        throw invalid_argument("lattice parameters must be positive");
    GaborFrame frame(w, lattice.time_step, lattice.channels, signal_length);
    FrameBounds fb = frame_bounds(frame);
    if (!(fb.lower > 1e-12 * fb.upper))
        throw not_a_frame("G(g, " + std::to_string(lattice.time_step) + ", " +
                          std::to_string(lattice.channels) + ") has lower frame bound 0");
    return w.scaled(std::sqrt((1.0 - 1e-10) / fb.upper));
}

/// Max deviation between DFT(x[alpha k]) and (1/alpha) sum_p X[u + p L/alpha].
inline double periodization_check(std::span<const std::complex<double>> signal, std::size_t alpha) {
    const std::size_t len = signal.size();
    if (alpha == 0 || len == 0 || len % alpha != 0)
        throw invalid_argument("alpha " + std::to_string(alpha) + " does not divide signal length " +
                               std::to_string(len));
    const std::size_t sub = len / alpha;
    cvec full(signal.begin(), signal.end());
    fft_forward(full);
    cvec down(sub);
    for (std::size_t k = 0; k < sub; ++k) down[k] = signal[alpha * k];
    fft_forward(down);
    double dev = 0.0;
    for (std::size_t u = 0; u < sub; ++u) {
        std::complex<double> acc{};
        for (std::size_t p = 0; p < alpha; ++p) acc += full[u + p * sub];
        dev = std::max(dev, std::abs(down[u] - acc / static_cast<double>(alpha)));
    }
    return dev;
}

} // namespace gscat
