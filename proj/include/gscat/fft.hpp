#pragma once

// Thin in-place wrapper over FFTW with a process-wide plan cache.
// Plans are created with FFTW_ESTIMATE so results do not depend on timing.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace gscat {

namespace detail {

class fft_plan_cache {
public:
    static fft_plan_cache& instance() {
        static fft_plan_cache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    fft_plan_cache(const fft_plan_cache&) = delete;
    fft_plan_cache& operator=(const fft_plan_cache&) = delete;

private:
    fft_plan_cache() = default;
    ~fft_plan_cache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

inline void execute(std::span<std::complex<double>> data, int sign) {
    if (data.empty()) return;
    fftw_plan plan = fft_plan_cache::instance().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

} // namespace detail

/// In-place unnormalized DFT, X[u] = sum_t x[t] exp(-2 pi i u t / n).
inline void fft_forward(std::span<std::complex<double>> data) {
    detail::execute(data, FFTW_FORWARD);
}

/// In-place unnormalized inverse DFT (no 1/n factor).
inline void fft_inverse(std::span<std::complex<double>> data) {
    detail::execute(data, FFTW_BACKWARD);
}

inline std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x) {
    std::vector<std::complex<double>> out(x.begin(), x.end());
    fft_forward(out);
    return out;
}

inline std::vector<std::complex<double>> dft(std::span<const double> x) {
    std::vector<std::complex<double>> out(x.begin(), x.end());
    fft_forward(out);
    return out;
}

} // namespace gscat
