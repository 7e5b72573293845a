#pragma once

#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "hysure/errors.hpp"
#include "hysure/image.hpp"
#include "hysure/kernel.hpp"

namespace hysure {

/// 2-D DFT of a cyclically embedded kernel, on a specific grid. Values use
/// the unnormalized forward transform, so the DC bin carries the kernel's
/// weight sum.
struct FrequencyField {
    Grid grid;
    std::vector<std::complex<double>> values; // rows x cols, row-major

    std::complex<double> dc() const { return values.empty() ? 0.0 : values[0]; }
};

namespace detail {
// FFTW plan creation/destruction is not thread-safe; execution is.
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Plans and scratch buffers for complex 2-D FFTs on one grid. Each instance
/// owns its buffers, so distinct instances may run on distinct threads.
class Fft2D {
public:
    explicit Fft2D(Grid grid) : grid_(grid), n_(grid.pixels()) {
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
        if (!buf_) throw NumericalError("Fft2D: allocation failed");
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fwd_ = fftw_plan_dft_2d(grid.rows, grid.cols, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(grid.rows, grid.cols, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw NumericalError("Fft2D: plan creation failed");
    }

    ~Fft2D() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
        if (buf_) fftw_free(buf_);
    }

    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;

    const Grid& grid() const { return grid_; }

    /// Unnormalized forward DFT of a real band.
    void forward(std::span<const double> band, std::vector<std::complex<double>>& out) {
        check(band.size());
        for (std::size_t i = 0; i < n_; ++i) {
            buf_[i][0] = band[i];
            buf_[i][1] = 0.0;
        }
        fftw_execute(fwd_);
        out.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = {buf_[i][0], buf_[i][1]};
    }

    /// Inverse DFT (scaled by 1/n), real part written to `band`.
    void inverse(std::span<const std::complex<double>> freq, std::span<double> band) {
        check(freq.size());
        check(band.size());
        for (std::size_t i = 0; i < n_; ++i) {
            buf_[i][0] = freq[i].real();
            buf_[i][1] = freq[i].imag();
        }
        fftw_execute(bwd_);
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) band[i] = buf_[i][0] * scale;
    }

private:
    void check(std::size_t size) const {
        if (size != n_) throw ValidationError("Fft2D: buffer size does not match grid");
    }

    Grid grid_;
    std::size_t n_ = 0;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Embed a kernel cyclically (center at index (0,0), negative offsets wrapped)
/// and return its 2-D DFT. Convolving with this field realizes multiplication
/// by the band-circulant matrix built from the kernel.
inline FrequencyField kernel_to_frequency(const ConvolutionKernel& k, Grid g) {
    if (k.support() > g.rows || k.support() > g.cols)
        throw ValidationError("kernel_to_frequency: kernel support " + std::to_string(k.support()) +
                              " exceeds grid " + std::to_string(g.rows) + "x" + std::to_string(g.cols));
    std::vector<double> embedded(g.pixels(), 0.0);
    const int h = k.half();
    for (int u = -h; u <= h; ++u) {
        const int r = ((u % g.rows) + g.rows) % g.rows;
        for (int v = -h; v <= h; ++v) {
            const int c = ((v % g.cols) + g.cols) % g.cols;
            embedded[static_cast<std::size_t>(r) * g.cols + c] += k(u + h, v + h);
        }
    }
    FrequencyField field;
    field.grid = g;
    Fft2D fft(g);
    fft.forward(embedded, field.values);
    return field;
}

} // namespace hysure
