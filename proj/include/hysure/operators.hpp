#pragma once

#include <complex>
#include <vector>

#include "hysure/fft.hpp"
#include "hysure/image.hpp"

namespace hysure {

namespace detail {

/// One band through the frequency domain: out = IFFT(FFT(in) .* field),
/// conjugating the field in adjoint mode.
inline void convolve_band(Fft2D& fft, std::span<const double> in, const FrequencyField& kf,
                          bool adjoint, std::span<double> out,
                          std::vector<std::complex<double>>& scratch) {
    fft.forward(in, scratch);
    if (adjoint) {
        for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] *= std::conj(kf.values[i]);
    } else {
        for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] *= kf.values[i];
    }
    fft.inverse(scratch, out);
}

} // namespace detail

/// Band-wise 2-D cyclic convolution with a precomputed kernel DFT.
/// adjoint=true applies the conjugate filter (multiplication by B^T).
inline SpectralImage cyclic_convolve(const SpectralImage& img, const FrequencyField& kf,
                                     bool adjoint = false) {
    if (img.grid() != kf.grid)
        throw ValidationError("cyclic_convolve: image grid does not match frequency field grid");
    SpectralImage out(img.bands(), img.grid());
    Fft2D fft(img.grid());
    std::vector<std::complex<double>> scratch;
    for (int l = 0; l < img.bands(); ++l)
        detail::convolve_band(fft, img.band(l), kf, adjoint, out.band(l), scratch);
    return out;
}

inline SpectralImage cyclic_convolve(const SpectralImage& img, const ConvolutionKernel& k,
                                     bool adjoint = false) {
    return cyclic_convolve(img, kernel_to_frequency(k, img.grid()), adjoint);
}

/// Horizontal cyclic difference: out[r,c] = img[r, (c+1) mod cols] - img[r,c].
/// The adjoint applies the transposed stencil.
inline SpectralImage diff_h(const SpectralImage& img, bool adjoint = false) {
    const int R = img.grid().rows, C = img.grid().cols;
    SpectralImage out(img.bands(), img.grid());
    for (int l = 0; l < img.bands(); ++l) {
        auto in = img.band(l);
        auto o = out.band(l);
        for (int r = 0; r < R; ++r) {
            const std::size_t row = static_cast<std::size_t>(r) * C;
            for (int c = 0; c < C; ++c) {
                if (!adjoint) {
                    o[row + c] = in[row + (c + 1) % C] - in[row + c];
                } else {
                    // transpose: out[c] = in[(c-1) mod C] - in[c]
                    o[row + c] = in[row + (c - 1 + C) % C] - in[row + c];
                }
            }
        }
    }
    return out;
}

/// Vertical cyclic difference: out[r,c] = img[(r+1) mod rows, c] - img[r,c].
inline SpectralImage diff_v(const SpectralImage& img, bool adjoint = false) {
    const int R = img.grid().rows, C = img.grid().cols;
    SpectralImage out(img.bands(), img.grid());
    for (int l = 0; l < img.bands(); ++l) {
        auto in = img.band(l);
        auto o = out.band(l);
        for (int r = 0; r < R; ++r) {
            const std::size_t row = static_cast<std::size_t>(r) * C;
            const std::size_t next = static_cast<std::size_t>((r + 1) % R) * C;
            const std::size_t prev = static_cast<std::size_t>((r - 1 + R) % R) * C;
            for (int c = 0; c < C; ++c) {
                if (!adjoint)
                    o[row + c] = in[next + c] - in[row + c];
                else
                    o[row + c] = in[prev + c] - in[row + c];
            }
        }
    }
    return out;
}

/// Uniform decimation onto the lattice's coarse grid (right-multiplication by M).
inline SpectralImage subsample(const SpectralImage& img, const SamplingLattice& lat) {
    if (img.grid() != lat.fine)
        throw ValidationError("subsample: image grid does not match lattice fine grid");
    const Grid coarse = lat.coarse();
    SpectralImage out(img.bands(), coarse);
    for (int l = 0; l < img.bands(); ++l) {
        for (int i = 0; i < coarse.rows; ++i) {
            const int r = i * lat.factor + lat.phase_row;
            for (int j = 0; j < coarse.cols; ++j) {
                const int c = j * lat.factor + lat.phase_col;
                out.at(l, i, j) = img.at(l, r, c);
            }
        }
    }
    return out;
}

/// Zero-filled interpolation onto the fine grid (right-multiplication by M^T).
inline SpectralImage upsample_zero(const SpectralImage& img, const SamplingLattice& lat) {
    if (img.grid() != lat.coarse())
        throw ValidationError("upsample_zero: image grid does not match lattice coarse grid");
    SpectralImage out(img.bands(), lat.fine);
    for (int l = 0; l < img.bands(); ++l) {
        for (int i = 0; i < img.grid().rows; ++i) {
            const int r = i * lat.factor + lat.phase_row;
            for (int j = 0; j < img.grid().cols; ++j) {
                const int c = j * lat.factor + lat.phase_col;
                out.at(l, r, c) = img.at(l, i, j);
            }
        }
    }
    return out;
}

/// Zero-order-hold interpolation: every fine pixel takes the value of the
/// coarse pixel whose block contains it.
inline SpectralImage zoh_upsample(const SpectralImage& img, const SamplingLattice& lat) {
    if (img.grid() != lat.coarse())
        throw ValidationError("zoh_upsample: image grid does not match lattice coarse grid");
    SpectralImage out(img.bands(), lat.fine);
    for (int l = 0; l < img.bands(); ++l) {
        for (int r = 0; r < lat.fine.rows; ++r) {
            const int i = r / lat.factor;
            for (int c = 0; c < lat.fine.cols; ++c)
                out.at(l, r, c) = img.at(l, i, c / lat.factor);
        }
    }
    return out;
}

} // namespace hysure
