#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hysure/errors.hpp"

namespace hysure {

/// Pixel raster dimensions. Pixels are indexed row-major: idx = r * cols + c.
struct Grid {
    int rows = 0;
    int cols = 0;

    Grid() = default;
    Grid(int rows_, int cols_) : rows(rows_), cols(cols_) {
        if (rows < 1 || cols < 1)
            throw ValidationError("Grid: rows and cols must be >= 1, got " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
    }

    std::size_t pixels() const { return static_cast<std::size_t>(rows) * cols; }

    bool operator==(const Grid&) const = default;
};

/// L-band image stored as an L x n matrix, one band per row, pixels in
/// row-major (lexicographic) order within each band.
class SpectralImage {
public:
    SpectralImage() = default;

    SpectralImage(int bands, Grid grid)
        : bands_(bands), grid_(grid), data_(static_cast<std::size_t>(bands) * grid.pixels(), 0.0) {
        if (bands < 1)
            throw ValidationError("SpectralImage: band count must be >= 1");
    }

    SpectralImage(int bands, Grid grid, std::vector<double> data)
        : bands_(bands), grid_(grid), data_(std::move(data)) {
        if (bands < 1)
            throw ValidationError("SpectralImage: band count must be >= 1");
        if (data_.size() != static_cast<std::size_t>(bands) * grid.pixels())
            throw ValidationError("SpectralImage: data size " + std::to_string(data_.size()) +
                                  " does not match bands*pixels");
    }

    int bands() const { return bands_; }
    const Grid& grid() const { return grid_; }
    std::size_t pixels() const { return grid_.pixels(); }
    std::size_t size() const { return data_.size(); }

    double& operator()(int band, std::size_t pixel) { return data_[band * pixels() + pixel]; }
    double operator()(int band, std::size_t pixel) const { return data_[band * pixels() + pixel]; }

    double& at(int band, int r, int c) { return (*this)(band, static_cast<std::size_t>(r) * grid_.cols + c); }
    double at(int band, int r, int c) const { return (*this)(band, static_cast<std::size_t>(r) * grid_.cols + c); }

    std::span<double> band(int l) { return {data_.data() + l * pixels(), pixels()}; }
    std::span<const double> band(int l) const { return {data_.data() + l * pixels(), pixels()}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const SpectralImage& other) const {
        return bands_ == other.bands_ && grid_ == other.grid_;
    }

private:
    int bands_ = 0;
    Grid grid_;
    std::vector<double> data_;
};

inline void require_same_shape(const SpectralImage& a, const SpectralImage& b, const char* where) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(where) + ": image shapes differ (" +
                              std::to_string(a.bands()) + "x" + std::to_string(a.grid().rows) + "x" +
                              std::to_string(a.grid().cols) + " vs " + std::to_string(b.bands()) + "x" +
                              std::to_string(b.grid().rows) + "x" + std::to_string(b.grid().cols) + ")");
}

/// Frobenius inner product over all bands and pixels.
inline double inner(const SpectralImage& a, const SpectralImage& b) {
    require_same_shape(a, b, "inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

inline double norm_fro(const SpectralImage& a) { return std::sqrt(inner(a, a)); }

inline SpectralImage operator+(const SpectralImage& a, const SpectralImage& b) {
    require_same_shape(a, b, "operator+");
    SpectralImage out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

inline SpectralImage operator-(const SpectralImage& a, const SpectralImage& b) {
    require_same_shape(a, b, "operator-");
    SpectralImage out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

inline SpectralImage operator*(double s, const SpectralImage& a) {
    SpectralImage out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

/// Uniform decimation lattice mapping a fine grid onto a coarse one.
/// Coarse pixel (i, j) corresponds to fine pixel (i*factor + phase_row,
/// j*factor + phase_col).
struct SamplingLattice {
    Grid fine;
    int factor = 1;
    int phase_row = 0;
    int phase_col = 0;

    SamplingLattice() = default;
    SamplingLattice(Grid fine_, int factor_, int phase_row_ = 0, int phase_col_ = 0)
        : fine(fine_), factor(factor_), phase_row(phase_row_), phase_col(phase_col_) {
        if (factor < 1)
            throw ValidationError("SamplingLattice: factor must be >= 1");
        if (fine.rows % factor != 0 || fine.cols % factor != 0)
            throw ValidationError("SamplingLattice: fine grid " + std::to_string(fine.rows) + "x" +
                                  std::to_string(fine.cols) + " not divisible by factor " +
                                  std::to_string(factor));
        if (phase_row < 0 || phase_row >= factor || phase_col < 0 || phase_col >= factor)
            throw ValidationError("SamplingLattice: phase must lie in [0, factor)");
    }

    Grid coarse() const { return Grid(fine.rows / factor, fine.cols / factor); }
};

} // namespace hysure
