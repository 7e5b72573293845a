#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "hysure/image.hpp"

namespace hysure {

enum class ZeroSpectrumPolicy { Error, Skip };

struct QualityReport {
    double ergas = 0.0;
    double sam_degrees = 0.0;
    double uiqi = 0.0;
    std::vector<double> band_rmse;
    std::vector<double> pixel_rmse_sorted;
};

/// Relative global dimensionless synthesis error. `reference` is the ground
/// truth; `scale_ratio` is S = sqrt(n_m / n_h).
inline double ergas(const SpectralImage& estimate, const SpectralImage& reference,
                    double scale_ratio) {
    require_same_shape(estimate, reference, "ergas");
    if (!(scale_ratio > 0.0)) throw ValidationError("ergas: scale ratio must be positive");
    const std::size_t n = estimate.pixels();
    double acc = 0.0;
    for (int l = 0; l < estimate.bands(); ++l) {
        auto z = estimate.band(l);
        auto ref = reference.band(l);
        double mse = 0.0, mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = z[j] - ref[j];
            mse += d * d;
            mean += ref[j];
        }
        mse /= static_cast<double>(n);
        mean /= static_cast<double>(n);
        if (mean == 0.0)
            throw ValidationError("ergas: reference band " + std::to_string(l) + " has zero mean");
        acc += mse / (mean * mean);
    }
    return 100.0 / scale_ratio * std::sqrt(acc / estimate.bands());
}

/// Spectral angle mapper: mean per-pixel angle between the two spectra, in
/// degrees. Zero spectra are a hard error unless the skip policy is chosen.
inline double sam(const SpectralImage& estimate, const SpectralImage& reference,
                  ZeroSpectrumPolicy policy = ZeroSpectrumPolicy::Error,
                  std::size_t* skipped = nullptr) {
    require_same_shape(estimate, reference, "sam");
    const std::size_t n = estimate.pixels();
    const int L = estimate.bands();
    double acc = 0.0;
    std::size_t counted = 0, skips = 0;
    for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0, nz = 0.0, nr = 0.0;
        for (int l = 0; l < L; ++l) {
            const double a = estimate(l, j), b = reference(l, j);
            dot += a * b;
            nz += a * a;
            nr += b * b;
        }
        if (nz == 0.0 || nr == 0.0) {
            if (policy == ZeroSpectrumPolicy::Error)
                throw ValidationError("sam: zero spectrum at pixel " + std::to_string(j));
            ++skips;
            continue;
        }
        const double cosine = std::clamp(dot / std::sqrt(nz * nr), -1.0, 1.0);
        acc += std::acos(cosine);
        ++counted;
    }
    if (skipped) *skipped = skips;
    if (counted == 0) throw ValidationError("sam: every pixel was skipped");
    return acc / static_cast<double>(counted) * (180.0 / 3.14159265358979323846);
}

namespace detail {

/// Summed-area table with a zero top row and left column, so rectangle sums
/// become four lookups.
class Sat {
public:
    Sat(std::span<const double> band, int rows, int cols, bool squared, std::span<const double> other = {})
        : cols_(cols), table_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {
        for (int r = 0; r < rows; ++r) {
            double row_sum = 0.0;
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * cols + c;
                double v = band[i];
                if (!other.empty()) v *= other[i];
                else if (squared) v *= v;
                row_sum += v;
                at(r + 1, c + 1) = at(r, c + 1) + row_sum;
            }
        }
    }

    double window_sum(int r0, int c0, int size) const {
        return at(r0 + size, c0 + size) - at(r0, c0 + size) - at(r0 + size, c0) + at(r0, c0);
    }

private:
    double& at(int r, int c) { return table_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
    double at(int r, int c) const { return table_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
    int cols_;
    std::vector<double> table_;
};

} // namespace detail

/// Universal image quality index averaged over sliding windows and bands.
/// Windows where any factor's denominator vanishes (zero variance or zero
/// mean-square luminance) are skipped and excluded from the window count.
inline double uiqi(const SpectralImage& estimate, const SpectralImage& reference, int window = 32,
                   int stride = 1) {
    require_same_shape(estimate, reference, "uiqi");
    const Grid g = estimate.grid();
    if (window < 2) throw ValidationError("uiqi: window must be >= 2");
    if (stride < 1) throw ValidationError("uiqi: stride must be >= 1");
    if (g.rows < window || g.cols < window)
        throw ValidationError("uiqi: image " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                              " is smaller than the " + std::to_string(window) + "-pixel window");

    const double nw = static_cast<double>(window) * window;
    double band_acc = 0.0;
    int usable_bands = 0;
    for (int l = 0; l < estimate.bands(); ++l) {
        auto z = estimate.band(l);
        auto ref = reference.band(l);
        detail::Sat sz(z, g.rows, g.cols, false);
        detail::Sat sref(ref, g.rows, g.cols, false);
        detail::Sat szz(z, g.rows, g.cols, true);
        detail::Sat srr(ref, g.rows, g.cols, true);
        detail::Sat szr(z, g.rows, g.cols, false, ref);

        double q_acc = 0.0;
        std::size_t used = 0;
        for (int r0 = 0; r0 + window <= g.rows; r0 += stride)
            for (int c0 = 0; c0 + window <= g.cols; c0 += stride) {
                const double mz = sz.window_sum(r0, c0, window) / nw;
                const double mr = sref.window_sum(r0, c0, window) / nw;
                const double var_z = szz.window_sum(r0, c0, window) / nw - mz * mz;
                const double var_r = srr.window_sum(r0, c0, window) / nw - mr * mr;
                const double cov = szr.window_sum(r0, c0, window) / nw - mz * mr;
                const double lum_den = mz * mz + mr * mr;
                if (var_z <= 0.0 || var_r <= 0.0 || lum_den == 0.0) continue;
                const double sd_z = std::sqrt(var_z), sd_r = std::sqrt(var_r);
                const double q = (cov / (sd_z * sd_r)) * (2.0 * mz * mr / lum_den) *
                                 (2.0 * sd_z * sd_r / (var_z + var_r));
                q_acc += q;
                ++used;
            }
        if (used > 0) {
            band_acc += q_acc / static_cast<double>(used);
            ++usable_bands;
        }
        // bands with no usable window (e.g. constant everywhere) are excluded
    }
    if (usable_bands == 0) throw ValidationError("uiqi: no window with nonzero variance in any band");
    return band_acc / usable_bands;
}

/// RMSE over pixels, one value per band.
inline std::vector<double> band_rmse(const SpectralImage& estimate, const SpectralImage& reference) {
    require_same_shape(estimate, reference, "band_rmse");
    const std::size_t n = estimate.pixels();
    std::vector<double> out(estimate.bands());
    for (int l = 0; l < estimate.bands(); ++l) {
        double acc = 0.0;
        auto z = estimate.band(l);
        auto ref = reference.band(l);
        for (std::size_t j = 0; j < n; ++j) {
            const double d = z[j] - ref[j];
            acc += d * d;
        }
        out[l] = std::sqrt(acc / static_cast<double>(n));
    }
    return out;
}

/// RMSE over bands for each pixel, sorted ascending and truncated at the trim
/// quantile (trim=1 keeps every pixel).
inline std::vector<double> pixel_rmse_sorted(const SpectralImage& estimate,
                                             const SpectralImage& reference, double trim = 0.99) {
    require_same_shape(estimate, reference, "pixel_rmse_sorted");
    if (!(trim > 0.0 && trim <= 1.0)) throw ValidationError("pixel_rmse_sorted: trim must be in (0, 1]");
    const std::size_t n = estimate.pixels();
    const int L = estimate.bands();
    std::vector<double> rmse(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < L; ++l) {
            const double d = estimate(l, j) - reference(l, j);
            acc += d * d;
        }
        rmse[j] = std::sqrt(acc / static_cast<double>(L));
    }
    std::sort(rmse.begin(), rmse.end());
    rmse.resize(static_cast<std::size_t>(trim * static_cast<double>(n)));
    return rmse;
}

inline QualityReport evaluate_quality(const SpectralImage& estimate, const SpectralImage& reference,
                                      double scale_ratio, int uiqi_window = 32,
                                      double trim = 0.99) {
    QualityReport report;
    report.ergas = ergas(estimate, reference, scale_ratio);
    report.sam_degrees = sam(estimate, reference);
    report.uiqi = uiqi(estimate, reference, uiqi_window);
    report.band_rmse = band_rmse(estimate, reference);
    report.pixel_rmse_sorted = pixel_rmse_sorted(estimate, reference, trim);
    return report;
}

} // namespace hysure
