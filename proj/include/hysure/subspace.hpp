#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hysure/image.hpp"

namespace hysure {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const MatrixRM> as_matrix(const SpectralImage& img) {
    return {img.data().data(), img.bands(), static_cast<Eigen::Index>(img.pixels())};
}

inline Eigen::Map<MatrixRM> as_matrix(SpectralImage& img) {
    return {img.data().data(), img.bands(), static_cast<Eigen::Index>(img.pixels())};
}

/// Orthonormal basis of the signal subspace spanned by the spectra.
struct Subspace {
    Eigen::MatrixXd basis;                // L_h x L_s, orthonormal columns
    std::vector<double> singular_values;  // all of them, nonincreasing
    double energy_fraction = 0.0;         // retained / total squared singular values

    int ambient_bands() const { return static_cast<int>(basis.rows()); }
    int dimension() const { return static_cast<int>(basis.cols()); }
};

/// Band bookkeeping produced by the preprocessing chain.
struct PreprocessReport {
    std::vector<int> removed_bands;
    std::vector<double> band_scales;
    double energy_fraction = 0.0;
};

/// Keep only the listed bands, in the given (strictly increasing) order.
inline SpectralImage remove_bands(const SpectralImage& img, const std::vector<int>& keep) {
    if (keep.empty()) throw ValidationError("remove_bands: keep list is empty");
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] < 0 || keep[i] >= img.bands())
            throw ValidationError("remove_bands: band index " + std::to_string(keep[i]) +
                                  " out of range [0, " + std::to_string(img.bands()) + ")");
        if (i > 0 && keep[i] <= keep[i - 1])
            throw ValidationError("remove_bands: keep list must be strictly increasing");
    }
    SpectralImage out(static_cast<int>(keep.size()), img.grid());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        auto src = img.band(keep[i]);
        auto dst = out.band(static_cast<int>(i));
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

/// Empirical q-quantile with linear interpolation between order statistics.
inline double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw ValidationError("quantile: empty input");
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("quantile: q must lie in (0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

/// Divide each band by its q-quantile so that quantile maps to 1. Returns the
/// scaled image and the per-band scales; multiplying band l by scales[l]
/// restores the input exactly.
inline std::pair<SpectralImage, std::vector<double>> normalize_bands(const SpectralImage& img,
                                                                     double q = 0.999) {
    SpectralImage out = img;
    std::vector<double> scales(img.bands());
    for (int l = 0; l < img.bands(); ++l) {
        const double s = quantile(img.band(l), q);
        if (!(s > 0.0) || !std::isfinite(s))
            throw ValidationError("normalize_bands: band " + std::to_string(l) +
                                  " has nonpositive quantile " + std::to_string(s));
        scales[l] = s;
        for (double& v : out.band(l)) v /= s;
    }
    return {std::move(out), std::move(scales)};
}

/// First L_s left singular vectors of the band-by-pixel data matrix, with a
/// deterministic sign: the entry of largest magnitude in each basis vector is
/// made positive (ties broken by lowest index).
inline Subspace truncated_svd_basis(const SpectralImage& img, int subspace_dim) {
    const Eigen::Index L = img.bands();
    const Eigen::Index n = static_cast<Eigen::Index>(img.pixels());
    if (subspace_dim < 1 || subspace_dim > std::min(L, n))
        throw ValidationError("truncated_svd_basis: L_s=" + std::to_string(subspace_dim) +
                              " out of range [1, min(L, n)]");

    Eigen::MatrixXd data = as_matrix(img);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);

    Subspace sub;
    sub.basis = svd.matrixU().leftCols(subspace_dim);
    const auto& sv = svd.singularValues();
    sub.singular_values.assign(sv.data(), sv.data() + sv.size());

    double total = 0.0, retained = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        total += sv[i] * sv[i];
        if (i < subspace_dim) retained += sv[i] * sv[i];
    }
    sub.energy_fraction = total > 0.0 ? retained / total : 1.0;

    for (int j = 0; j < subspace_dim; ++j) {
        Eigen::Index argmax = 0;
        sub.basis.col(j).cwiseAbs().maxCoeff(&argmax);
        if (sub.basis(argmax, j) < 0.0) sub.basis.col(j) = -sub.basis.col(j);
    }
    return sub;
}

/// Orthogonal projection onto span(E): out = E E^T img.
inline SpectralImage denoise_project(const SpectralImage& img, const Subspace& sub) {
    if (img.bands() != sub.ambient_bands())
        throw ValidationError("denoise_project: image has " + std::to_string(img.bands()) +
                              " bands, basis expects " + std::to_string(sub.ambient_bands()));
    SpectralImage out(img.bands(), img.grid());
    as_matrix(out) = sub.basis * (sub.basis.transpose() * as_matrix(img));
    return out;
}

/// Representation coefficients X = E^T img (one band per subspace dimension).
inline SpectralImage coefficients(const SpectralImage& img, const Subspace& sub) {
    if (img.bands() != sub.ambient_bands())
        throw ValidationError("coefficients: image has " + std::to_string(img.bands()) +
                              " bands, basis expects " + std::to_string(sub.ambient_bands()));
    SpectralImage out(sub.dimension(), img.grid());
    as_matrix(out) = sub.basis.transpose() * as_matrix(img);
    return out;
}

/// Inverse of coefficients(): E X back in the ambient band space.
inline SpectralImage reconstruct(const SpectralImage& coeffs, const Subspace& sub) {
    if (coeffs.bands() != sub.dimension())
        throw ValidationError("reconstruct: coefficient image has " + std::to_string(coeffs.bands()) +
                              " bands, basis has dimension " + std::to_string(sub.dimension()));
    SpectralImage out(sub.ambient_bands(), coeffs.grid());
    as_matrix(out) = sub.basis * as_matrix(coeffs);
    return out;
}

/// Convenience heuristic for spotting very noisy bands: flags bands whose
/// robust SNR estimate (median / scaled median absolute first difference)
/// falls below `min_snr_db`. Never applied automatically; callers decide.
inline std::vector<int> suggest_noisy_bands(const SpectralImage& img, double min_snr_db = 3.0) {
    std::vector<int> flagged;
    for (int l = 0; l < img.bands(); ++l) {
        auto b = img.band(l);
        std::vector<double> values(b.begin(), b.end());
        std::sort(values.begin(), values.end());
        const double med = values[values.size() / 2];
        std::vector<double> diffs(b.size() - 1);
        for (std::size_t i = 0; i + 1 < b.size(); ++i) diffs[i] = std::abs(b[i + 1] - b[i]);
        std::sort(diffs.begin(), diffs.end());
        // 1.4826/sqrt(2) maps the median absolute difference to a noise sigma
        const double sigma = diffs[diffs.size() / 2] * 1.4826 / std::sqrt(2.0);
        const double snr_db = sigma > 0.0 ? 20.0 * std::log10(std::abs(med) / sigma)
                                          : std::numeric_limits<double>::infinity();
        if (snr_db < min_snr_db) flagged.push_back(l);
    }
    return flagged;
}

} // namespace hysure
