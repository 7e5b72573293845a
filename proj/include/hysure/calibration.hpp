#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hysure/degradation.hpp"
#include "hysure/image.hpp"
#include "hysure/kernel.hpp"
#include "hysure/operators.hpp"

namespace hysure {

struct CalibConfig {
    double lambda_b = 10.0;
    double lambda_r = 10.0;
    int kernel_support = 7;
    int strong_blur_support = 9;
    // Empty mask means every hyperspectral band may contribute to every
    // multispectral band.
    std::vector<std::uint8_t> overlap_mask; // msi_bands x hsi_bands, row-major
    // Equal-resolution pairs with no relative blur: skip the staged blur and
    // return a delta kernel.
    bool identity_blur = false;

    void validate() const {
        if (!(lambda_b > 0.0) || !(lambda_r > 0.0))
            throw ValidationError("CalibConfig: lambda_b and lambda_r must be positive");
        if (kernel_support < 1 || kernel_support % 2 == 0)
            throw ValidationError("CalibConfig: kernel_support must be positive odd");
        if (strong_blur_support < 1 || strong_blur_support % 2 == 0)
            throw ValidationError("CalibConfig: strong_blur_support must be positive odd");
    }
};

/// Cyclic fine-grid indices of the kernel window anchored at each coarse
/// pixel. Index t = (u+h)*s + (v+h) maps to fine pixel c_j - (u, v), so that
/// gathering those pixels and dotting with the kernel weights reproduces the
/// cyclic convolution sampled at c_j.
class PatchIndexer {
public:
    PatchIndexer(const SamplingLattice& lat, int kernel_support)
        : lat_(lat), support_(kernel_support) {
        if (kernel_support < 1 || kernel_support % 2 == 0)
            throw ValidationError("PatchIndexer: kernel support must be positive odd");
        if (kernel_support > lat.fine.rows || kernel_support > lat.fine.cols)
            throw ValidationError("PatchIndexer: kernel support exceeds fine grid");
    }

    int patch_size() const { return support_ * support_; }
    Grid coarse() const { return lat_.coarse(); }

    /// Fine-grid pixel indices for coarse pixel (ci, cj), length support^2.
    std::vector<std::size_t> window(int ci, int cj) const {
        const int R = lat_.fine.rows, C = lat_.fine.cols;
        const int h = (support_ - 1) / 2;
        const int r0 = ci * lat_.factor + lat_.phase_row;
        const int c0 = cj * lat_.factor + lat_.phase_col;
        std::vector<std::size_t> idx(static_cast<std::size_t>(patch_size()));
        for (int u = -h; u <= h; ++u) {
            const int r = ((r0 - u) % R + R) % R;
            for (int v = -h; v <= h; ++v) {
                const int c = ((c0 - v) % C + C) % C;
                idx[(u + h) * support_ + (v + h)] = static_cast<std::size_t>(r) * C + c;
            }
        }
        return idx;
    }

private:
    SamplingLattice lat_;
    int support_;
};

namespace detail {

/// D_h^T D_h + D_v^T D_v on the kernel window with periodic boundaries:
/// the 4-neighbor graph Laplacian (null space = constant kernels).
inline Eigen::MatrixXd kernel_difference_gram(int support) {
    const int n = support * support;
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    auto id = [support](int i, int j) {
        return ((i % support + support) % support) * support + ((j % support + support) % support);
    };
    for (int i = 0; i < support; ++i)
        for (int j = 0; j < support; ++j) {
            const int k = id(i, j);
            lap(k, k) += 4.0;
            lap(k, id(i, j + 1)) -= 1.0;
            lap(k, id(i, j - 1)) -= 1.0;
            lap(k, id(i + 1, j)) -= 1.0;
            lap(k, id(i - 1, j)) -= 1.0;
        }
    return lap;
}

inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& system, const Eigen::VectorXd& rhs,
                                 const char* where) {
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(where) + ": system matrix is not positive definite (size " +
                             std::to_string(system.rows()) + ")");
    Eigen::VectorXd x = llt.solve(rhs);
    if (!x.allFinite()) throw NumericalError(std::string(where) + ": solve produced non-finite values");
    return x;
}

} // namespace detail

/// Estimate the spectral response row by row from a coarse-grid pair.
/// Ym_degraded must already live on Yh's grid (blur and subsampling applied
/// by the caller, or the identity when resolutions match). Per row i the
/// normal equations are
///   [Y_{h,i} Y_{h,i}^T + lambda_r D^T D] r_i = Y_{h,i} y_{m,i}^T
/// restricted to the bands the overlap mask permits; D differences only
/// spectrally adjacent retained bands.
inline SpectralResponse estimate_spectral_response(const SpectralImage& Yh,
                                                   const SpectralImage& Ym_degraded,
                                                   const CalibConfig& cfg) {
    cfg.validate();
    if (Yh.grid() != Ym_degraded.grid())
        throw ValidationError("estimate_spectral_response: images must share a grid");
    const int Lh = Yh.bands(), Lm = Ym_degraded.bands();
    const std::size_t n = Yh.pixels();

    SpectralResponse result(Lm, Lh);
    if (!cfg.overlap_mask.empty()) {
        if (cfg.overlap_mask.size() != static_cast<std::size_t>(Lm) * Lh)
            throw ValidationError("estimate_spectral_response: overlap mask shape mismatch");
        result.mask = cfg.overlap_mask;
    }

    Eigen::Map<const MatrixRM> yh(Yh.data().data(), Lh, static_cast<Eigen::Index>(n));

    for (int i = 0; i < Lm; ++i) {
        std::vector<int> bands;
        for (int j = 0; j < Lh; ++j)
            if (result.allowed(i, j)) bands.push_back(j);
        if (bands.empty())
            throw ValidationError("estimate_spectral_response: overlap mask row " + std::to_string(i) +
                                  " permits no bands");
        const int m = static_cast<int>(bands.size());

        Eigen::MatrixXd sub(m, static_cast<Eigen::Index>(n));
        for (int k = 0; k < m; ++k) sub.row(k) = yh.row(bands[k]);

        Eigen::MatrixXd system = sub * sub.transpose();
        for (int k = 0; k + 1 < m; ++k) {
            if (bands[k + 1] != bands[k] + 1) continue; // band gap: no difference row
            system(k, k) += cfg.lambda_r;
            system(k + 1, k + 1) += cfg.lambda_r;
            system(k, k + 1) -= cfg.lambda_r;
            system(k + 1, k) -= cfg.lambda_r;
        }

        Eigen::Map<const Eigen::VectorXd> ym_row(Ym_degraded.band(i).data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd rhs = sub * ym_row;
        Eigen::VectorXd ri = detail::solve_spd(system, rhs, "estimate_spectral_response");
        for (int k = 0; k < m; ++k) result(i, bands[k]) = ri[k];
    }
    result.validate();
    return result;
}

/// Estimate the blur kernel given a spectral response, by accumulating the
/// patch normal equations
///   [sum_j Y_{m,j}^T Y_{m,j} + lambda_b (D_h^T D_h + D_v^T D_v)] b
///     = sum_j Y_{m,j}^T R Y_{h,:j}
/// over all coarse pixels, then normalizing to unit DC gain.
inline ConvolutionKernel estimate_blur_kernel(const SpectralImage& Yh, const SpectralImage& Ym,
                                              const SpectralResponse& response,
                                              const SamplingLattice& lat, const CalibConfig& cfg) {
    cfg.validate();
    if (Ym.grid() != lat.fine)
        throw ValidationError("estimate_blur_kernel: Ym grid does not match lattice fine grid");
    if (Yh.grid() != lat.coarse())
        throw ValidationError("estimate_blur_kernel: Yh grid does not match lattice coarse grid");
    if (Yh.bands() != response.hsi_bands || Ym.bands() != response.msi_bands)
        throw ValidationError("estimate_blur_kernel: band counts do not match the spectral response");

    const PatchIndexer indexer(lat, cfg.kernel_support);
    const int nb = indexer.patch_size();
    const int Lm = Ym.bands();
    const Grid coarse = lat.coarse();

    Eigen::Map<const MatrixRM> r_mat(response.matrix.data(), response.msi_bands, response.hsi_bands);
    Eigen::Map<const MatrixRM> yh(Yh.data().data(), Yh.bands(), static_cast<Eigen::Index>(Yh.pixels()));

    Eigen::MatrixXd gram = cfg.lambda_b * detail::kernel_difference_gram(cfg.kernel_support);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
    Eigen::MatrixXd patch(Lm, nb);

    for (int ci = 0; ci < coarse.rows; ++ci)
        for (int cj = 0; cj < coarse.cols; ++cj) {
            const auto window = indexer.window(ci, cj);
            for (int t = 0; t < nb; ++t)
                for (int l = 0; l < Lm; ++l) patch(l, t) = Ym(l, window[t]);
            const std::size_t j = static_cast<std::size_t>(ci) * coarse.cols + cj;
            const Eigen::VectorXd target = r_mat * yh.col(static_cast<Eigen::Index>(j));
            gram.selfadjointView<Eigen::Lower>().rankUpdate(patch.transpose(), 1.0);
            rhs.noalias() += patch.transpose() * target;
        }
    const Eigen::MatrixXd system = gram.selfadjointView<Eigen::Lower>();

    Eigen::VectorXd b = detail::solve_spd(system, rhs, "estimate_blur_kernel");
    std::vector<double> weights(b.data(), b.data() + nb);
    return ConvolutionKernel(cfg.kernel_support, std::move(weights)).normalized();
}

/// Staged blind estimation of both responses: estimate R on strongly blurred
/// copies (where the unknown relative blur is negligible), then estimate the
/// blur on the original pair using that R, and normalize it.
inline std::pair<SpectralResponse, ConvolutionKernel> calibrate(const SpectralImage& Yh,
                                                                const SpectralImage& Ym,
                                                                const SamplingLattice& lat,
                                                                const CalibConfig& cfg) {
    cfg.validate();
    if (cfg.identity_blur) {
        if (Yh.grid() != Ym.grid() || lat.factor != 1)
            throw ValidationError("calibrate: identity-blur mode requires equal-resolution images");
        SpectralResponse r = estimate_spectral_response(Yh, Ym, cfg);
        return {std::move(r), ConvolutionKernel::delta(cfg.kernel_support)};
    }

    if (Ym.grid() != lat.fine || Yh.grid() != lat.coarse())
        throw ValidationError("calibrate: image grids do not match the lattice");

    const SpectralImage ym_blurred = cyclic_convolve(Ym, make_box_kernel(cfg.strong_blur_support));

    // Correspondingly smaller averaging for the HSI: ceil(strong/d), forced odd.
    int hs_support = (cfg.strong_blur_support + lat.factor - 1) / lat.factor;
    if (hs_support % 2 == 0) ++hs_support;
    const SpectralImage yh_blurred = cyclic_convolve(Yh, make_box_kernel(hs_support));

    const SpectralImage ym_coarse = subsample(ym_blurred, lat);
    SpectralResponse r = estimate_spectral_response(yh_blurred, ym_coarse, cfg);
    ConvolutionKernel b = estimate_blur_kernel(Yh, Ym, r, lat, cfg);
    return {std::move(r), std::move(b)};
}

} // namespace hysure
