#pragma once

// Shared fixtures: seeded random inputs and dense materializations of the
// linear operators, kept independent of the FFT implementation they check.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hysure/hysure.hpp"

namespace testsup {

using hysure::ConvolutionKernel;
using hysure::Grid;
using hysure::SamplingLattice;
using hysure::SpectralImage;

inline SpectralImage random_image(int bands, Grid grid, std::uint64_t seed, double lo = -1.0,
                                  double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    SpectralImage img(bands, grid);
    for (double& v : img.data()) v = dist(rng);
    return img;
}

inline ConvolutionKernel random_unit_kernel(int support, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    std::vector<double> w(static_cast<std::size_t>(support) * support);
    for (double& v : w) v = dist(rng);
    return ConvolutionKernel(support, std::move(w)).normalized();
}

/// Embedded kernel on the full grid, center at (0,0) with wraparound.
inline std::vector<double> embed_kernel(const ConvolutionKernel& k, Grid g) {
    std::vector<double> e(g.pixels(), 0.0);
    const int h = k.half();
    for (int u = -h; u <= h; ++u)
        for (int v = -h; v <= h; ++v) {
            const int r = ((u % g.rows) + g.rows) % g.rows;
            const int c = ((v % g.cols) + g.cols) % g.cols;
            e[static_cast<std::size_t>(r) * g.cols + c] += k(u + h, v + h);
        }
    return e;
}

/// Dense n x n matrix B with (z B)[j] = sum_k z[k] B(k, j), realizing the
/// cyclic convolution out(x) = sum_{u,v} kernel(u,v) z(x - (u,v)).
inline Eigen::MatrixXd dense_convolution_matrix(const ConvolutionKernel& k, Grid g) {
    const auto e = embed_kernel(k, g);
    const auto n = static_cast<Eigen::Index>(g.pixels());
    Eigen::MatrixXd B(n, n);
    for (int rk = 0; rk < g.rows; ++rk)
        for (int ck = 0; ck < g.cols; ++ck)
            for (int rj = 0; rj < g.rows; ++rj)
                for (int cj = 0; cj < g.cols; ++cj) {
                    const int dr = ((rj - rk) % g.rows + g.rows) % g.rows;
                    const int dc = ((cj - ck) % g.cols + g.cols) % g.cols;
                    B(rk * g.cols + ck, rj * g.cols + cj) = e[static_cast<std::size_t>(dr) * g.cols + dc];
                }
    return B;
}

/// Dense matrix of the horizontal difference operator (right multiplication).
inline Eigen::MatrixXd dense_diff_h_matrix(Grid g) {
    const auto n = static_cast<Eigen::Index>(g.pixels());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            const Eigen::Index j = r * g.cols + c;
            D(r * g.cols + (c + 1) % g.cols, j) += 1.0;
            D(j, j) -= 1.0;
        }
    return D;
}

inline Eigen::MatrixXd dense_diff_v_matrix(Grid g) {
    const auto n = static_cast<Eigen::Index>(g.pixels());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            const Eigen::Index j = r * g.cols + c;
            D(((r + 1) % g.rows) * g.cols + c, j) += 1.0;
            D(j, j) -= 1.0;
        }
    return D;
}

/// Dense n_fine x n_coarse subsampling matrix M (columns of the identity).
inline Eigen::MatrixXd dense_subsample_matrix(const SamplingLattice& lat) {
    const Grid coarse = lat.coarse();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lat.fine.pixels()),
                                              static_cast<Eigen::Index>(coarse.pixels()));
    for (int i = 0; i < coarse.rows; ++i)
        for (int j = 0; j < coarse.cols; ++j) {
            const Eigen::Index fine =
                (i * lat.factor + lat.phase_row) * lat.fine.cols + (j * lat.factor + lat.phase_col);
            M(fine, i * coarse.cols + j) = 1.0;
        }
    return M;
}

/// Apply a dense right-multiplication operator to every band.
inline SpectralImage apply_dense(const SpectralImage& img, const Eigen::MatrixXd& op, Grid out_grid) {
    if (static_cast<std::size_t>(op.rows()) != img.pixels() ||
        static_cast<std::size_t>(op.cols()) != out_grid.pixels())
        throw hysure::ValidationError("apply_dense: operator shape mismatch");
    SpectralImage out(img.bands(), out_grid);
    hysure::as_matrix(out) = hysure::as_matrix(img) * op;
    return out;
}

inline double max_abs_diff(const SpectralImage& a, const SpectralImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

} // namespace testsup
