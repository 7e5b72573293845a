#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hysure/degradation.hpp"
#include "hysure/fft.hpp"
#include "hysure/image.hpp"
#include "hysure/operators.hpp"
#include "hysure/subspace.hpp"

namespace hysure {

/// Everything the fusion objective needs: the two observations and the
/// operators linking them to the latent high-resolution cube.
struct FusionProblem {
    SpectralImage Yh;          // L_h bands on the coarse grid
    SpectralImage Ym;          // L_m bands on the fine grid
    Subspace subspace;         // E, L_h x L_s
    SpectralResponse response; // R, L_m x L_h
    ConvolutionKernel kernel;  // b
    SamplingLattice lattice;   // fine -> coarse

    void validate() const {
        if (subspace.ambient_bands() != Yh.bands())
            throw ValidationError("FusionProblem: basis rows != Yh bands");
        if (response.hsi_bands != Yh.bands())
            throw ValidationError("FusionProblem: response columns != Yh bands");
        if (response.msi_bands != Ym.bands())
            throw ValidationError("FusionProblem: response rows != Ym bands");
        if (lattice.fine != Ym.grid() || lattice.coarse() != Yh.grid())
            throw ValidationError("FusionProblem: lattice does not map Ym grid onto Yh grid");
    }
};

struct SolverConfig {
    double lambda_m = 1.0;    // multispectral data-fit weight
    double lambda_phi = 1e-2; // 1e-2 for panchromatic, 5e-4 for multispectral
    double mu = 5e-2;         // ADMM penalty
    int max_iters = 200;
    double rel_tol = 1e-4;    // 0 disables residual-based stopping

    void validate() const {
        if (!(mu > 0.0)) throw ValidationError("SolverConfig: mu must be positive");
        if (!(lambda_m >= 0.0) || !(lambda_phi >= 0.0))
            throw ValidationError("SolverConfig: lambdas must be nonnegative");
        if (max_iters < 1) throw ValidationError("SolverConfig: max_iters must be >= 1");
        if (rel_tol < 0.0) throw ValidationError("SolverConfig: rel_tol must be nonnegative");
    }
};

/// ADMM iterate bundle. All images have L_s bands on the fine grid.
struct SolverState {
    SpectralImage X;
    SpectralImage V1, V2, V3, V4;
    SpectralImage A1, A2, A3, A4; // scaled duals

    bool all_finite() const {
        return X.all_finite() && V1.all_finite() && V2.all_finite() && V3.all_finite() &&
               V4.all_finite() && A1.all_finite() && A2.all_finite() && A3.all_finite() &&
               A4.all_finite();
    }
};

struct TraceRow {
    int iteration = 0;
    double objective = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    double seconds = 0.0; // wall time spent in this iteration
};

using Trace = std::vector<TraceRow>;

/// Vector total variation: sum over pixels of the Euclidean norm of the
/// stacked horizontal and vertical differences across all bands.
inline double vtv(const SpectralImage& Xh, const SpectralImage& Xv) {
    require_same_shape(Xh, Xv, "vtv");
    const std::size_t n = Xh.pixels();
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < Xh.bands(); ++i) {
            const double h = Xh(i, j), v = Xv(i, j);
            s += h * h + v * v;
        }
        total += std::sqrt(s);
    }
    return total;
}

/// Quantities reusable across iterations. The frequency-domain inverse of
/// [B B^T + I + D_h D_h^T + D_v D_v^T] exists because the identity term keeps
/// the real symbol >= 1 at every bin.
struct PrecomputedFactors {
    FrequencyField kernel_freq;                // B-hat
    std::vector<std::complex<double>> dh_freq; // D_h-hat
    std::vector<std::complex<double>> dv_freq; // D_v-hat
    std::vector<double> inv_symbol;            // reciprocal of the X-update symbol, in (0, 1]
    Eigen::MatrixXd v1_inverse;                // [E^T E + mu I]^-1
    MatrixRM ety_h;                            // E^T Y_h (L_s x n_h)
    Eigen::MatrixXd v2_inverse;                // [lambda_m E^T R^T R E + mu I]^-1
    MatrixRM v2_rhs_const;                     // lambda_m E^T R^T Y_m (L_s x n_m)
    Eigen::MatrixXd re;                        // R E (L_m x L_s)
    std::vector<std::size_t> lattice_sites;    // fine index of each coarse pixel, coarse row-major
    std::unique_ptr<Fft2D> fft;                // scratch transform context

    int subspace_dim() const { return static_cast<int>(v1_inverse.rows()); }
};

inline PrecomputedFactors precompute_factors(const FusionProblem& p, const SolverConfig& c) {
    p.validate();
    c.validate();
    PrecomputedFactors f;
    const Grid fine = p.lattice.fine;
    f.kernel_freq = kernel_to_frequency(p.kernel, fine);

    // Difference symbols, computed analytically: exp(2*pi*i*k/len) - 1.
    f.dh_freq.resize(fine.pixels());
    f.dv_freq.resize(fine.pixels());
    f.inv_symbol.resize(fine.pixels());
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (int r = 0; r < fine.rows; ++r) {
        const std::complex<double> dv = std::polar(1.0, two_pi * r / fine.rows) - 1.0;
        for (int cc = 0; cc < fine.cols; ++cc) {
            const std::complex<double> dh = std::polar(1.0, two_pi * cc / fine.cols) - 1.0;
            const std::size_t i = static_cast<std::size_t>(r) * fine.cols + cc;
            f.dh_freq[i] = dh;
            f.dv_freq[i] = dv;
            const double symbol = std::norm(f.kernel_freq.values[i]) + 1.0 + std::norm(dh) + std::norm(dv);
            f.inv_symbol[i] = 1.0 / symbol;
        }
    }

    const Eigen::MatrixXd& E = p.subspace.basis;
    const Eigen::Index Ls = E.cols();
    Eigen::Map<const MatrixRM> r_mat(p.response.matrix.data(), p.response.msi_bands,
                                     p.response.hsi_bands);
    f.re = r_mat * E;
    f.v1_inverse = (E.transpose() * E + c.mu * Eigen::MatrixXd::Identity(Ls, Ls)).inverse();
    f.ety_h = E.transpose() * as_matrix(p.Yh);
    f.v2_inverse = (c.lambda_m * f.re.transpose() * f.re +
                    c.mu * Eigen::MatrixXd::Identity(Ls, Ls)).inverse();
    f.v2_rhs_const = c.lambda_m * f.re.transpose() * as_matrix(p.Ym);

    const Grid coarse = p.lattice.coarse();
    f.lattice_sites.reserve(coarse.pixels());
    for (int i = 0; i < coarse.rows; ++i)
        for (int j = 0; j < coarse.cols; ++j)
            f.lattice_sites.push_back(
                static_cast<std::size_t>(i * p.lattice.factor + p.lattice.phase_row) * fine.cols +
                (j * p.lattice.factor + p.lattice.phase_col));

    f.fft = std::make_unique<Fft2D>(fine);
    return f;
}

/// Exact evaluation of the fusion objective
///   1/2 ||Y_h - E X B M||_F^2 + lambda_m/2 ||Y_m - R E X||_F^2
///     + lambda_phi * vtv(X D_h, X D_v).
inline double objective(const SpectralImage& X, const FusionProblem& p, const SolverConfig& c) {
    p.validate();
    if (X.bands() != p.subspace.dimension() || X.grid() != p.lattice.fine)
        throw ValidationError("objective: X must have L_s bands on the fine grid");
    const SpectralImage xbm = subsample(cyclic_convolve(X, kernel_to_frequency(p.kernel, X.grid())),
                                        p.lattice);
    const SpectralImage resid_h = p.Yh - reconstruct(xbm, p.subspace);
    const SpectralImage rex = degrade_spectral(reconstruct(X, p.subspace), p.response);
    const SpectralImage resid_m = p.Ym - rex;
    return 0.5 * inner(resid_h, resid_h) + 0.5 * c.lambda_m * inner(resid_m, resid_m) +
           c.lambda_phi * vtv(diff_h(X), diff_v(X));
}

namespace detail {

/// X-minimizer of the augmented Lagrangian: the normal equations
///   X [B B^T + I + D_h D_h^T + D_v D_v^T] = (V1+A1) B^T + (V2+A2)
///       + (V3+A3) D_h^T + (V4+A4) D_v^T
/// solved band-wise in the frequency domain.
inline SpectralImage update_x(PrecomputedFactors& f, const SolverState& s) {
    const Grid g = s.X.grid();
    const std::size_t n = g.pixels();
    SpectralImage X(s.X.bands(), g);
    std::vector<double> sum(n);
    std::vector<std::complex<double>> acc(n), term(n);
    for (int l = 0; l < s.X.bands(); ++l) {
        auto add_term = [&](const SpectralImage& V, const SpectralImage& A, int which) {
            for (std::size_t i = 0; i < n; ++i) sum[i] = V(l, i) + A(l, i);
            f.fft->forward(sum, term);
            switch (which) {
                case 1:
                    for (std::size_t i = 0; i < n; ++i)
                        acc[i] += term[i] * std::conj(f.kernel_freq.values[i]);
                    break;
                case 2:
                    for (std::size_t i = 0; i < n; ++i) acc[i] += term[i];
                    break;
                case 3:
                    for (std::size_t i = 0; i < n; ++i) acc[i] += term[i] * std::conj(f.dh_freq[i]);
                    break;
                case 4:
                    for (std::size_t i = 0; i < n; ++i) acc[i] += term[i] * std::conj(f.dv_freq[i]);
                    break;
            }
        };
        std::fill(acc.begin(), acc.end(), std::complex<double>(0.0));
        add_term(s.V1, s.A1, 1);
        add_term(s.V2, s.A2, 2);
        add_term(s.V3, s.A3, 3);
        add_term(s.V4, s.A4, 4);
        for (std::size_t i = 0; i < n; ++i) acc[i] *= f.inv_symbol[i];
        f.fft->inverse(acc, X.band(l));
    }
    return X;
}

/// V1-minimizer, split by the sampling mask: on lattice sites
///   V1 M = [E^T E + mu I]^-1 [E^T Y_h + mu (X B - A1)] M,
/// elsewhere V1 = X B - A1.
inline SpectralImage update_v1(const PrecomputedFactors& f, const SpectralImage& XB,
                               const SpectralImage& A1, double mu) {
    SpectralImage V1 = XB - A1;
    const int Ls = V1.bands();
    Eigen::VectorXd w(Ls), rhs(Ls);
    for (std::size_t j = 0; j < f.lattice_sites.size(); ++j) {
        const std::size_t p = f.lattice_sites[j];
        for (int i = 0; i < Ls; ++i) w[i] = V1(i, p);
        rhs = f.ety_h.col(static_cast<Eigen::Index>(j)) + mu * w;
        w = f.v1_inverse * rhs;
        for (int i = 0; i < Ls; ++i) V1(i, p) = w[i];
    }
    return V1;
}

/// V2-minimizer: [lambda_m E^T R^T R E + mu I]^-1 [lambda_m E^T R^T Y_m + mu (X - A2)].
inline SpectralImage update_v2(const PrecomputedFactors& f, const SpectralImage& X,
                               const SpectralImage& A2, double mu) {
    SpectralImage V2(X.bands(), X.grid());
    const MatrixRM rhs = f.v2_rhs_const + mu * (as_matrix(X) - as_matrix(A2));
    as_matrix(V2) = f.v2_inverse * rhs;
    return V2;
}

/// Joint V3/V4 minimizer: per-pixel vector soft threshold of the stacked
/// difference column, with the 0/||0|| = 0 convention.
inline void update_v3v4(const SpectralImage& XDh, const SpectralImage& XDv, const SpectralImage& A3,
                        const SpectralImage& A4, double threshold, SpectralImage& V3,
                        SpectralImage& V4) {
    const std::size_t n = XDh.pixels();
    const int Ls = XDh.bands();
    V3 = SpectralImage(Ls, XDh.grid());
    V4 = SpectralImage(Ls, XDh.grid());
    for (std::size_t j = 0; j < n; ++j) {
        double norm_sq = 0.0;
        for (int i = 0; i < Ls; ++i) {
            const double ch = XDh(i, j) - A3(i, j);
            const double cv = XDv(i, j) - A4(i, j);
            norm_sq += ch * ch + cv * cv;
        }
        const double norm = std::sqrt(norm_sq);
        const double factor = norm > threshold ? (norm - threshold) / norm : 0.0;
        if (factor == 0.0) continue;
        for (int i = 0; i < Ls; ++i) {
            V3(i, j) = factor * (XDh(i, j) - A3(i, j));
            V4(i, j) = factor * (XDv(i, j) - A4(i, j));
        }
    }
}

} // namespace detail

struct SolveResult {
    SpectralImage Z_hat; // E X, ambient bands
    SpectralImage X;     // subspace coefficients
    Trace trace;
    int iterations = 0;
    bool converged = false; // residual criterion met before the iteration cap
};

/// Build the default initial state: X from the subspace coefficients of the
/// zero-order-hold upsampled Y_h, V = H X^T, A = 0.
inline SolverState initial_state(const FusionProblem& p, PrecomputedFactors& f) {
    SolverState s;
    s.X = coefficients(zoh_upsample(p.Yh, p.lattice), p.subspace);
    s.V1 = cyclic_convolve(s.X, f.kernel_freq);
    s.V2 = s.X;
    s.V3 = diff_h(s.X);
    s.V4 = diff_v(s.X);
    const SpectralImage zero(s.X.bands(), s.X.grid());
    s.A1 = zero;
    s.A2 = zero;
    s.A3 = zero;
    s.A4 = zero;
    return s;
}

/// Run the ADMM loop until the scaled primal/dual residual criterion drops
/// below rel_tol or max_iters is reached.
inline SolveResult solve(const FusionProblem& p, const SolverConfig& c,
                         const SolverState* init = nullptr) {
    PrecomputedFactors f = precompute_factors(p, c);
    SolverState s = init ? *init : initial_state(p, f);
    if (s.X.bands() != p.subspace.dimension() || s.X.grid() != p.lattice.fine)
        throw ValidationError("solve: initial state has the wrong shape");

    const double threshold = c.lambda_phi / c.mu;
    SolveResult result;
    result.trace.reserve(c.max_iters);

    SpectralImage V1_prev = s.V1, V2_prev = s.V2, V3_prev = s.V3, V4_prev = s.V4;

    for (int k = 1; k <= c.max_iters; ++k) {
        const auto t0 = std::chrono::steady_clock::now();

        s.X = detail::update_x(f, s);
        const SpectralImage XB = cyclic_convolve(s.X, f.kernel_freq);
        const SpectralImage XDh = diff_h(s.X);
        const SpectralImage XDv = diff_v(s.X);

        V1_prev = std::move(s.V1);
        V2_prev = std::move(s.V2);
        V3_prev = std::move(s.V3);
        V4_prev = std::move(s.V4);
        s.V1 = detail::update_v1(f, XB, s.A1, c.mu);
        s.V2 = detail::update_v2(f, s.X, s.A2, c.mu);
        detail::update_v3v4(XDh, XDv, s.A3, s.A4, threshold, s.V3, s.V4);

        const SpectralImage r1 = XB - s.V1;
        const SpectralImage r2 = s.X - s.V2;
        const SpectralImage r3 = XDh - s.V3;
        const SpectralImage r4 = XDv - s.V4;
        s.A1 = s.A1 - r1;
        s.A2 = s.A2 - r2;
        s.A3 = s.A3 - r3;
        s.A4 = s.A4 - r4;

        if (!s.all_finite())
            throw NumericalError("solve: non-finite value encountered at iteration " +
                                 std::to_string(k) + " (diverging splitting)");

        const double primal_res = std::sqrt(inner(r1, r1) + inner(r2, r2) + inner(r3, r3) +
                                            inner(r4, r4));
        const SpectralImage dual_img =
            cyclic_convolve(s.V1 - V1_prev, f.kernel_freq, true) + (s.V2 - V2_prev) +
            diff_h(s.V3 - V3_prev, true) + diff_v(s.V4 - V4_prev, true);
        const double dual_res = c.mu * norm_fro(dual_img);

        // Evaluate the objective through the reduced-size factor products.
        const SpectralImage xbm = subsample(XB, p.lattice);
        const SpectralImage resid_h = p.Yh - reconstruct(xbm, p.subspace);
        const MatrixRM rex = f.re * as_matrix(s.X);
        const double resid_m_sq = (as_matrix(p.Ym) - rex).squaredNorm();
        const double obj = 0.5 * inner(resid_h, resid_h) + 0.5 * c.lambda_m * resid_m_sq +
                           c.lambda_phi * vtv(XDh, XDv);

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.trace.push_back({k, obj, primal_res, dual_res, seconds});
        result.iterations = k;

        if (c.rel_tol > 0.0) {
            const double hx_norm = std::sqrt(inner(XB, XB) + inner(s.X, s.X) + inner(XDh, XDh) +
                                             inner(XDv, XDv));
            const double v_norm = std::sqrt(inner(s.V1, s.V1) + inner(s.V2, s.V2) +
                                            inner(s.V3, s.V3) + inner(s.V4, s.V4));
            const SpectralImage ha = cyclic_convolve(s.A1, f.kernel_freq, true) + s.A2 +
                                     diff_h(s.A3, true) + diff_v(s.A4, true);
            const double dual_scale = c.mu * norm_fro(ha);
            if (primal_res <= c.rel_tol * std::max(hx_norm, v_norm) &&
                dual_res <= c.rel_tol * dual_scale) {
                result.converged = true;
                break;
            }
        }
    }

    result.X = s.X;
    result.Z_hat = reconstruct(s.X, p.subspace);
    return result;
}

} // namespace hysure
