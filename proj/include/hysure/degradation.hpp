#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "hysure/image.hpp"
#include "hysure/kernel.hpp"
#include "hysure/operators.hpp"

namespace hysure {

/// Relative spectral response linking hyperspectral bands to multispectral
/// bands. Entries outside the overlap mask are identically zero.
struct SpectralResponse {
    int msi_bands = 0;
    int hsi_bands = 0;
    std::vector<double> matrix;     // msi_bands x hsi_bands, row-major
    std::vector<std::uint8_t> mask; // same shape, 1 where overlap permitted

    SpectralResponse() = default;

    SpectralResponse(int msi, int hsi)
        : msi_bands(msi), hsi_bands(hsi),
          matrix(static_cast<std::size_t>(msi) * hsi, 0.0),
          mask(static_cast<std::size_t>(msi) * hsi, 1) {
        if (msi < 1 || hsi < 1)
            throw ValidationError("SpectralResponse: band counts must be >= 1");
    }

    double& operator()(int i, int j) { return matrix[static_cast<std::size_t>(i) * hsi_bands + j]; }
    double operator()(int i, int j) const { return matrix[static_cast<std::size_t>(i) * hsi_bands + j]; }

    bool allowed(int i, int j) const { return mask[static_cast<std::size_t>(i) * hsi_bands + j] != 0; }
    void set_allowed(int i, int j, bool on) { mask[static_cast<std::size_t>(i) * hsi_bands + j] = on ? 1 : 0; }

    void validate() const {
        for (int i = 0; i < msi_bands; ++i) {
            bool any = false;
            for (int j = 0; j < hsi_bands; ++j) {
                if (allowed(i, j)) any = true;
                else if ((*this)(i, j) != 0.0)
                    throw ValidationError("SpectralResponse: nonzero entry outside overlap mask at (" +
                                          std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            if (!any)
                throw ValidationError("SpectralResponse: row " + std::to_string(i) +
                                      " has an empty overlap mask");
        }
    }

    static SpectralResponse identity(int bands) {
        SpectralResponse r(bands, bands);
        for (int i = 0; i < bands; ++i) r(i, i) = 1.0;
        return r;
    }
};

/// A geometric region painted with a fixed abundance vector.
struct SceneShape {
    enum class Kind { Rectangle, Disk };
    Kind kind = Kind::Rectangle;
    // Rectangle: row0/col0/extent_r/extent_c. Disk: center (row0, col0), radius extent_r.
    double row0 = 0, col0 = 0, extent_r = 0, extent_c = 0;
    std::vector<double> abundance; // length n_endmembers, nonnegative, sums to 1
};

struct SceneSpec {
    Grid grid;
    int n_endmembers = 5;
    int hsi_bands = 100;
    std::uint64_t seed = 0;
    std::vector<SceneShape> shapes;
    std::vector<double> background_abundance; // empty means pure endmember 0
};

struct NoiseSpec {
    double snr_db = 30.0; // +infinity is the documented no-noise sentinel
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_abundance(const std::vector<double>& a, int p, const char* where) {
    if (static_cast<int>(a.size()) != p)
        throw ValidationError(std::string(where) + ": abundance vector length " +
                              std::to_string(a.size()) + " != endmember count " + std::to_string(p));
    double sum = 0.0;
    for (double v : a) {
        if (v < 0.0 || !std::isfinite(v))
            throw ValidationError(std::string(where) + ": abundances must be nonnegative and finite");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError(std::string(where) + ": abundances must sum to 1, got " + std::to_string(sum));
}

} // namespace detail

/// Smooth synthetic spectral signatures: sums of random Gaussian bumps over
/// the band axis, rescaled into [0.1, 1]. Deterministic in the seed.
inline std::vector<double> synthetic_signatures(int hsi_bands, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_bumps(3, 6);
    std::uniform_real_distribution<double> center(0.0, static_cast<double>(hsi_bands));
    std::uniform_real_distribution<double> width(hsi_bands / 20.0, hsi_bands / 5.0);
    std::uniform_real_distribution<double> amp(0.2, 1.0);

    std::vector<double> sigs(static_cast<std::size_t>(hsi_bands) * count, 0.0);
    for (int e = 0; e < count; ++e) {
        const int k = n_bumps(rng);
        std::vector<std::array<double, 3>> bumps(k);
        for (auto& b : bumps) b = {center(rng), width(rng), amp(rng)};
        double peak = 0.0;
        for (int l = 0; l < hsi_bands; ++l) {
            double v = 0.0;
            for (const auto& b : bumps) {
                const double d = (l - b[0]) / b[1];
                v += b[2] * std::exp(-0.5 * d * d);
            }
            sigs[static_cast<std::size_t>(l) * count + e] = v;
            peak = std::max(peak, v);
        }
        for (int l = 0; l < hsi_bands; ++l) {
            double& v = sigs[static_cast<std::size_t>(l) * count + e];
            v = 0.1 + 0.9 * (peak > 0.0 ? v / peak : 0.0);
        }
    }
    return sigs; // hsi_bands x count, row-major
}

struct Scene {
    SpectralImage truth;       // hsi_bands x grid
    std::vector<double> endmembers; // hsi_bands x n_endmembers, row-major
    SpectralImage abundances;  // n_endmembers x grid
};

/// Build a ground-truth cube under the linear mixing model from geometric
/// shapes. Pixels not covered by any shape take the background abundance
/// (pure endmember 0 unless specified). Later shapes overwrite earlier ones.
inline Scene synthesize_scene(const SceneSpec& spec) {
    const int p = spec.n_endmembers;
    if (p < 1) throw ValidationError("synthesize_scene: need at least one endmember");
    if (spec.hsi_bands < 1) throw ValidationError("synthesize_scene: need at least one band");

    std::vector<double> background = spec.background_abundance;
    if (background.empty()) {
        background.assign(p, 0.0);
        background[0] = 1.0;
    }
    detail::check_abundance(background, p, "synthesize_scene(background)");

    const Grid g = spec.grid;
    SpectralImage abundances(p, g);
    for (int e = 0; e < p; ++e)
        for (double& v : abundances.band(e)) v = background[e];

    for (const auto& shape : spec.shapes) {
        detail::check_abundance(shape.abundance, p, "synthesize_scene(shape)");
        if (shape.kind == SceneShape::Kind::Rectangle) {
            const int r0 = static_cast<int>(shape.row0), c0 = static_cast<int>(shape.col0);
            const int r1 = r0 + static_cast<int>(shape.extent_r), c1 = c0 + static_cast<int>(shape.extent_c);
            if (r0 < 0 || c0 < 0 || r1 > g.rows || c1 > g.cols || r1 <= r0 || c1 <= c0)
                throw ValidationError("synthesize_scene: rectangle does not fit in grid");
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c)
                    for (int e = 0; e < p; ++e) abundances.at(e, r, c) = shape.abundance[e];
        } else {
            const double cr = shape.row0, cc = shape.col0, rad = shape.extent_r;
            if (rad <= 0.0 || cr - rad < -0.5 || cc - rad < -0.5 || cr + rad > g.rows - 0.5 ||
                cc + rad > g.cols - 0.5)
                throw ValidationError("synthesize_scene: disk does not fit in grid");
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) {
                    const double dr = r - cr, dc = c - cc;
                    if (dr * dr + dc * dc <= rad * rad)
                        for (int e = 0; e < p; ++e) abundances.at(e, r, c) = shape.abundance[e];
                }
        }
    }

    Scene scene;
    scene.endmembers = synthetic_signatures(spec.hsi_bands, p, spec.seed);
    scene.abundances = std::move(abundances);
    scene.truth = SpectralImage(spec.hsi_bands, g);
    for (int l = 0; l < spec.hsi_bands; ++l) {
        auto out = scene.truth.band(l);
        for (int e = 0; e < p; ++e) {
            const double sig = scene.endmembers[static_cast<std::size_t>(l) * p + e];
            auto ab = scene.abundances.band(e);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += sig * ab[j];
        }
    }
    return scene;
}

/// Deterministic mix of rectangles and disks, each painted with one pure
/// endmember (cycling through them), sized to leave plenty of edges.
inline std::vector<SceneShape> default_scene_shapes(Grid grid, int n_endmembers, int count,
                                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SceneShape> shapes;
    shapes.reserve(count);
    for (int s = 0; s < count; ++s) {
        SceneShape shape;
        shape.abundance.assign(n_endmembers, 0.0);
        shape.abundance[(s + 1) % n_endmembers] = 1.0;
        const double min_side = std::min(grid.rows, grid.cols);
        if (s % 2 == 0) {
            shape.kind = SceneShape::Kind::Rectangle;
            shape.extent_r = std::max(2.0, std::floor(unit(rng) * 0.35 * grid.rows));
            shape.extent_c = std::max(2.0, std::floor(unit(rng) * 0.35 * grid.cols));
            shape.row0 = std::floor(unit(rng) * (grid.rows - shape.extent_r));
            shape.col0 = std::floor(unit(rng) * (grid.cols - shape.extent_c));
        } else {
            shape.kind = SceneShape::Kind::Disk;
            shape.extent_r = std::max(2.0, std::floor(unit(rng) * 0.18 * min_side));
            shape.row0 = shape.extent_r + unit(rng) * (grid.rows - 1 - 2 * shape.extent_r);
            shape.col0 = shape.extent_r + unit(rng) * (grid.cols - 1 - 2 * shape.extent_r);
        }
        shapes.push_back(std::move(shape));
    }
    return shapes;
}

enum class KernelKind { Box, Gaussian, StarckMurtagh };

/// 5x5 separable filter built from the B3-spline mask (1,4,6,4,1)/16.
inline ConvolutionKernel starck_murtagh_kernel() {
    static constexpr std::array<double, 5> b3 = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    std::vector<double> w(25);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) w[i * 5 + j] = b3[i] * b3[j];
    return ConvolutionKernel(5, std::move(w));
}

inline ConvolutionKernel make_box_kernel(int support) {
    if (support < 1 || support % 2 == 0)
        throw ValidationError("make_box_kernel: support must be positive odd");
    std::vector<double> w(static_cast<std::size_t>(support) * support, 1.0);
    return ConvolutionKernel(support, std::move(w)).normalized();
}

inline ConvolutionKernel make_gaussian_kernel(double sigma, int support) {
    if (support < 1 || support % 2 == 0)
        throw ValidationError("make_gaussian_kernel: support must be positive odd");
    if (!(sigma > 0.0)) throw ValidationError("make_gaussian_kernel: sigma must be positive");
    const int h = (support - 1) / 2;
    std::vector<double> w(static_cast<std::size_t>(support) * support);
    for (int u = -h; u <= h; ++u)
        for (int v = -h; v <= h; ++v)
            w[(u + h) * support + (v + h)] = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
    return ConvolutionKernel(support, std::move(w)).normalized();
}

inline ConvolutionKernel make_kernel(KernelKind kind, int support = 5, double sigma = 2.0) {
    switch (kind) {
        case KernelKind::Box: return make_box_kernel(support);
        case KernelKind::Gaussian: return make_gaussian_kernel(sigma, support);
        case KernelKind::StarckMurtagh: return starck_murtagh_kernel();
    }
    throw ValidationError("make_kernel: unknown kind");
}

/// Noiseless half of the hyperspectral observation: subsample(Z * b).
inline SpectralImage degrade_spatial(const SpectralImage& truth, const ConvolutionKernel& k,
                                     const SamplingLattice& lat) {
    return subsample(cyclic_convolve(truth, k), lat);
}

/// Noiseless half of the multispectral observation: R * Z.
inline SpectralImage degrade_spectral(const SpectralImage& truth, const SpectralResponse& response) {
    if (truth.bands() != response.hsi_bands)
        throw ValidationError("degrade_spectral: image has " + std::to_string(truth.bands()) +
                              " bands, response expects " + std::to_string(response.hsi_bands));
    SpectralImage out(response.msi_bands, truth.grid());
    for (int i = 0; i < response.msi_bands; ++i) {
        auto o = out.band(i);
        for (int j = 0; j < response.hsi_bands; ++j) {
            const double w = response(i, j);
            if (w == 0.0) continue;
            auto in = truth.band(j);
            for (std::size_t x = 0; x < o.size(); ++x) o[x] += w * in[x];
        }
    }
    return out;
}

/// Half-open band interval [first, last).
struct BandRange {
    int first = 0;
    int last = 0;
};

/// Uniform (boxcar) spectral response: row i averages the bands in ranges[i],
/// normalized to row sum 1; the overlap mask marks exactly those bands.
inline SpectralResponse boxcar_response(int hsi_bands, const std::vector<BandRange>& ranges,
                                        const std::vector<double>& weights = {}) {
    if (ranges.empty()) throw ValidationError("boxcar_response: need at least one range");
    if (!weights.empty() && weights.size() != ranges.size())
        throw ValidationError("boxcar_response: weights length must match ranges");
    SpectralResponse r(static_cast<int>(ranges.size()), hsi_bands);
    std::fill(r.mask.begin(), r.mask.end(), 0);
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& [first, last] = ranges[i];
        if (first < 0 || last > hsi_bands || last <= first)
            throw ValidationError("boxcar_response: range [" + std::to_string(first) + ", " +
                                  std::to_string(last) + ") invalid for " + std::to_string(hsi_bands) +
                                  " bands");
        const double w = (weights.empty() ? 1.0 : weights[i]) / static_cast<double>(last - first);
        for (int j = first; j < last; ++j) {
            r(static_cast<int>(i), j) = w;
            r.set_allowed(static_cast<int>(i), j, true);
        }
    }
    r.validate();
    return r;
}

/// Add i.i.d. zero-mean Gaussian noise calibrated so the realized variance
/// hits the requested SNR against the clean image's mean power. An infinite
/// snr_db returns the input unchanged.
inline SpectralImage add_noise_snr(const SpectralImage& img, const NoiseSpec& spec) {
    if (std::isinf(spec.snr_db) && spec.snr_db > 0) return img;
    if (!std::isfinite(spec.snr_db))
        throw ValidationError("add_noise_snr: snr_db must be finite (or +inf for no noise)");
    const double power = inner(img, img) / static_cast<double>(img.size());
    if (power <= 0.0)
        throw ValidationError("add_noise_snr: image is all zeros, SNR undefined");
    const double sigma = std::sqrt(power * std::pow(10.0, -spec.snr_db / 10.0));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, sigma);
    SpectralImage out = img;
    for (double& v : out.data()) v += noise(rng);
    return out;
}

} // namespace hysure
