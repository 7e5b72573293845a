#include <catch2/catch_amalgamated.hpp>

#include "hysure/hysure.hpp"
#include "test_support.hpp"

using namespace hysure;
using testsup::apply_dense;
using testsup::max_abs_diff;
using testsup::random_image;
using testsup::random_unit_kernel;

TEST_CASE("cyclic convolution with a delta kernel is the identity") {
    const SpectralImage img = random_image(3, Grid(6, 5), 11);
    const SpectralImage out = cyclic_convolve(img, ConvolutionKernel::delta(3));
    CHECK(max_abs_diff(img, out) < 1e-12);
}

TEST_CASE("cyclic convolution matches the brute-force spatial oracle") {
    const Grid g(4, 4);
    const SpectralImage img = random_image(1, g, 22);
    const ConvolutionKernel box = make_box_kernel(3);

    // Direct O(n * n_b) periodic convolution.
    SpectralImage expect(1, g);
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            double acc = 0.0;
            for (int u = -1; u <= 1; ++u)
                for (int v = -1; v <= 1; ++v)
                    acc += box(u + 1, v + 1) *
                           img.at(0, (r - u + g.rows) % g.rows, (c - v + g.cols) % g.cols);
            expect.at(0, r, c) = acc;
        }

    const SpectralImage out = cyclic_convolve(img, box);
    CHECK(max_abs_diff(out, expect) < 1e-10);
}

TEST_CASE("unit-DC kernels preserve constant images") {
    const Grid g(8, 8);
    SpectralImage img(2, g);
    for (double& v : img.data()) v = 3.25;
    const SpectralImage out = cyclic_convolve(img, random_unit_kernel(5, 33));
    for (double v : out.data()) CHECK(v == Catch::Approx(3.25).margin(1e-10));
}

TEST_CASE("cyclic convolution rejects grid mismatch") {
    const SpectralImage img = random_image(1, Grid(4, 4), 1);
    const FrequencyField field = kernel_to_frequency(ConvolutionKernel::delta(1), Grid(8, 8));
    CHECK_THROWS_AS(cyclic_convolve(img, field), ValidationError);
}

TEST_CASE("differences of a constant image vanish") {
    SpectralImage img(2, Grid(5, 7));
    for (double& v : img.data()) v = -1.5;
    CHECK(norm_fro(diff_h(img)) == 0.0);
    CHECK(norm_fro(diff_v(img)) == 0.0);
}

TEST_CASE("horizontal difference on a 1x4 row") {
    SpectralImage img(1, Grid(1, 4), {1, 2, 3, 4});
    const SpectralImage out = diff_h(img);
    const std::vector<double> expect = {1, 1, 1, -3};
    for (int c = 0; c < 4; ++c) CHECK(out(0, c) == Catch::Approx(expect[c]).margin(1e-14));
}

TEST_CASE("difference operators satisfy the adjoint identity") {
    const Grid g(6, 5);
    const SpectralImage x = random_image(2, g, 44);
    const SpectralImage y = random_image(2, g, 45);
    const double scale = norm_fro(x) * norm_fro(y);
    CHECK(std::abs(inner(diff_h(x), y) - inner(x, diff_h(y, true))) <= 1e-10 * scale);
    CHECK(std::abs(inner(diff_v(x), y) - inner(x, diff_v(y, true))) <= 1e-10 * scale);
}

TEST_CASE("subsampling selects the expected lattice sites") {
    SpectralImage img(1, Grid(4, 4));
    for (int i = 0; i < 16; ++i) img(0, i) = i + 1;

    SECTION("factor 1 is the identity") {
        const SamplingLattice lat(Grid(4, 4), 1);
        CHECK(max_abs_diff(subsample(img, lat), img) == 0.0);
    }
    SECTION("factor 2, phase (0,0)") {
        const SamplingLattice lat(Grid(4, 4), 2);
        const SpectralImage out = subsample(img, lat);
        REQUIRE(out.grid() == Grid(2, 2));
        CHECK(out(0, 0) == 1.0);
        CHECK(out(0, 1) == 3.0);
        CHECK(out(0, 2) == 9.0);
        CHECK(out(0, 3) == 11.0);
    }
    SECTION("M^T M = I") {
        const SamplingLattice lat(Grid(4, 4), 2);
        const SpectralImage coarse = random_image(3, Grid(2, 2), 46);
        CHECK(max_abs_diff(subsample(upsample_zero(coarse, lat), lat), coarse) == 0.0);
    }
    SECTION("divisibility is enforced") {
        CHECK_THROWS_AS(SamplingLattice(Grid(5, 4), 2), ValidationError);
    }
}

TEST_CASE("zero upsampling") {
    const SamplingLattice lat(Grid(4, 4), 2);
    const SpectralImage coarse = random_image(1, Grid(2, 2), 47);

    SECTION("factor 1 is the identity") {
        const SamplingLattice lat1(Grid(2, 2), 1);
        CHECK(max_abs_diff(upsample_zero(coarse, lat1), coarse) == 0.0);
    }
    SECTION("adjoint identity with subsample") {
        const SpectralImage x = random_image(2, Grid(4, 4), 48);
        const SpectralImage y = random_image(2, Grid(2, 2), 49);
        CHECK(std::abs(inner(subsample(x, lat), y) - inner(x, upsample_zero(y, lat))) <=
              1e-10 * norm_fro(x) * norm_fro(y));
    }
    SECTION("non-lattice sites stay zero") {
        const SpectralImage fine = upsample_zero(coarse, lat);
        int zeros = 0;
        for (double v : fine.data())
            if (v == 0.0) ++zeros;
        CHECK(zeros >= 12); // 12 of 16 sites are off-lattice
        CHECK(norm_fro(fine) == Catch::Approx(norm_fro(coarse)));
    }
}

TEST_CASE("kernel frequency fields") {
    SECTION("delta kernel transforms to all ones") {
        const FrequencyField field = kernel_to_frequency(ConvolutionKernel::delta(3), Grid(6, 4));
        for (const auto& v : field.values) {
            CHECK(v.real() == Catch::Approx(1.0).margin(1e-12));
            CHECK(v.imag() == Catch::Approx(0.0).margin(1e-12));
        }
    }
    SECTION("DC bin carries the weight sum") {
        const ConvolutionKernel k = random_unit_kernel(5, 50);
        const FrequencyField field = kernel_to_frequency(k, Grid(8, 8));
        CHECK(std::abs(field.dc() - std::complex<double>(1.0)) < 1e-12);
    }
    SECTION("matches the DFT of the dense circulant") {
        const Grid g(8, 8);
        const ConvolutionKernel box = make_box_kernel(3);
        const Eigen::MatrixXd B = testsup::dense_convolution_matrix(box, g);
        // Row 0 of B is the impulse response, i.e. the cyclically embedded
        // kernel; its DFT must reproduce the frequency field.
        SpectralImage impulse(1, g);
        for (std::size_t i = 0; i < g.pixels(); ++i) impulse(0, i) = B(0, static_cast<Eigen::Index>(i));
        Fft2D fft(g);
        std::vector<std::complex<double>> dft;
        fft.forward(impulse.band(0), dft);
        const FrequencyField field = kernel_to_frequency(box, g);
        for (std::size_t i = 0; i < dft.size(); ++i)
            CHECK(std::abs(dft[i] - field.values[i]) < 1e-10);
    }
    SECTION("support larger than the grid is rejected") {
        CHECK_THROWS_AS(kernel_to_frequency(ConvolutionKernel::delta(5), Grid(4, 4)), ValidationError);
    }
}

TEST_CASE("every operator matches its dense materialization on small grids") {
    const Grid g(8, 7);
    const SpectralImage img = random_image(3, g, 51);
    const ConvolutionKernel k = random_unit_kernel(3, 52);

    const Eigen::MatrixXd B = testsup::dense_convolution_matrix(k, g);
    const Eigen::MatrixXd Dh = testsup::dense_diff_h_matrix(g);
    const Eigen::MatrixXd Dv = testsup::dense_diff_v_matrix(g);

    CHECK(max_abs_diff(cyclic_convolve(img, k), apply_dense(img, B, g)) < 1e-10);
    CHECK(max_abs_diff(cyclic_convolve(img, k, true), apply_dense(img, B.transpose(), g)) < 1e-10);
    CHECK(max_abs_diff(diff_h(img), apply_dense(img, Dh, g)) < 1e-10);
    CHECK(max_abs_diff(diff_h(img, true), apply_dense(img, Dh.transpose(), g)) < 1e-10);
    CHECK(max_abs_diff(diff_v(img), apply_dense(img, Dv, g)) < 1e-10);
    CHECK(max_abs_diff(diff_v(img, true), apply_dense(img, Dv.transpose(), g)) < 1e-10);

    const Grid g2(8, 8);
    const SamplingLattice lat(g2, 2);
    const SpectralImage fine = random_image(2, g2, 53);
    const SpectralImage coarse = random_image(2, lat.coarse(), 54);
    const Eigen::MatrixXd M = testsup::dense_subsample_matrix(lat);
    CHECK(max_abs_diff(subsample(fine, lat), apply_dense(fine, M, lat.coarse())) == 0.0);
    CHECK(max_abs_diff(upsample_zero(coarse, lat), apply_dense(coarse, M.transpose(), g2)) == 0.0);
}

TEST_CASE("adjoint consistency across all linear operators") {
    const Grid g(8, 8);
    const SamplingLattice lat(g, 4);
    const ConvolutionKernel k = random_unit_kernel(5, 55);
    for (std::uint64_t seed = 100; seed < 104; ++seed) {
        const SpectralImage x = random_image(2, g, seed);
        const SpectralImage y = random_image(2, g, seed + 10);
        const SpectralImage yc = random_image(2, lat.coarse(), seed + 20);
        const double s_fine = norm_fro(x) * norm_fro(y);
        CHECK(std::abs(inner(cyclic_convolve(x, k), y) - inner(x, cyclic_convolve(y, k, true))) <=
              1e-10 * s_fine);
        CHECK(std::abs(inner(subsample(x, lat), yc) - inner(x, upsample_zero(yc, lat))) <=
              1e-10 * norm_fro(x) * norm_fro(yc));
    }
}

TEST_CASE("band-circulant operators commute") {
    const Grid g(8, 8);
    const SpectralImage img = random_image(2, g, 56);
    const ConvolutionKernel k = random_unit_kernel(5, 57);
    CHECK(max_abs_diff(diff_h(cyclic_convolve(img, k)), cyclic_convolve(diff_h(img), k)) < 1e-10);
    CHECK(max_abs_diff(diff_v(cyclic_convolve(img, k)), cyclic_convolve(diff_v(img), k)) < 1e-10);
}

TEST_CASE("subsampling is a contraction") {
    const SamplingLattice lat(Grid(8, 8), 2);
    for (std::uint64_t seed = 200; seed < 205; ++seed) {
        const SpectralImage x = random_image(3, Grid(8, 8), seed);
        CHECK(norm_fro(subsample(x, lat)) <= norm_fro(x));
    }
}

TEST_CASE("sampling phase shifts the selected sites") {
    SpectralImage img(1, Grid(4, 4));
    for (int i = 0; i < 16; ++i) img(0, i) = i + 1;
    const SamplingLattice lat(Grid(4, 4), 2, 1, 1);
    const SpectralImage out = subsample(img, lat);
    CHECK(out(0, 0) == 6.0);
    CHECK(out(0, 1) == 8.0);
    CHECK(out(0, 2) == 14.0);
    CHECK(out(0, 3) == 16.0);
}
