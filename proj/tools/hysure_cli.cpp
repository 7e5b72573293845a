// Command-line front end for the fusion pipeline:
//   simulate -> calibrate -> fuse -> evaluate, or all at once via `pipeline`.
// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hysure/hysure.hpp"

namespace fs = std::filesystem;
using namespace hysure;

namespace {

struct PreprocessOptions {
    std::string keep_spec;   // e.g. "0-49,60-99"; empty keeps everything
    bool normalize = true;
    double quantile = 0.999;
};

std::vector<int> parse_band_list(const std::string& spec, int n_bands) {
    std::vector<int> keep;
    if (spec.empty()) {
        keep.resize(n_bands);
        for (int i = 0; i < n_bands; ++i) keep[i] = i;
        return keep;
    }
    for (auto part : io_detail::split(spec, ',')) {
        const auto dash = part.find('-');
        if (dash == std::string_view::npos) {
            keep.push_back(static_cast<int>(io_detail::parse_int(part, "band list")));
        } else {
            const int first = static_cast<int>(io_detail::parse_int(part.substr(0, dash), "band list"));
            const int last = static_cast<int>(io_detail::parse_int(part.substr(dash + 1), "band list"));
            for (int i = first; i <= last; ++i) keep.push_back(i);
        }
    }
    return keep;
}

struct Preprocessed {
    SpectralImage image;
    std::vector<int> keep;
    std::vector<double> scales;
};

Preprocessed preprocess(const SpectralImage& img, const PreprocessOptions& opts) {
    Preprocessed out;
    out.keep = parse_band_list(opts.keep_spec, img.bands());
    out.image = remove_bands(img, out.keep);
    if (opts.normalize) {
        auto [normalized, scales] = normalize_bands(out.image, opts.quantile);
        out.image = std::move(normalized);
        out.scales = std::move(scales);
    } else {
        out.scales.assign(out.keep.size(), 1.0);
    }
    return out;
}

// Bands are laid out over 0.4-2.5 um; the IKONOS-like responses below are
// uniform over the matching index ranges.
BandRange wavelength_range(int n_bands, double lo_um, double hi_um) {
    auto index_of = [n_bands](double w) { return (w - 0.4) / 2.1 * n_bands; };
    int first = static_cast<int>(std::floor(index_of(lo_um)));
    int last = static_cast<int>(std::ceil(index_of(hi_um)));
    first = std::max(first, 0);
    last = std::min(last, n_bands);
    if (last <= first) throw ValidationError("wavelength range maps to an empty band interval");
    return {first, last};
}

SpectralResponse make_named_response(const std::string& kind, int n_bands) {
    if (kind == "pan")
        return boxcar_response(n_bands, {wavelength_range(n_bands, 0.45, 0.90)});
    if (kind == "msi4")
        return boxcar_response(n_bands, {wavelength_range(n_bands, 0.45, 0.52),
                                         wavelength_range(n_bands, 0.52, 0.60),
                                         wavelength_range(n_bands, 0.63, 0.69),
                                         wavelength_range(n_bands, 0.76, 0.90)});
    throw ValidationError("unknown response kind '" + kind + "' (expected pan or msi4)");
}

ConvolutionKernel make_named_kernel(const std::string& kind, int support, double sigma) {
    if (kind == "box") return make_box_kernel(support);
    if (kind == "gaussian") return make_gaussian_kernel(sigma, support);
    if (kind == "starck_murtagh") return starck_murtagh_kernel();
    throw ValidationError("unknown blur kind '" + kind + "' (expected box, gaussian or starck_murtagh)");
}

std::vector<double> band_centers(int n_bands) {
    std::vector<double> w(n_bands);
    for (int i = 0; i < n_bands; ++i) w[i] = 0.4 + 2.1 * (i + 0.5) / n_bands;
    return w;
}

int derive_factor(const Grid& fine, const Grid& coarse) {
    if (fine.rows % coarse.rows != 0 || fine.cols % coarse.cols != 0)
        throw ValidationError("fine grid is not an integer multiple of the coarse grid");
    const int fr = fine.rows / coarse.rows;
    const int fc = fine.cols / coarse.cols;
    if (fr != fc) throw ValidationError("row and column downsampling factors differ");
    return fr;
}

struct SimulateOptions {
    int rows = 128, cols = 128;
    int endmembers = 5;
    int bands = 100;
    int n_shapes = 12;
    std::uint64_t seed = 0;
    int factor = 4;
    std::string blur = "starck_murtagh";
    int blur_support = 5;
    double blur_sigma = 2.0;
    double snr_h = 30.0;
    double snr_m = 40.0;
    bool no_noise = false;
    std::string response = "pan";
    std::string out_dir = "out";
};

void cmd_simulate(const SimulateOptions& o, Manifest& manifest) {
    const Grid grid(o.rows, o.cols);
    SceneSpec spec;
    spec.grid = grid;
    spec.n_endmembers = o.endmembers;
    spec.hsi_bands = o.bands;
    spec.seed = o.seed;
    spec.shapes = default_scene_shapes(grid, o.endmembers, o.n_shapes, o.seed);

    const Scene scene = synthesize_scene(spec);
    const ConvolutionKernel kernel = make_named_kernel(o.blur, o.blur_support, o.blur_sigma);
    const SamplingLattice lattice(grid, o.factor);
    const SpectralResponse response = make_named_response(o.response, o.bands);

    const double snr_h = o.no_noise ? std::numeric_limits<double>::infinity() : o.snr_h;
    const double snr_m = o.no_noise ? std::numeric_limits<double>::infinity() : o.snr_m;
    const SpectralImage yh = add_noise_snr(degrade_spatial(scene.truth, kernel, lattice),
                                           {snr_h, o.seed + 1});
    const SpectralImage ym = add_noise_snr(degrade_spectral(scene.truth, response),
                                           {snr_m, o.seed + 2});

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    CubeContainer truth{scene.truth, band_centers(o.bands), {}, {}};
    write_cube(dir / "Z_truth.cube", truth);
    write_cube(dir / "Yh.cube", {yh, band_centers(o.bands), {}, {}});
    write_cube(dir / "Ym.cube", {ym, {}, {}, {}});
    write_response(dir / "R_true.resp", response);
    write_kernel(dir / "kernel_true.kern", kernel);

    manifest.set_int("scene_seed", static_cast<long>(o.seed));
    manifest.set_int("scene_rows", o.rows);
    manifest.set_int("scene_cols", o.cols);
    manifest.set_int("scene_endmembers", o.endmembers);
    manifest.set_int("scene_bands", o.bands);
    manifest.set_int("scene_shapes", o.n_shapes);
    manifest.set_int("factor", o.factor);
    manifest.set("blur", o.blur);
    manifest.set_int("blur_support", o.blur_support);
    manifest.set_double("blur_sigma", o.blur_sigma);
    manifest.set_double("snr_h_db", snr_h);
    manifest.set_double("snr_m_db", snr_m);
    manifest.set("response", o.response);
    manifest.set("file_truth", "Z_truth.cube");
    manifest.set("file_yh", "Yh.cube");
    manifest.set("file_ym", "Ym.cube");
    manifest.set("file_response_true", "R_true.resp");
    manifest.set("file_kernel_true", "kernel_true.kern");
    manifest.write(dir / "manifest.txt");
    std::cout << "simulate: wrote " << (dir / "manifest.txt").string() << "\n";
}

struct CalibrateOptions {
    std::string yh_file, ym_file;
    PreprocessOptions pre;
    double lambda_b = 10.0, lambda_r = 10.0;
    int support = 7;
    int strong_blur = 9;
    bool identity_blur = false;
    std::string out_dir = "out";
};

void cmd_calibrate(const CalibrateOptions& o, Manifest& manifest) {
    const CubeContainer yh_cube = read_cube(o.yh_file);
    const CubeContainer ym_cube = read_cube(o.ym_file);
    const Preprocessed yh = preprocess(yh_cube.image, o.pre);
    PreprocessOptions ym_pre = o.pre;
    ym_pre.keep_spec.clear(); // the keep list names hyperspectral bands only
    const Preprocessed ym = preprocess(ym_cube.image, ym_pre);

    const int factor = o.identity_blur ? 1 : derive_factor(ym.image.grid(), yh.image.grid());
    const SamplingLattice lattice(ym.image.grid(), factor);

    CalibConfig cfg;
    cfg.lambda_b = o.lambda_b;
    cfg.lambda_r = o.lambda_r;
    cfg.kernel_support = o.support;
    cfg.strong_blur_support = o.strong_blur;
    cfg.identity_blur = o.identity_blur;

    auto [response, kernel] = calibrate(yh.image, ym.image, lattice, cfg);

    // Residual of the model identity R Yh = Ym B M on the calibrated pair.
    const SpectralImage lhs = degrade_spectral(yh.image, response);
    const SpectralImage rhs = degrade_spatial(ym.image, kernel, lattice);
    const double residual = norm_fro(lhs - rhs) / norm_fro(lhs);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_response(dir / "R_est.resp", response);
    write_kernel(dir / "kernel_est.kern", kernel);
    CsvWriter csv({"metric", "value"});
    csv.add_row({"model_identity_residual_rel", io_detail::format_double(residual)});
    csv.add_row({"kernel_dc_gain", io_detail::format_double(kernel.weight_sum())});
    csv.write(dir / "calib_diagnostics.csv");

    manifest.set_double("calib_lambda_b", o.lambda_b);
    manifest.set_double("calib_lambda_r", o.lambda_r);
    manifest.set_int("calib_support", o.support);
    manifest.set_int("calib_strong_blur", o.strong_blur);
    manifest.set_double("calib_residual_rel", residual);
    manifest.set("file_response_est", "R_est.resp");
    manifest.set("file_kernel_est", "kernel_est.kern");
    manifest.write(dir / "manifest.txt");
    std::cout << "calibrate: model identity residual " << residual << "\n";
}

struct FuseOptions {
    std::string yh_file, ym_file, response_file, kernel_file;
    PreprocessOptions pre;
    int subspace_dim = 10;
    double lambda_m = 1.0;
    double lambda_phi = -1.0; // auto: 1e-2 for single-band Ym, 5e-4 otherwise
    double mu = 5e-2;
    int max_iters = 200;
    double rel_tol = 1e-4;
    bool denormalize = false;
    std::string out_dir = "out";
};

void cmd_fuse(const FuseOptions& o, Manifest& manifest) {
    const CubeContainer yh_cube = read_cube(o.yh_file);
    const CubeContainer ym_cube = read_cube(o.ym_file);
    const SpectralResponse response = read_response(o.response_file);
    const ConvolutionKernel kernel = read_kernel(o.kernel_file);

    const Preprocessed yh = preprocess(yh_cube.image, o.pre);
    PreprocessOptions ym_pre = o.pre;
    ym_pre.keep_spec.clear();
    const Preprocessed ym = preprocess(ym_cube.image, ym_pre);

    if (response.hsi_bands != yh.image.bands())
        throw ValidationError("fuse: response expects " + std::to_string(response.hsi_bands) +
                              " hyperspectral bands but preprocessing kept " +
                              std::to_string(yh.image.bands()));

    const Subspace sub = truncated_svd_basis(yh.image, o.subspace_dim);
    const SpectralImage yh_denoised = denoise_project(yh.image, sub);

    const int factor = derive_factor(ym.image.grid(), yh.image.grid());
    FusionProblem problem{yh_denoised, ym.image, sub, response, kernel,
                          SamplingLattice(ym.image.grid(), factor)};
    SolverConfig config;
    config.lambda_m = o.lambda_m;
    config.lambda_phi = o.lambda_phi >= 0.0 ? o.lambda_phi : (ym.image.bands() == 1 ? 1e-2 : 5e-4);
    config.mu = o.mu;
    config.max_iters = o.max_iters;
    config.rel_tol = o.rel_tol;

    SolveResult result = solve(problem, config);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    CubeContainer z_hat{result.Z_hat, {}, yh.keep, yh.scales};
    if (o.denormalize) {
        for (int l = 0; l < z_hat.image.bands(); ++l)
            for (double& v : z_hat.image.band(l)) v *= yh.scales[l];
        z_hat.band_scales.clear();
    }
    write_cube(dir / "Z_hat.cube", z_hat);
    write_cube(dir / "X.cube", {result.X, {}, {}, {}});
    write_trace_csv(dir / "trace.csv", result.trace);
    write_subspace(dir / "subspace.txt", sub);

    manifest.set_int("fuse_subspace_dim", o.subspace_dim);
    manifest.set_double("fuse_lambda_m", config.lambda_m);
    manifest.set_double("fuse_lambda_phi", config.lambda_phi);
    manifest.set_double("fuse_mu", config.mu);
    manifest.set_int("fuse_max_iters", config.max_iters);
    manifest.set_double("fuse_rel_tol", config.rel_tol);
    manifest.set_int("fuse_iterations", result.iterations);
    manifest.set("fuse_converged", result.converged ? "true" : "false");
    manifest.set_double("subspace_energy_fraction", sub.energy_fraction);
    manifest.set_int("yh_rows", yh.image.grid().rows);
    manifest.set_int("yh_cols", yh.image.grid().cols);
    manifest.set_int("ym_rows", ym.image.grid().rows);
    manifest.set_int("ym_cols", ym.image.grid().cols);
    manifest.set("file_z_hat", "Z_hat.cube");
    manifest.set("file_x", "X.cube");
    manifest.set("file_trace", "trace.csv");
    manifest.set("file_subspace", "subspace.txt");
    manifest.write(dir / "manifest.txt");
    std::cout << "fuse: " << result.iterations << " iterations, objective "
              << result.trace.back().objective << "\n";
}

struct EvaluateOptions {
    std::string estimate_file, truth_file;
    std::string subspace_file;
    std::string manifest_file;
    double scale_ratio = 0.0; // 0 means derive from the manifest grids
    bool projected_truth = true;
    int uiqi_window = 32;
    double trim = 0.99;
    std::string out_dir = "out";
};

void cmd_evaluate(const EvaluateOptions& o, Manifest& manifest) {
    const CubeContainer est = read_cube(o.estimate_file);
    const CubeContainer truth_cube = read_cube(o.truth_file);

    SpectralImage truth = truth_cube.image;
    if (!est.band_keep.empty() && truth.bands() != est.image.bands())
        truth = remove_bands(truth, est.band_keep);
    if (truth.bands() != est.image.bands())
        throw ValidationError("evaluate: band counts differ (" + std::to_string(est.image.bands()) +
                              " vs " + std::to_string(truth.bands()) + ")");
    // Bring the truth into the estimate's normalized domain.
    if (!est.band_scales.empty())
        for (int l = 0; l < truth.bands(); ++l)
            for (double& v : truth.band(l)) v /= est.band_scales[l];

    if (o.projected_truth) {
        if (o.subspace_file.empty())
            throw ValidationError("evaluate: --projected-truth needs --subspace (or pass "
                                  "--raw-truth to compare against the unprojected ground truth)");
        truth = denoise_project(truth, read_subspace(o.subspace_file));
    }

    double scale_ratio = o.scale_ratio;
    if (scale_ratio <= 0.0) {
        if (o.manifest_file.empty())
            throw ValidationError("evaluate: need --scale-ratio or --manifest to derive S");
        const Manifest m = Manifest::read(o.manifest_file);
        const auto factor = m.get("factor");
        if (!factor) throw ValidationError("evaluate: manifest has no 'factor' entry");
        scale_ratio = io_detail::parse_double(*factor, "manifest factor");
    }

    const QualityReport report = evaluate_quality(est.image, truth, scale_ratio, o.uiqi_window, o.trim);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_quality_report(dir / "report.txt", dir / "report.csv", report);
    CsvWriter band_csv({"band", "rmse"});
    for (std::size_t l = 0; l < report.band_rmse.size(); ++l)
        band_csv.add_row({std::to_string(l), io_detail::format_double(report.band_rmse[l])});
    band_csv.write(dir / "band_rmse.csv");
    CsvWriter pixel_csv({"rank", "rmse"});
    for (std::size_t j = 0; j < report.pixel_rmse_sorted.size(); ++j)
        pixel_csv.add_row({std::to_string(j), io_detail::format_double(report.pixel_rmse_sorted[j])});
    pixel_csv.write(dir / "pixel_rmse.csv");

    manifest.set_double("eval_ergas", report.ergas);
    manifest.set_double("eval_sam_degrees", report.sam_degrees);
    manifest.set_double("eval_uiqi", report.uiqi);
    manifest.set_double("eval_scale_ratio", scale_ratio);
    manifest.set("eval_projected_truth", o.projected_truth ? "true" : "false");
    manifest.write(dir / "manifest.txt");
    std::cout << "evaluate: ERGAS " << report.ergas << ", SAM " << report.sam_degrees
              << " deg, UIQI " << report.uiqi << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HySure-style hyperspectral sharpening: simulation, blind calibration, "
                 "subspace ADMM fusion, and quality evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Configuration file (key=value, [subcommand] sections)");

    SimulateOptions sim;
    CalibrateOptions cal;
    FuseOptions fuse;
    EvaluateOptions eval;
    bool pipeline_skip_simulate = false;

    auto add_pre_options = [](CLI::App* cmd, PreprocessOptions& pre) {
        cmd->add_option("--keep", pre.keep_spec, "Hyperspectral bands to keep, e.g. 0-49,60-99");
        cmd->add_option("--quantile", pre.quantile, "Normalization quantile")->check(CLI::Range(1e-12, 1.0));
        cmd->add_flag("!--no-normalize", pre.normalize, "Skip quantile normalization");
    };

    auto add_simulate_options = [&](CLI::App* cmd) {
        cmd->add_option("--rows", sim.rows)->check(CLI::PositiveNumber);
        cmd->add_option("--cols", sim.cols)->check(CLI::PositiveNumber);
        cmd->add_option("--endmembers", sim.endmembers)->check(CLI::PositiveNumber);
        cmd->add_option("--bands", sim.bands)->check(CLI::PositiveNumber);
        cmd->add_option("--shapes", sim.n_shapes)->check(CLI::NonNegativeNumber);
        cmd->add_option("--seed", sim.seed);
        cmd->add_option("--factor", sim.factor)->check(CLI::PositiveNumber);
        cmd->add_option("--blur", sim.blur)->check(CLI::IsMember({"box", "gaussian", "starck_murtagh"}));
        cmd->add_option("--blur-support", sim.blur_support);
        cmd->add_option("--blur-sigma", sim.blur_sigma);
        cmd->add_option("--snr-h", sim.snr_h, "Hyperspectral noise level (dB)");
        cmd->add_option("--snr-m", sim.snr_m, "Multispectral noise level (dB)");
        cmd->add_flag("--no-noise", sim.no_noise);
        cmd->add_option("--response", sim.response)->check(CLI::IsMember({"pan", "msi4"}));
    };
    auto add_calibrate_options = [&](CLI::App* cmd, bool with_inputs) {
        if (with_inputs) {
            cmd->add_option("--yh", cal.yh_file)->required();
            cmd->add_option("--ym", cal.ym_file)->required();
            add_pre_options(cmd, cal.pre);
        }
        cmd->add_option("--lambda-b", cal.lambda_b, "Blur regularization weight");
        cmd->add_option("--lambda-r", cal.lambda_r, "Response regularization weight");
        cmd->add_option("--support", cal.support, "Estimated kernel support (odd)");
        cmd->add_option("--strong-blur", cal.strong_blur, "Strong-blur support for R estimation");
        cmd->add_flag("--identity-blur", cal.identity_blur, "Equal-resolution pair, no relative blur");
    };
    auto add_fuse_options = [&](CLI::App* cmd, bool with_inputs) {
        if (with_inputs) {
            cmd->add_option("--yh", fuse.yh_file)->required();
            cmd->add_option("--ym", fuse.ym_file)->required();
            cmd->add_option("--response", fuse.response_file)->required();
            cmd->add_option("--kernel", fuse.kernel_file)->required();
            add_pre_options(cmd, fuse.pre);
        }
        cmd->add_option("--ls", fuse.subspace_dim, "Subspace dimension")->check(CLI::PositiveNumber);
        cmd->add_option("--lambda-m", fuse.lambda_m);
        cmd->add_option("--lambda-phi", fuse.lambda_phi,
                        "Regularizer weight; default 1e-2 for PAN, 5e-4 for MSI");
        cmd->add_option("--mu", fuse.mu);
        cmd->add_option("--max-iters", fuse.max_iters);
        cmd->add_option("--rel-tol", fuse.rel_tol);
        cmd->add_flag("--denormalize", fuse.denormalize, "Write Z_hat in physical units");
    };
    auto add_evaluate_options = [&](CLI::App* cmd, bool with_inputs) {
        if (with_inputs) {
            cmd->add_option("--estimate", eval.estimate_file)->required();
            cmd->add_option("--truth", eval.truth_file)->required();
            cmd->add_option("--subspace", eval.subspace_file);
            cmd->add_option("--manifest", eval.manifest_file);
            cmd->add_option("--scale-ratio", eval.scale_ratio);
        }
        cmd->add_flag("!--raw-truth", eval.projected_truth,
                      "Compare against the raw (unprojected) ground truth");
        cmd->add_option("--uiqi-window", eval.uiqi_window);
        cmd->add_option("--trim", eval.trim);
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic scene and observations");
    add_simulate_options(c_sim);
    c_sim->add_option("--out", sim.out_dir, "Output directory");

    CLI::App* c_cal = app.add_subcommand("calibrate", "Blind-estimate the blur and spectral response");
    add_calibrate_options(c_cal, true);
    c_cal->add_option("--out", cal.out_dir, "Output directory");

    CLI::App* c_fuse = app.add_subcommand("fuse", "Fuse a hyperspectral/multispectral pair");
    add_fuse_options(c_fuse, true);
    c_fuse->add_option("--out", fuse.out_dir, "Output directory");

    CLI::App* c_eval = app.add_subcommand("evaluate", "Compare a fused cube against ground truth");
    add_evaluate_options(c_eval, true);
    c_eval->add_option("--out", eval.out_dir, "Output directory");

    CLI::App* c_pipe = app.add_subcommand("pipeline", "simulate -> calibrate -> fuse -> evaluate");
    std::string pipe_out = "out";
    add_simulate_options(c_pipe);
    add_calibrate_options(c_pipe, false);
    add_fuse_options(c_pipe, false);
    add_evaluate_options(c_pipe, false);
    add_pre_options(c_pipe, fuse.pre);
    c_pipe->add_flag("--skip-simulate", pipeline_skip_simulate,
                     "Use existing --yh/--ym/--truth files instead of simulating");
    c_pipe->add_option("--yh", cal.yh_file, "Existing hyperspectral cube (with --skip-simulate)");
    c_pipe->add_option("--ym", cal.ym_file, "Existing multispectral cube (with --skip-simulate)");
    c_pipe->add_option("--truth", eval.truth_file, "Existing ground-truth cube (with --skip-simulate)");
    c_pipe->add_option("--out", pipe_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        Manifest manifest;
        if (stage == "simulate") {
            cmd_simulate(sim, manifest);
        } else if (stage == "calibrate") {
            cmd_calibrate(cal, manifest);
        } else if (stage == "fuse") {
            cmd_fuse(fuse, manifest);
        } else if (stage == "evaluate") {
            cmd_evaluate(eval, manifest);
        } else if (stage == "pipeline") {
            const fs::path dir(pipe_out);
            std::string current = "simulate";
            try {
                sim.out_dir = cal.out_dir = fuse.out_dir = eval.out_dir = pipe_out;
                if (!pipeline_skip_simulate) {
                    cmd_simulate(sim, manifest);
                    cal.yh_file = (dir / "Yh.cube").string();
                    cal.ym_file = (dir / "Ym.cube").string();
                    eval.truth_file = (dir / "Z_truth.cube").string();
                } else if (cal.yh_file.empty() || cal.ym_file.empty() || eval.truth_file.empty()) {
                    throw ValidationError("pipeline --skip-simulate needs --yh, --ym and --truth");
                }
                current = "calibrate";
                cal.pre = fuse.pre;
                cmd_calibrate(cal, manifest);
                current = "fuse";
                fuse.yh_file = cal.yh_file;
                fuse.ym_file = cal.ym_file;
                fuse.response_file = (dir / "R_est.resp").string();
                fuse.kernel_file = (dir / "kernel_est.kern").string();
                cmd_fuse(fuse, manifest);
                current = "evaluate";
                eval.estimate_file = (dir / "Z_hat.cube").string();
                eval.subspace_file = (dir / "subspace.txt").string();
                eval.scale_ratio = pipeline_skip_simulate ? 0.0 : static_cast<double>(sim.factor);
                if (pipeline_skip_simulate)
                    eval.scale_ratio = static_cast<double>(
                        derive_factor(read_cube(cal.ym_file).image.grid(), read_cube(cal.yh_file).image.grid()));
                cmd_evaluate(eval, manifest);
            } catch (...) {
                std::cerr << "pipeline: stage '" << current << "' failed\n";
                throw;
            }
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
