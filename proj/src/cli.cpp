#include "nakags/cli.hpp"

#include "nakags/chroma.hpp"
#include "nakags/fit.hpp"
#include "nakags/io.hpp"
#include "nakags/naka.hpp"
#include "nakags/objective.hpp"
#include "nakags/parallel.hpp"
#include "nakags/ppm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <functional>
#include <iostream>
#include <map>

namespace nakags::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

io::PlyFormat ply_format(const std::string& name) {
    return name == "ascii" ? io::PlyFormat::Ascii : io::PlyFormat::BinaryLittleEndian;
}

json transform_to_json(const ppm::Transform& t) {
    json rotation = json::array();
    for (int r = 0; r < 3; ++r) rotation.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
    return {{"scale", t.scale},
            {"rotation", rotation},
            {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

void ensure_parent_dir(const fs::path& file) {
    const fs::path parent = file.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError(IoError::Direction::Write, "cannot create directory '" + parent.string() + "'");
}

std::vector<fs::path> list_pngs(const fs::path& input) {
    std::error_code ec;
    if (fs::is_regular_file(input, ec)) return {input};
    if (!fs::is_directory(input, ec)) {
        throw IoError(IoError::Direction::Read, "input '" + input.string() + "' is neither a file nor a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError(IoError::Direction::Read, "no PNG files in '" + input.string() + "'");
    return files;
}

/// Maps on a coarser grid than the image are upsampled to it.
CorrectionMaps fit_maps_to(const CorrectionMaps& maps, const ImageBuffer& img) {
    if (maps.width() == img.width() && maps.height() == img.height()) return maps;
    if (maps.width() <= img.width() && maps.height() <= img.height()) {
        return upsample_maps(maps, img.width(), img.height());
    }
    throw ShapeMismatch("maps are " + std::to_string(maps.width()) + "x" + std::to_string(maps.height()) +
                        " but the image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()));
}

void print_json(std::ostream& out, const json& doc) { out << doc.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

struct EnhanceArgs {
    std::string input;
    std::string output;
    double sigma = NakaParams{}.sigma;
    double exponent = NakaParams{}.exponent;
    double blur_sigma = BlurParams{}.sigma;
    int depth = 16;
};

int cmd_enhance(const EnhanceArgs& a, std::ostream& out, std::ostream&) {
    const NakaParams params{a.sigma, a.exponent};
    params.validate();
    const std::vector<fs::path> files = list_pngs(a.input);
    const fs::path out_dir(a.output);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(IoError::Direction::Write, "cannot create directory '" + out_dir.string() + "'");

    parallel_for(files.size(), configured_threads(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const ImageBuffer img = io::read_png(files[i]);
            io::write_png(naka_transform(img, params), out_dir / files[i].filename(), a.depth);
        }
    });

    json written = json::array();
    for (const auto& f : files) written.push_back((out_dir / f.filename()).string());
    print_json(out, {{"written", written}});
    return kOk;
}

struct CorrectArgs {
    std::string naka;
    std::string maps;
    std::string output;
    double blur_sigma = BlurParams{}.sigma;
    int depth = 16;
};

int cmd_correct(const CorrectArgs& a, std::ostream&, std::ostream&) {
    const ImageBuffer naka = io::read_png(a.naka);
    const CorrectionMaps maps = fit_maps_to(io::read_maps(a.maps), naka);
    BlurParams blur;
    blur.sigma = a.blur_sigma;
    const ImageBuffer corrected = apply_correction(naka, maps, blur);
    ensure_parent_dir(a.output);
    io::write_png(corrected, a.output, a.depth);
    return kOk;
}

struct FitArgs {
    std::string low;
    std::string naka;
    std::string gt;
    std::string maps_out;
    std::string output;
    std::string preview;
    std::size_t grid = FitConfig{}.grid_w;
    int iterations = FitConfig{}.iterations;
    std::uint64_t seed = FitConfig{}.seed;
    double step = FitConfig{}.step_size;
    double blur_sigma = BlurParams{}.sigma;
    int depth = 16;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream&) {
    const ImageBuffer low = io::read_png(a.low);
    const ImageBuffer naka = io::read_png(a.naka);
    const ImageBuffer gt = io::read_png(a.gt);

    FitConfig cfg;
    cfg.grid_w = a.grid;
    cfg.grid_h = a.grid;
    cfg.iterations = a.iterations;
    cfg.seed = a.seed;
    cfg.step_size = a.step;
    cfg.blur.sigma = a.blur_sigma;
    const FitResult fit = fit_correction(low, naka, gt, cfg);

    ensure_parent_dir(a.maps_out);
    io::write_maps(fit.maps, a.maps_out);
    const ImageBuffer corrected = apply_correction(naka, fit.maps, cfg.blur);
    if (!a.output.empty()) {
        ensure_parent_dir(a.output);
        io::write_png(corrected, a.output, a.depth);
    }
    if (!a.preview.empty()) {
        ensure_parent_dir(a.preview);
        io::write_maps_preview(fit.maps, a.preview);
    }

    json report = io::loss_report_to_json(fit.final_report);
    report["initial_total"] = fit.initial_report.total;
    report["accepted_steps"] = fit.accepted_steps;
    report["loss_trace"] = fit.loss_trace;
    report["psnr_db"] = psnr(corrected, gt);
    print_json(out, report);
    return kOk;
}

struct MetricsArgs {
    std::string pred;
    std::string gt;
    std::string maps;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out, std::ostream&) {
    const ImageBuffer pred = io::read_png(a.pred);
    const ImageBuffer gt = io::read_png(a.gt);
    const CorrectionMaps maps =
        a.maps.empty() ? identity_maps(pred.width(), pred.height()) : fit_maps_to(io::read_maps(a.maps), pred);
    json report = io::loss_report_to_json(compound_loss(pred, gt, maps));
    report["psnr_db"] = psnr(pred, gt);
    report["ssim"] = ssim(pred, gt);
    print_json(out, report);
    return kOk;
}

struct AlignArgs {
    std::string ply;
    std::string src_cams;
    std::string dst_cams;
    std::string output;
    std::string mode = "sim3";
    std::string format = "binary";
};

int cmd_align(const AlignArgs& a, std::ostream& out, std::ostream&) {
    const ppm::PointCloud cloud = io::read_ply(a.ply);
    const ppm::CameraSet src = io::read_cameras(a.src_cams);
    const ppm::CameraSet dst = io::read_cameras(a.dst_cams);
    const ppm::AlignmentMode mode = ppm::parse_alignment_mode(a.mode);
    const ppm::Transform t = ppm::estimate_alignment(src, dst, mode);
    const ppm::PointCloud aligned = mode == ppm::AlignmentMode::None ? cloud : ppm::apply_transform(cloud, t);
    ensure_parent_dir(a.output);
    io::write_ply(aligned, a.output, ply_format(a.format));

    json report = transform_to_json(t);
    report["mode"] = std::string(ppm::to_string(mode));
    report["rms"] = mode == ppm::AlignmentMode::None ? 0.0 : ppm::alignment_rms(src, dst, t);
    print_json(out, report);
    return kOk;
}

struct PoolArgs {
    std::string ply;
    std::string output;
    double voxel = ppm::PruneConfig{}.voxel_size;
    std::string format = "binary";
};

int cmd_pool(const PoolArgs& a, std::ostream& out, std::ostream&) {
    const ppm::PointCloud cloud = io::read_ply(a.ply);
    const ppm::PointCloud pooled = ppm::voxel_pool(cloud, a.voxel);
    ensure_parent_dir(a.output);
    io::write_ply(pooled, a.output, ply_format(a.format));
    print_json(out, {{"input_count", cloud.size()}, {"output_count", pooled.size()}});
    return kOk;
}

struct PruneArgs {
    std::string ply;
    std::string output;
    std::string report;
    ppm::PruneConfig cfg;
    std::string format = "binary";
};

int cmd_prune(const PruneArgs& a, std::ostream& out, std::ostream&) {
    a.cfg.validate();
    const ppm::PointCloud cloud = io::read_ply(a.ply);
    const ppm::PointCloud pooled = ppm::voxel_pool(cloud, a.cfg.voxel_size);
    const ppm::PruneResult result = ppm::progressive_prune(pooled, a.cfg, configured_threads());
    ensure_parent_dir(a.output);
    io::write_ply(result.cloud, a.output, ply_format(a.format));

    json report = io::prune_report_to_json(result.report);
    report["pooled_count"] = pooled.size();
    if (!a.report.empty()) {
        ensure_parent_dir(a.report);
        io::write_text(a.report, report.dump(2) + "\n");
    }
    print_json(out, report);
    return kOk;
}

struct PipelineArgs {
    std::string config;
    std::string input;
    std::string src_cams;
    std::string dst_cams;
    std::string output;
    std::string report;
    std::string mode = "sim3";
    ppm::PruneConfig prune;
    std::string format = "binary";
};

/// Options the user actually passed on the command line.
struct Overrides {
    std::function<bool(const char*)> given;
};

int cmd_pipeline(const PipelineArgs& a, const Overrides& flags, std::ostream& out, std::ostream&) {
    io::PipelineConfig cfg = a.config.empty() ? io::PipelineConfig{} : io::read_config(a.config);
    if (flags.given("--input")) cfg.paths.input_ply = a.input;
    if (flags.given("--src-cams")) cfg.paths.src_cameras = a.src_cams;
    if (flags.given("--dst-cams")) cfg.paths.dst_cameras = a.dst_cams;
    if (flags.given("--output")) cfg.paths.output_ply = a.output;
    if (flags.given("--report")) cfg.paths.report = a.report;
    if (flags.given("--mode")) cfg.alignment = ppm::parse_alignment_mode(a.mode);
    if (flags.given("--voxel")) cfg.prune.voxel_size = a.prune.voxel_size;
    if (flags.given("--tau0")) cfg.prune.tau0 = a.prune.tau0;
    if (flags.given("--beta")) cfg.prune.beta = a.prune.beta;
    if (flags.given("--iters")) cfg.prune.iterations = a.prune.iterations;
    if (flags.given("--seed")) cfg.prune.seed = a.prune.seed;
    if (flags.given("--min-keep")) cfg.prune.min_keep_fraction = a.prune.min_keep_fraction;

    const auto require = [](const fs::path& p, const char* what) {
        if (p.empty()) throw InvalidArgument(std::string("pipeline: no ") + what + " given (config paths or flag)");
    };
    require(cfg.paths.input_ply, "input PLY");
    require(cfg.paths.output_ply, "output PLY");
    if (cfg.alignment != ppm::AlignmentMode::None) {
        require(cfg.paths.src_cameras, "source cameras");
        require(cfg.paths.dst_cameras, "target cameras");
    }

    const ppm::PointCloud cloud = io::read_ply(cfg.paths.input_ply);
    ppm::CameraSet src;
    ppm::CameraSet dst;
    if (cfg.alignment != ppm::AlignmentMode::None) {
        src = io::read_cameras(cfg.paths.src_cameras);
        dst = io::read_cameras(cfg.paths.dst_cameras);
    }
    const ppm::PpmResult result = ppm::run_ppm(cloud, src, dst, cfg.alignment, cfg.prune, configured_threads());

    ensure_parent_dir(cfg.paths.output_ply);
    io::write_ply(result.cloud, cfg.paths.output_ply, ply_format(a.format));

    json report = io::prune_report_to_json(result.report);
    report["pooled_count"] = result.pooled_count;
    report["alignment"] = transform_to_json(result.alignment);
    report["alignment"]["mode"] = std::string(ppm::to_string(cfg.alignment));
    if (cfg.alignment != ppm::AlignmentMode::None) {
        report["alignment"]["rms"] = ppm::alignment_rms(src, dst, result.alignment);
    }
    if (!cfg.paths.report.empty()) {
        ensure_parent_dir(cfg.paths.report);
        io::write_text(cfg.paths.report, report.dump(2) + "\n");
    }
    print_json(out, report);
    return kOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DegenerateInput*>(&e) != nullptr) return kDegenerate;
    if (const auto* io_err = dynamic_cast<const IoError*>(&e)) {
        return io_err->direction() == IoError::Direction::Read ? kBadInput : kIoFailure;
    }
    if (dynamic_cast<const InvalidArgument*>(&e) != nullptr || dynamic_cast<const ParseError*>(&e) != nullptr) {
        return kBadInput;
    }
    return kIoFailure;
}

void add_ply_format(CLI::App* sub, std::string& format) {
    sub->add_option("--format", format, "Output PLY encoding")
        ->check(CLI::IsMember({"binary", "ascii"}));
}

void add_prune_options(CLI::App* sub, ppm::PruneConfig& cfg) {
    sub->add_option("--voxel", cfg.voxel_size, "Voxel edge length for pooling")->check(CLI::PositiveNumber);
    sub->add_option("--tau0", cfg.tau0, "Initial distance threshold")->check(CLI::PositiveNumber);
    sub->add_option("--beta", cfg.beta, "Threshold schedule rate");
    sub->add_option("--iters", cfg.iterations, "Pruning iterations")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--min-keep", cfg.min_keep_fraction, "Retention floor as a fraction of the pooled count")
        ->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-light image enhancement and point-cloud cleanup", "nakags"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::function<int()> action;

    EnhanceArgs enhance;
    auto* enhance_cmd = app.add_subcommand("enhance", "Apply the Naka-Rushton tone curve to PNG images");
    enhance_cmd->add_option("--input", enhance.input, "Input PNG file or directory of PNGs")->required();
    enhance_cmd->add_option("--output", enhance.output, "Output directory")->required();
    enhance_cmd->add_option("--sigma", enhance.sigma, "Half-saturation intensity")->check(CLI::PositiveNumber);
    enhance_cmd->add_option("--exponent", enhance.exponent, "Response exponent")->check(CLI::PositiveNumber);
    enhance_cmd->add_option("--blur-sigma", enhance.blur_sigma, "Low-pass sigma (validated; the tone curve is pointwise)")
        ->check(CLI::PositiveNumber);
    enhance_cmd->add_option("--depth", enhance.depth, "Output bit depth")->check(CLI::IsMember({8, 16}));
    enhance_cmd->callback([&] { action = [&] { return cmd_enhance(enhance, out, err); }; });

    CorrectArgs correct;
    auto* correct_cmd = app.add_subcommand("correct", "Apply correction maps to a Naka-enhanced image");
    correct_cmd->add_option("--naka", correct.naka, "Naka-enhanced PNG")->required();
    correct_cmd->add_option("--maps", correct.maps, "Correction maps file")->required();
    correct_cmd->add_option("--output", correct.output, "Corrected PNG")->required();
    correct_cmd->add_option("--blur-sigma", correct.blur_sigma, "Low-pass Gaussian sigma")
        ->check(CLI::PositiveNumber);
    correct_cmd->add_option("--depth", correct.depth, "Output bit depth")->check(CLI::IsMember({8, 16}));
    correct_cmd->callback([&] { action = [&] { return cmd_correct(correct, out, err); }; });

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit-correction", "Fit correction maps against a reference image");
    fit_cmd->add_option("--low", fit.low, "Low-light PNG")->required();
    fit_cmd->add_option("--naka", fit.naka, "Naka-enhanced PNG")->required();
    fit_cmd->add_option("--gt", fit.gt, "Reference PNG")->required();
    fit_cmd->add_option("--maps-out", fit.maps_out, "Where to write the fitted maps")->required();
    fit_cmd->add_option("--output", fit.output, "Optional corrected PNG");
    fit_cmd->add_option("--preview", fit.preview, "Optional prefix for map preview PNGs");
    fit_cmd->add_option("--grid", fit.grid, "Coarse grid size (grid x grid)")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--iters", fit.iterations, "Optimizer iterations")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--seed", fit.seed, "Random seed");
    fit_cmd->add_option("--step", fit.step, "Initial probe size")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--blur-sigma", fit.blur_sigma, "Low-pass Gaussian sigma")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--depth", fit.depth, "Output bit depth")->check(CLI::IsMember({8, 16}));
    fit_cmd->callback([&] { action = [&] { return cmd_fit(fit, out, err); }; });

    MetricsArgs metrics;
    auto* metrics_cmd = app.add_subcommand("metrics", "Report loss terms, PSNR and SSIM as JSON");
    metrics_cmd->add_option("--pred", metrics.pred, "Predicted PNG")->required();
    metrics_cmd->add_option("--gt", metrics.gt, "Reference PNG")->required();
    metrics_cmd->add_option("--maps", metrics.maps, "Correction maps for the regularizer (identity if omitted)");
    metrics_cmd->callback([&] { action = [&] { return cmd_metrics(metrics, out, err); }; });

    AlignArgs align;
    auto* align_cmd = app.add_subcommand("align", "Align a point cloud into the target camera frame");
    align_cmd->add_option("--ply", align.ply, "Input PLY")->required();
    align_cmd->add_option("--src-cams", align.src_cams, "Cameras in the cloud's frame (JSON)")->required();
    align_cmd->add_option("--dst-cams", align.dst_cams, "Cameras in the target frame (JSON)")->required();
    align_cmd->add_option("--output", align.output, "Output PLY")->required();
    align_cmd->add_option("--mode", align.mode, "Alignment model")
        ->check(CLI::IsMember({"sim3", "rigid", "none"}));
    add_ply_format(align_cmd, align.format);
    align_cmd->callback([&] { action = [&] { return cmd_align(align, out, err); }; });

    PoolArgs pool;
    auto* pool_cmd = app.add_subcommand("pool", "Voxel-pool a point cloud");
    pool_cmd->add_option("--ply", pool.ply, "Input PLY")->required();
    pool_cmd->add_option("--output", pool.output, "Output PLY")->required();
    pool_cmd->add_option("--voxel", pool.voxel, "Voxel edge length")->check(CLI::PositiveNumber);
    add_ply_format(pool_cmd, pool.format);
    pool_cmd->callback([&] { action = [&] { return cmd_pool(pool, out, err); }; });

    PruneArgs prune;
    auto* prune_cmd = app.add_subcommand("prune", "Voxel-pool then progressively prune a point cloud");
    prune_cmd->add_option("--ply", prune.ply, "Input PLY")->required();
    prune_cmd->add_option("--output", prune.output, "Output PLY")->required();
    prune_cmd->add_option("--report", prune.report, "Optional path for the prune report JSON");
    add_prune_options(prune_cmd, prune.cfg);
    add_ply_format(prune_cmd, prune.format);
    prune_cmd->callback([&] { action = [&] { return cmd_prune(prune, out, err); }; });

    PipelineArgs pipeline;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Align, pool and prune as described by a config file");
    pipeline_cmd->add_option("--config", pipeline.config, "Pipeline config JSON");
    pipeline_cmd->add_option("--input", pipeline.input, "Input PLY (overrides paths.input_ply)");
    pipeline_cmd->add_option("--src-cams", pipeline.src_cams, "Source cameras (overrides paths.src_cameras)");
    pipeline_cmd->add_option("--dst-cams", pipeline.dst_cams, "Target cameras (overrides paths.dst_cameras)");
    pipeline_cmd->add_option("--output", pipeline.output, "Output PLY (overrides paths.output_ply)");
    pipeline_cmd->add_option("--report", pipeline.report, "Report JSON (overrides paths.report)");
    pipeline_cmd->add_option("--mode", pipeline.mode, "Alignment model (overrides alignment)")
        ->check(CLI::IsMember({"sim3", "rigid", "none"}));
    add_prune_options(pipeline_cmd, pipeline.prune);
    add_ply_format(pipeline_cmd, pipeline.format);
    const Overrides overrides{[pipeline_cmd](const char* name) { return pipeline_cmd->count(name) > 0; }};
    pipeline_cmd->callback([&] { action = [&] { return cmd_pipeline(pipeline, overrides, out, err); }; });

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("nakags");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        return action ? action() : kBadInput;
    } catch (const std::exception& e) {
        err << "nakags: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace nakags::cli
