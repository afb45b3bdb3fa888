#pragma once

#include "nakags/chroma.hpp"
#include "nakags/errors.hpp"
#include "nakags/fit.hpp"
#include "nakags/imagecore.hpp"
#include "nakags/naka.hpp"
#include "nakags/objective.hpp"
#include "nakags/ppm.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace nakags::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

enum class PlyFormat { Ascii, BinaryLittleEndian };

class PlyError : public ParseError {
public:
    enum class Kind { MalformedHeader, UnsupportedLayout, TruncatedBody, MalformedBody };

    PlyError(Kind kind, const std::string& what) : ParseError(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Reads the vertex element: x, y, z (float or double), optional
/// red/green/blue (uchar scaled by 1/255, or float), optional nx/ny/nz.
/// Other vertex properties are skipped. All-zero normals are dropped.
ppm::PointCloud read_ply(std::istream& in);
ppm::PointCloud read_ply(const fs::path& path);

/// Writes float32 positions, float32 normals and uchar colors.
void write_ply(const ppm::PointCloud& cloud, std::ostream& out, PlyFormat format);
void write_ply(const ppm::PointCloud& cloud, const fs::path& path, PlyFormat format);

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

/// Gray (and gray+alpha) decode to 1 channel, RGB(A) and palette to 3.
/// Alpha is discarded. Samples are divided by 2^depth - 1.
ImageBuffer read_png(const fs::path& path);

/// Writes a 1- or 3-channel image at 8 or 16 bits; values are clamped to
/// [0, 1] and rounded half away from zero.
void write_png(const ImageBuffer& img, const fs::path& path, int depth = 16);

// ---------------------------------------------------------------------------
// Cameras: [{"id": "cam0", "center": [x, y, z]}, ...]
// ---------------------------------------------------------------------------

ppm::CameraSet parse_cameras(const nlohmann::json& doc);
ppm::CameraSet read_cameras(const fs::path& path);
nlohmann::json cameras_to_json(const ppm::CameraSet& cams);

// ---------------------------------------------------------------------------
// Correction maps: "NKGSMAPS", u32 width, u32 height (little endian), then
// float32 LE planes: mul, add R, add G, add B.
// ---------------------------------------------------------------------------

inline constexpr char kMapsMagic[8] = {'N', 'K', 'G', 'S', 'M', 'A', 'P', 'S'};

std::string encode_maps(const CorrectionMaps& maps);
CorrectionMaps decode_maps(const std::string& bytes);
void write_maps(const CorrectionMaps& maps, const fs::path& path);
CorrectionMaps read_maps(const fs::path& path);

/// `<prefix>_mul.png` (mul * 0.5) and `<prefix>_add.png` (add + 0.5), 8 bit.
void write_maps_preview(const CorrectionMaps& maps, const fs::path& prefix);

// ---------------------------------------------------------------------------
// Pipeline configuration
// ---------------------------------------------------------------------------

/// Raised for configuration problems; key() is the dotted path, e.g. "prune.tau0".
class ConfigError : public ParseError {
public:
    ConfigError(std::string key, const std::string& what) : ParseError(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct PipelinePaths {
    fs::path input_ply;
    fs::path src_cameras;
    fs::path dst_cameras;
    fs::path output_ply;
    fs::path report;
};

struct PipelineConfig {
    NakaParams naka;
    BlurParams blur;
    LossWeights loss;
    FitConfig fit;
    ppm::PruneConfig prune;
    ppm::AlignmentMode alignment = ppm::AlignmentMode::Sim3;
    PipelinePaths paths;
};

/// Missing keys keep their defaults; unknown keys, wrong types and invariant
/// violations raise ConfigError naming the key. Relative paths are resolved
/// against `base_dir`.
PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir = {});
PipelineConfig read_config(const fs::path& path);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

nlohmann::json prune_report_to_json(const ppm::PruneReport& report);

/// Keys: rgb, chroma, ssim_loss, edge, reg, mse, gray, bright, total.
nlohmann::json loss_report_to_json(const LossReport& report);

nlohmann::json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace nakags::io
