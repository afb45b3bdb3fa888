#include "nakags/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace nakags::io {

using nlohmann::json;

namespace {

// --- binary helpers ---------------------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return v;
}

void put_f32(std::string& out, double value) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

double get_f32(const std::string& in, std::size_t offset) {
    return std::bit_cast<float>(get_u32(in, offset));
}

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Direction::Read, "cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --- config helpers -------------------------------------------------------

class Section {
public:
    Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {
        if (!doc_.is_object()) throw ConfigError(name_, name_ + ": expected an object");
    }

    std::string key_path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    /// Rejects keys not in `known`.
    void restrict_to(std::initializer_list<const char*> known) const {
        for (const auto& [key, value] : doc_.items()) {
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok) throw ConfigError(key_path(key), "unknown configuration key '" + key_path(key) + "'");
        }
    }

    const json* find(const char* key) const {
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    void number(const char* key, double& out, const std::function<bool(double)>& valid, const char* requirement) const {
        const json* v = find(key);
        if (v == nullptr) return;
        if (!v->is_number()) throw ConfigError(key_path(key), key_path(key) + ": expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d) || !valid(d)) {
            throw ConfigError(key_path(key), key_path(key) + ": " + requirement);
        }
        out = d;
    }

    template <typename Int>
    void integer(const char* key, Int& out, long long lo, const char* requirement) const {
        const json* v = find(key);
        if (v == nullptr) return;
        if (!v->is_number_integer()) throw ConfigError(key_path(key), key_path(key) + ": expected an integer");
        if (v->is_number_unsigned()) {
            const auto u = v->get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
                throw ConfigError(key_path(key), key_path(key) + ": value out of range");
            }
            out = static_cast<Int>(u);
            return;
        }
        const auto i = v->get<long long>();
        if (i < lo) throw ConfigError(key_path(key), key_path(key) + ": " + requirement);
        out = static_cast<Int>(i);
    }

    void boolean(const char* key, bool& out) const {
        const json* v = find(key);
        if (v == nullptr) return;
        if (!v->is_boolean()) throw ConfigError(key_path(key), key_path(key) + ": expected true or false");
        out = v->get<bool>();
    }

    void string(const char* key, std::string& out) const {
        const json* v = find(key);
        if (v == nullptr) return;
        if (!v->is_string()) throw ConfigError(key_path(key), key_path(key) + ": expected a string");
        out = v->get<std::string>();
    }

    void path(const char* key, fs::path& out, const fs::path& base) const {
        std::string s;
        string(key, s);
        if (s.empty()) return;
        const fs::path p(s);
        out = p.is_absolute() || base.empty() ? p : base / p;
    }

    Section child(const char* key) const {
        static const json kEmpty = json::object();
        const json* v = find(key);
        return Section(v == nullptr ? kEmpty : *v, key_path(key));
    }

private:
    const json& doc_;
    std::string name_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto non_negative = [](double v) { return v >= 0.0; };

}  // namespace

// ---------------------------------------------------------------------------
// Cameras
// ---------------------------------------------------------------------------

ppm::CameraSet parse_cameras(const json& doc) {
    if (!doc.is_array()) throw ParseError("cameras: expected a JSON array of {id, center} objects");
    ppm::CameraSet cams;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& entry = doc[i];
        const std::string where = "cameras[" + std::to_string(i) + "]";
        if (!entry.is_object()) throw ParseError(where + ": expected an object");
        auto id = entry.find("id");
        auto center = entry.find("center");
        if (id == entry.end() || !id->is_string()) throw ParseError(where + ".id: expected a string");
        if (center == entry.end() || !center->is_array() || center->size() != 3) {
            throw ParseError(where + ".center: expected an array of 3 numbers");
        }
        ppm::Vec3 c;
        for (int a = 0; a < 3; ++a) {
            const json& v = (*center)[static_cast<std::size_t>(a)];
            if (!v.is_number()) throw ParseError(where + ".center: expected an array of 3 numbers");
            c(a) = v.get<double>();
        }
        const std::string name = id->get<std::string>();
        if (!c.allFinite()) throw ParseError(where + ".center: non-finite coordinate for camera '" + name + "'");
        if (!seen.insert(name).second) throw ParseError(where + ".id: duplicate camera id '" + name + "'");
        cams.ids.push_back(name);
        cams.centers.push_back(c);
    }
    if (cams.ids.empty()) throw ParseError("cameras: file lists no cameras");
    return cams;
}

ppm::CameraSet read_cameras(const fs::path& path) {
    try {
        return parse_cameras(read_json(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

json cameras_to_json(const ppm::CameraSet& cams) {
    json out = json::array();
    for (std::size_t i = 0; i < cams.size(); ++i) {
        out.push_back({{"id", cams.ids[i]}, {"center", {cams.centers[i].x(), cams.centers[i].y(), cams.centers[i].z()}}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Correction map rasters
// ---------------------------------------------------------------------------

std::string encode_maps(const CorrectionMaps& maps) {
    maps.validate();
    const auto w = maps.width();
    const auto h = maps.height();
    if (w > std::numeric_limits<std::uint32_t>::max() || h > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidArgument("maps: extent exceeds 32-bit header fields");
    }
    std::string out(kMapsMagic, sizeof(kMapsMagic));
    put_u32(out, static_cast<std::uint32_t>(w));
    put_u32(out, static_cast<std::uint32_t>(h));
    out.reserve(out.size() + 16 * w * h);
    for (double v : maps.mul.data()) put_f32(out, v);
    for (double v : maps.add.data()) put_f32(out, v);
    return out;
}

CorrectionMaps decode_maps(const std::string& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMapsMagic, sizeof(kMapsMagic)) != 0) {
        throw ParseError("maps: missing NKGSMAPS header");
    }
    const std::size_t w = get_u32(bytes, 8);
    const std::size_t h = get_u32(bytes, 12);
    if (w == 0 || h == 0) throw ParseError("maps: zero extent in header");
    const std::size_t expected = 16 + 4 * 4 * w * h;
    if (bytes.size() != expected) {
        throw ParseError("maps: expected " + std::to_string(expected) + " bytes for " + std::to_string(w) + "x" +
                         std::to_string(h) + ", found " + std::to_string(bytes.size()));
    }
    CorrectionMaps maps{ImageBuffer(w, h, 1), ImageBuffer(w, h, 3)};
    std::size_t offset = 16;
    for (double& v : maps.mul.data()) {
        v = get_f32(bytes, offset);
        offset += 4;
    }
    for (double& v : maps.add.data()) {
        v = get_f32(bytes, offset);
        offset += 4;
    }
    try {
        maps.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("maps: ") + e.what());
    }
    return maps;
}

void write_maps(const CorrectionMaps& maps, const fs::path& path) {
    write_text(path, encode_maps(maps));
}

CorrectionMaps read_maps(const fs::path& path) {
    try {
        return decode_maps(read_file_bytes(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_maps_preview(const CorrectionMaps& maps, const fs::path& prefix) {
    ImageBuffer mul = maps.mul;
    for (double& v : mul.data()) v *= 0.5;
    ImageBuffer add = maps.add;
    for (double& v : add.data()) v += 0.5;
    write_png(mul, fs::path(prefix.string() + "_mul.png"), 8);
    write_png(add, fs::path(prefix.string() + "_add.png"), 8);
}

// ---------------------------------------------------------------------------
// Pipeline configuration
// ---------------------------------------------------------------------------

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
    PipelineConfig cfg;
    const Section root(doc, "");
    root.restrict_to({"naka", "blur", "loss", "fit", "prune", "alignment", "paths"});

    {
        const Section s = root.child("naka");
        s.restrict_to({"sigma", "exponent"});
        s.number("sigma", cfg.naka.sigma, positive, "must be > 0");
        s.number("exponent", cfg.naka.exponent, positive, "must be > 0");
    }
    {
        const Section s = root.child("blur");
        s.restrict_to({"sigma", "radius", "boundary"});
        s.number("sigma", cfg.blur.sigma, positive, "must be > 0");
        s.integer("radius", cfg.blur.radius, 0, "must be >= 0 (0 selects ceil(3 sigma))");
        std::string boundary;
        s.string("boundary", boundary);
        if (boundary == "reflect") {
            cfg.blur.boundary = Boundary::Reflect;
        } else if (boundary == "replicate") {
            cfg.blur.boundary = Boundary::Replicate;
        } else if (!boundary.empty()) {
            throw ConfigError(s.key_path("boundary"), s.key_path("boundary") + ": expected 'reflect' or 'replicate'");
        }
    }
    {
        const Section s = root.child("loss");
        s.restrict_to({"w_rgb", "w_chroma", "w_ssim", "w_edge", "w_feat", "w_reg", "w_mse", "w_gray", "w_bright",
                       "charbonnier_eps", "mul_range"});
        s.number("w_rgb", cfg.loss.rgb, non_negative, "must be >= 0");
        s.number("w_chroma", cfg.loss.chroma, non_negative, "must be >= 0");
        s.number("w_ssim", cfg.loss.ssim, non_negative, "must be >= 0");
        s.number("w_edge", cfg.loss.edge, non_negative, "must be >= 0");
        s.number("w_feat", cfg.loss.feat, [](double v) { return v == 0.0; },
                 "must be 0 (the perceptual term is not available)");
        s.number("w_reg", cfg.loss.reg, non_negative, "must be >= 0");
        s.number("w_mse", cfg.loss.mse, non_negative, "must be >= 0");
        s.number("w_gray", cfg.loss.gray, non_negative, "must be >= 0");
        s.number("w_bright", cfg.loss.bright, non_negative, "must be >= 0");
        s.number("charbonnier_eps", cfg.loss.charbonnier_eps, positive, "must be > 0");
        if (const json* range = s.find("mul_range")) {
            const std::string key = s.key_path("mul_range");
            if (!range->is_array() || range->size() != 2 || !(*range)[0].is_number() || !(*range)[1].is_number()) {
                throw ConfigError(key, key + ": expected [lo, hi]");
            }
            const double lo = (*range)[0].get<double>();
            const double hi = (*range)[1].get<double>();
            if (!(lo <= hi)) throw ConfigError(key, key + ": lower bound exceeds upper bound");
            cfg.loss.mul_lo = lo;
            cfg.loss.mul_hi = hi;
        }
    }
    {
        const Section s = root.child("fit");
        s.restrict_to({"grid_w", "grid_h", "iterations", "step_size", "seed"});
        s.integer("grid_w", cfg.fit.grid_w, 1, "must be >= 1");
        s.integer("grid_h", cfg.fit.grid_h, 1, "must be >= 1");
        s.integer("iterations", cfg.fit.iterations, 0, "must be >= 0");
        s.number("step_size", cfg.fit.step_size, positive, "must be > 0");
        s.integer("seed", cfg.fit.seed, 0, "must be >= 0");
        if (cfg.fit.grid_w < 1) throw ConfigError("fit.grid_w", "fit.grid_w: must be >= 1");
        if (cfg.fit.grid_h < 1) throw ConfigError("fit.grid_h", "fit.grid_h: must be >= 1");
    }
    {
        const Section s = root.child("prune");
        s.restrict_to({"tau0", "beta", "epsilon", "iterations", "min_keep_fraction", "seed", "voxel_size",
                       "recompute_nn"});
        s.number("tau0", cfg.prune.tau0, positive, "must be > 0");
        s.number("beta", cfg.prune.beta, [](double) { return true; }, "must be finite");
        s.number("epsilon", cfg.prune.epsilon, non_negative, "must be >= 0");
        s.integer("iterations", cfg.prune.iterations, 0, "must be >= 0");
        s.number("min_keep_fraction", cfg.prune.min_keep_fraction, [](double v) { return v > 0.0 && v <= 1.0; },
                 "must lie in (0, 1]");
        s.integer("seed", cfg.prune.seed, 0, "must be >= 0");
        s.number("voxel_size", cfg.prune.voxel_size, positive, "must be > 0");
        s.boolean("recompute_nn", cfg.prune.recompute_nn);
    }
    {
        std::string mode;
        root.string("alignment", mode);
        if (!mode.empty()) {
            try {
                cfg.alignment = ppm::parse_alignment_mode(mode);
            } catch (const InvalidArgument& e) {
                throw ConfigError("alignment", std::string("alignment: ") + e.what());
            }
        }
    }
    {
        const Section s = root.child("paths");
        s.restrict_to({"input_ply", "src_cameras", "dst_cameras", "output_ply", "report"});
        s.path("input_ply", cfg.paths.input_ply, base_dir);
        s.path("src_cameras", cfg.paths.src_cameras, base_dir);
        s.path("dst_cameras", cfg.paths.dst_cameras, base_dir);
        s.path("output_ply", cfg.paths.output_ply, base_dir);
        s.path("report", cfg.paths.report, base_dir);
    }
    return cfg;
}

PipelineConfig read_config(const fs::path& path) {
    return parse_config(read_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Reports and plain files
// ---------------------------------------------------------------------------

json prune_report_to_json(const ppm::PruneReport& report) {
    json iterations = json::array();
    for (const auto& it : report.iterations) {
        iterations.push_back({{"tau_applied", it.tau_applied},
                              {"points_before", it.points_before},
                              {"points_after", it.points_after},
                              {"rolled_back", it.rolled_back},
                              {"expected_survivors", it.expected_survivors}});
    }
    return {{"initial_count", report.initial_count}, {"final_count", report.final_count}, {"iterations", iterations}};
}

json loss_report_to_json(const LossReport& r) {
    return {{"rgb", r.rgb},     {"chroma", r.chroma}, {"ssim_loss", r.ssim}, {"edge", r.edge},
            {"feat", r.feat},   {"feat_excluded", r.feat_excluded},           {"reg", r.reg},
            {"mse", r.mse},     {"gray", r.gray},     {"bright", r.bright},  {"total", r.total}};
}

json read_json(const fs::path& path) {
    const std::string text = read_file_bytes(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Direction::Write, "cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError(IoError::Direction::Write, "failed writing '" + path.string() + "'");
}

}  // namespace nakags::io
