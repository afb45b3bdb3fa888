#pragma once

#include "nakags/cli.hpp"
#include "nakags/imagecore.hpp"
#include "nakags/ppm.hpp"

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("nakags_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline nakags::ImageBuffer random_image(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed,
                                        double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    nakags::ImageBuffer img(w, h, c);
    for (double& v : img.data()) v = u(rng);
    return img;
}

inline std::vector<nakags::ppm::Vec3> random_points(std::size_t n, std::uint64_t seed, double extent = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-extent, extent);
    std::vector<nakags::ppm::Vec3> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    return pts;
}

/// Dense cluster (spacing well below the default pruning threshold) inside
/// a sparse halo. Cluster points come first.
inline nakags::ppm::PointCloud cluster_halo_cloud(std::uint64_t seed, std::size_t cluster = 600,
                                                  std::size_t halo = 400) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dense(-0.01, 0.01);
    std::uniform_real_distribution<double> sparse(-1.0, 1.0);
    nakags::ppm::PointCloud cloud;
    for (std::size_t i = 0; i < cluster; ++i) cloud.positions.emplace_back(dense(rng), dense(rng), dense(rng));
    for (std::size_t i = 0; i < halo; ++i) cloud.positions.emplace_back(sparse(rng), sparse(rng), sparse(rng));
    return cloud;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = nakags::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

inline fs::path mini_scene() { return fs::path(NAKAGS_TEST_DATA) / "mini_scene"; }

}  // namespace testutil
