#include "nakags/ppm.hpp"

#include "nakags/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace nakags::ppm {

namespace {

// Relative threshold on the second singular value of a centered point set.
constexpr double kRankTolerance = 1e-10;

bool finite(const Vec3& v) { return v.allFinite(); }

struct MatchedPairs {
    Eigen::Matrix3Xd src;
    Eigen::Matrix3Xd dst;
};

MatchedPairs match_by_id(const CameraSet& src, const CameraSet& dst) {
    src.validate();
    dst.validate();
    if (src.size() != dst.size()) {
        throw InvalidArgument("alignment: camera sets differ in size (" + std::to_string(src.size()) + " vs " +
                              std::to_string(dst.size()) + ")");
    }
    std::unordered_map<std::string, std::size_t> dst_index;
    for (std::size_t i = 0; i < dst.size(); ++i) dst_index.emplace(dst.ids[i], i);

    MatchedPairs pairs{Eigen::Matrix3Xd(3, src.size()), Eigen::Matrix3Xd(3, src.size())};
    for (std::size_t i = 0; i < src.size(); ++i) {
        auto it = dst_index.find(src.ids[i]);
        if (it == dst_index.end()) {
            throw InvalidArgument("alignment: camera id '" + src.ids[i] + "' missing from target set");
        }
        pairs.src.col(static_cast<Eigen::Index>(i)) = src.centers[i];
        pairs.dst.col(static_cast<Eigen::Index>(i)) = dst.centers[it->second];
    }
    return pairs;
}

void require_spread(const Eigen::Matrix3Xd& centered, const char* which) {
    const Mat3 cov = centered * centered.transpose();
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Mat3>(cov).singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= kRankTolerance * sv(0)) {
        throw DegenerateInput(std::string("alignment: ") + which +
                              " camera centers are collinear or coincident");
    }
}

// voxel key ordering for deterministic output
using VoxelKey = std::array<std::int64_t, 3>;

VoxelKey voxel_of(const Vec3& p, double voxel_size) {
    return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
            static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
            static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

}  // namespace

void PointCloud::validate() const {
    if (has_colors() && colors.size() != positions.size()) {
        throw InvalidArgument("point cloud: color count does not match position count");
    }
    if (has_normals() && normals.size() != positions.size()) {
        throw InvalidArgument("point cloud: normal count does not match position count");
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!finite(positions[i])) throw InvalidArgument("point cloud: non-finite position at index " + std::to_string(i));
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!finite(normals[i]) || std::abs(normals[i].norm() - 1.0) > 1e-4) {
            throw InvalidArgument("point cloud: normal at index " + std::to_string(i) + " is not unit length");
        }
    }
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
    PointCloud out;
    out.positions.reserve(indices.size());
    for (auto i : indices) out.positions.push_back(positions[i]);
    if (has_colors()) {
        out.colors.reserve(indices.size());
        for (auto i : indices) out.colors.push_back(colors[i]);
    }
    if (has_normals()) {
        out.normals.reserve(indices.size());
        for (auto i : indices) out.normals.push_back(normals[i]);
    }
    return out;
}

void CameraSet::validate() const {
    if (ids.empty()) throw InvalidArgument("camera set is empty");
    if (ids.size() != centers.size()) throw InvalidArgument("camera set: id and center counts differ");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!seen.insert(ids[i]).second) throw InvalidArgument("camera set: duplicate id '" + ids[i] + "'");
        if (!finite(centers[i])) throw InvalidArgument("camera set: non-finite center for id '" + ids[i] + "'");
    }
}

Transform Transform::inverse() const {
    Transform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.scale * (inv.rotation * translation));
    return inv;
}

void Transform::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("transform scale must be > 0");
    if (!rotation.allFinite() || !translation.allFinite()) throw InvalidArgument("transform is not finite");
    if (!(rotation.transpose() * rotation).isApprox(Mat3::Identity(), 1e-9) ||
        std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw InvalidArgument("transform rotation is not a proper rotation");
    }
}

AlignmentMode parse_alignment_mode(std::string_view text) {
    if (text == "sim3") return AlignmentMode::Sim3;
    if (text == "rigid") return AlignmentMode::Rigid;
    if (text == "none") return AlignmentMode::None;
    throw InvalidArgument("unknown alignment mode '" + std::string(text) + "' (expected sim3, rigid or none)");
}

std::string_view to_string(AlignmentMode mode) {
    switch (mode) {
        case AlignmentMode::Sim3: return "sim3";
        case AlignmentMode::Rigid: return "rigid";
        case AlignmentMode::None: return "none";
    }
    return "none";
}

Transform estimate_alignment(const CameraSet& src, const CameraSet& dst, AlignmentMode mode) {
    if (mode == AlignmentMode::None) return Transform::identity();

    const MatchedPairs pairs = match_by_id(src, dst);
    const auto n = pairs.src.cols();
    if (n < 3) {
        throw InvalidArgument("alignment: need at least 3 camera pairs, got " + std::to_string(n));
    }

    const Vec3 mean_src = pairs.src.rowwise().mean();
    const Vec3 mean_dst = pairs.dst.rowwise().mean();
    const Eigen::Matrix3Xd xs = pairs.src.colwise() - mean_src;
    const Eigen::Matrix3Xd xd = pairs.dst.colwise() - mean_dst;
    require_spread(xs, "source");
    require_spread(xd, "target");

    const double inv_n = 1.0 / static_cast<double>(n);
    const Mat3 cross = inv_n * xd * xs.transpose();
    const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);

    Vec3 signs = Vec3::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) signs(2) = -1.0;

    Transform t;
    t.rotation = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
    if (mode == AlignmentMode::Sim3) {
        const double var_src = inv_n * xs.squaredNorm();
        t.scale = svd.singularValues().dot(signs) / var_src;
    }
    t.translation = mean_dst - t.scale * (t.rotation * mean_src);
    return t;
}

double alignment_rms(const CameraSet& src, const CameraSet& dst, const Transform& t) {
    const MatchedPairs pairs = match_by_id(src, dst);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < pairs.src.cols(); ++i) {
        sse += (pairs.dst.col(i) - t.apply(pairs.src.col(i))).squaredNorm();
    }
    return std::sqrt(sse / static_cast<double>(pairs.src.cols()));
}

PointCloud apply_transform(const PointCloud& cloud, const Transform& t) {
    PointCloud out = cloud;
    for (auto& p : out.positions) p = t.apply(p);
    for (auto& nrm : out.normals) nrm = t.rotation * nrm;
    return out;
}

PointCloud voxel_pool(const PointCloud& cloud, double voxel_size) {
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
        throw InvalidArgument("voxel_pool: voxel size must be > 0");
    }
    cloud.validate();
    const std::size_t n = cloud.size();
    std::vector<VoxelKey> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = voxel_of(cloud.positions[i], voxel_size);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

    PointCloud out;
    for (std::size_t begin = 0; begin < n;) {
        std::size_t end = begin + 1;
        while (end < n && keys[order[end]] == keys[order[begin]]) ++end;
        const auto count = static_cast<double>(end - begin);

        Vec3 pos = Vec3::Zero();
        Vec3 col = Vec3::Zero();
        Vec3 nrm = Vec3::Zero();
        for (std::size_t k = begin; k < end; ++k) {
            const std::size_t i = order[k];
            pos += cloud.positions[i];
            if (cloud.has_colors()) col += cloud.colors[i];
            if (cloud.has_normals()) nrm += cloud.normals[i];
        }
        out.positions.push_back(pos / count);
        if (cloud.has_colors()) out.colors.push_back(col / count);
        if (cloud.has_normals()) {
            const double len = nrm.norm();
            // Opposing normals cancel; keep the first member's normal then.
            out.normals.push_back(len > 1e-12 ? Vec3(nrm / len) : cloud.normals[order[begin]]);
        }
        begin = end;
    }
    return out;
}

NormalizedScene normalize_scene(const PointCloud& cloud) {
    if (cloud.empty()) throw InvalidArgument("normalize_scene: empty cloud");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : cloud.positions) centroid += p;
    centroid /= static_cast<double>(cloud.size());
    double radius = 0.0;
    for (const auto& p : cloud.positions) radius = std::max(radius, (p - centroid).norm());
    if (!(radius > 0.0)) throw DegenerateInput("normalize_scene: all points coincide");

    Transform t;
    t.scale = 1.0 / radius;
    t.translation = -t.scale * centroid;
    return {apply_transform(cloud, t), t};
}

PpmResult run_ppm(const PointCloud& cloud, const CameraSet& src, const CameraSet& dst, AlignmentMode mode,
                  const PruneConfig& cfg, std::size_t threads) {
    cfg.validate();
    PpmResult result;
    result.alignment = estimate_alignment(src, dst, mode);
    const PointCloud aligned = mode == AlignmentMode::None ? cloud : apply_transform(cloud, result.alignment);
    const PointCloud pooled = voxel_pool(aligned, cfg.voxel_size);
    result.pooled_count = pooled.size();
    PruneResult pruned = progressive_prune(pooled, cfg, threads);
    result.cloud = std::move(pruned.cloud);
    result.report = std::move(pruned.report);
    return result;
}

}  // namespace nakags::ppm
