#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nakags::ppm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Point positions with optional per-point colors (RGB in [0, 1]) and unit
/// normals. An attribute is absent when its vector is empty.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;
    std::vector<Vec3> normals;

    std::size_t size() const noexcept { return positions.size(); }
    bool empty() const noexcept { return positions.empty(); }
    bool has_colors() const noexcept { return !colors.empty(); }
    bool has_normals() const noexcept { return !normals.empty(); }

    /// Throws InvalidArgument on length mismatch, non-finite positions, or
    /// normals that are not unit length within 1e-4.
    void validate() const;

    /// Points at the given indices, in that order.
    PointCloud subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

struct CameraSet {
    std::vector<std::string> ids;
    std::vector<Vec3> centers;

    std::size_t size() const noexcept { return ids.size(); }
    void validate() const;
};

/// p -> scale * rotation * p + translation.
struct Transform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Transform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
    Transform inverse() const;
    void validate() const;
};

enum class AlignmentMode { Sim3, Rigid, None };

AlignmentMode parse_alignment_mode(std::string_view text);
std::string_view to_string(AlignmentMode mode);

/// Closed-form least-squares (Umeyama) fit of dst ~ s R src + t over
/// cameras matched by id. Rigid mode fixes s = 1; None returns identity
/// without inspecting the inputs.
///
/// Throws InvalidArgument when the id sets differ or fewer than three pairs
/// exist, and DegenerateInput when either set of centers is (nearly) collinear.
Transform estimate_alignment(const CameraSet& src, const CameraSet& dst, AlignmentMode mode);

/// Root-mean-square residual of `t` over id-matched camera pairs.
double alignment_rms(const CameraSet& src, const CameraSet& dst, const Transform& t);

/// Positions are fully transformed, normals only rotated, colors untouched.
PointCloud apply_transform(const PointCloud& cloud, const Transform& t);

/// One point per occupied voxel floor(p / voxel_size), at the mean of its
/// members' attributes (normals renormalized). Output is ordered by voxel
/// index, lexicographically.
PointCloud voxel_pool(const PointCloud& cloud, double voxel_size);

/// Exact Euclidean distance from each point to its nearest other point.
std::vector<double> nearest_neighbor_distances(std::span<const Vec3> points, std::size_t threads = 1);
std::vector<double> nearest_neighbor_distances(const PointCloud& cloud, std::size_t threads = 1);

/// min(1, d_min / (tau + epsilon)).
double keep_probability(double d_min, double tau, double epsilon);

/// tau * exp(beta * m_t / m_0).
double threshold_update(double tau, double beta, std::size_t m_t, std::size_t m_0);

struct PruneConfig {
    double tau0 = 0.005;
    double beta = 0.01;
    double epsilon = 1e-8;
    int iterations = 6;
    double min_keep_fraction = 0.3;
    std::uint64_t seed = 0;
    double voxel_size = 0.01;
    bool recompute_nn = true;

    void validate() const;
};

struct PruneIteration {
    double tau_applied = 0.0;
    std::size_t points_before = 0;
    std::size_t points_after = 0;
    bool rolled_back = false;
    /// Sum of keep probabilities, i.e. the expected survivor count.
    double expected_survivors = 0.0;
};

struct PruneReport {
    std::size_t initial_count = 0;
    std::size_t final_count = 0;
    std::vector<PruneIteration> iterations;
};

struct PruneResult {
    PointCloud cloud;
    PruneReport report;
    /// Indices into the input cloud of the surviving points, ascending.
    std::vector<std::size_t> kept;
};

/// Smallest survivor count the retention floor allows for m_0 candidates.
std::size_t retention_floor(double min_keep_fraction, std::size_t m_0);

/// Distance-adaptive progressive pruning with a retention floor. An
/// iteration that would drop below the floor is undone and ends pruning.
/// The keep draw for point k at iteration t depends only on (seed, k, t).
PruneResult progressive_prune(const PointCloud& cloud, const PruneConfig& cfg, std::size_t threads = 1);

/// Centroid to the origin, farthest point at distance 1. Throws
/// DegenerateInput if every point coincides.
struct NormalizedScene {
    PointCloud cloud;
    Transform transform;
};
NormalizedScene normalize_scene(const PointCloud& cloud);

struct PpmResult {
    PointCloud cloud;
    PruneReport report;
    Transform alignment;
    std::size_t pooled_count = 0;
};

/// Alignment, then voxel pooling, then progressive pruning.
PpmResult run_ppm(const PointCloud& cloud, const CameraSet& src, const CameraSet& dst, AlignmentMode mode,
                  const PruneConfig& cfg, std::size_t threads = 1);

}  // namespace nakags::ppm
