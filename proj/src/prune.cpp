#include "nakags/counter_rng.hpp"
#include "nakags/errors.hpp"
#include "nakags/parallel.hpp"
#include "nakags/ppm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nakags::ppm {

namespace {

double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

/// Static 3D kd-tree over an index permutation; exact nearest-other query.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points) : points_(points), index_(points.size()) {
        std::iota(index_.begin(), index_.end(), std::size_t{0});
        if (!index_.empty()) root_ = build(0, index_.size());
    }

    /// Squared distance from points[query] to the nearest point with a
    /// different index.
    double nearest_other_sq(std::size_t query) const {
        double best = std::numeric_limits<double>::infinity();
        search(root_, query, best);
        return best;
    }

private:
    static constexpr std::size_t kLeafSize = 8;

    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        int axis = -1;  // -1 for leaves
        double split = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;

        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[index_[i]]);
            hi = hi.cwiseMax(points_[index_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        if (hi(axis) == lo(axis)) return id;  // all coincident: keep as leaf

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                         index_.begin() + static_cast<std::ptrdiff_t>(mid),
                         index_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return points_[a](axis) < points_[b](axis); });
        const double split = points_[index_[mid]](axis);
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(std::size_t node_id, std::size_t query, double& best) const {
        const Node& node = nodes_[node_id];
        const Vec3& q = points_[query];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t j = index_[i];
                if (j == query) continue;
                best = std::min(best, squared_distance(q, points_[j]));
            }
            return;
        }
        // Left holds coordinates <= split, right holds >= split.
        const double diff = q(node.axis) - node.split;
        const std::size_t near = diff <= 0.0 ? node.left : node.right;
        const std::size_t far = diff <= 0.0 ? node.right : node.left;
        search(near, query, best);
        if (diff * diff <= best) search(far, query, best);
    }

    std::span<const Vec3> points_;
    std::vector<std::size_t> index_;
    std::vector<Node> nodes_;
    std::size_t root_ = 0;
};

}  // namespace

std::vector<double> nearest_neighbor_distances(std::span<const Vec3> points, std::size_t threads) {
    if (points.size() < 2) {
        throw InvalidArgument("nearest_neighbor_distances: need at least 2 points, got " +
                              std::to_string(points.size()));
    }
    const KdTree tree(points);
    std::vector<double> out(points.size());
    parallel_for(points.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = std::sqrt(tree.nearest_other_sq(i));
    });
    return out;
}

std::vector<double> nearest_neighbor_distances(const PointCloud& cloud, std::size_t threads) {
    return nearest_neighbor_distances(std::span<const Vec3>(cloud.positions), threads);
}

double keep_probability(double d_min, double tau, double epsilon) {
    if (!(d_min >= 0.0)) throw InvalidArgument("keep_probability: d_min must be >= 0");
    if (!(tau > 0.0)) throw InvalidArgument("keep_probability: tau must be > 0");
    if (!(epsilon >= 0.0)) throw InvalidArgument("keep_probability: epsilon must be >= 0");
    return std::min(1.0, d_min / (tau + epsilon));
}

double threshold_update(double tau, double beta, std::size_t m_t, std::size_t m_0) {
    if (m_0 == 0) throw InvalidArgument("threshold_update: m_0 must be >= 1");
    if (m_t > m_0) throw InvalidArgument("threshold_update: m_t exceeds m_0");
    return tau * std::exp(beta * static_cast<double>(m_t) / static_cast<double>(m_0));
}

void PruneConfig::validate() const {
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw InvalidArgument("prune.tau0 must be > 0");
    if (!std::isfinite(beta)) throw InvalidArgument("prune.beta must be finite");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("prune.epsilon must be >= 0");
    if (iterations < 0) throw InvalidArgument("prune.iterations must be >= 0");
    if (!(min_keep_fraction > 0.0 && min_keep_fraction <= 1.0)) {
        throw InvalidArgument("prune.min_keep_fraction must lie in (0, 1]");
    }
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw InvalidArgument("prune.voxel_size must be > 0");
}

std::size_t retention_floor(double min_keep_fraction, std::size_t m_0) {
    return static_cast<std::size_t>(std::ceil(min_keep_fraction * static_cast<double>(m_0)));
}

PruneResult progressive_prune(const PointCloud& cloud, const PruneConfig& cfg, std::size_t threads) {
    cfg.validate();
    cloud.validate();

    PruneResult result;
    const std::size_t m0 = cloud.size();
    result.report.initial_count = m0;
    result.kept.resize(m0);
    std::iota(result.kept.begin(), result.kept.end(), std::size_t{0});

    if (m0 < 2) {
        result.cloud = cloud;
        result.report.final_count = m0;
        return result;
    }

    const std::size_t floor_count = retention_floor(cfg.min_keep_fraction, m0);
    std::vector<double> initial_dist;
    if (!cfg.recompute_nn) initial_dist = nearest_neighbor_distances(cloud, threads);

    double tau = cfg.tau0;
    std::vector<Vec3> current_positions;
    for (int it = 0; it < cfg.iterations; ++it) {
        const std::vector<std::size_t>& alive = result.kept;
        if (alive.size() < 2) break;

        std::vector<double> dist;
        if (cfg.recompute_nn) {
            current_positions.clear();
            for (auto k : alive) current_positions.push_back(cloud.positions[k]);
            dist = nearest_neighbor_distances(current_positions, threads);
        } else {
            dist.reserve(alive.size());
            for (auto k : alive) dist.push_back(initial_dist[k]);
        }

        std::vector<double> prob(alive.size());
        std::vector<char> keep(alive.size());
        parallel_for(alive.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                prob[i] = keep_probability(dist[i], tau, cfg.epsilon);
                const double u = counter_uniform(cfg.seed, alive[i], static_cast<std::uint64_t>(it));
                keep[i] = u < prob[i] ? 1 : 0;
            }
        });

        PruneIteration record;
        record.tau_applied = tau;
        record.points_before = alive.size();
        for (double p : prob) record.expected_survivors += p;

        std::vector<std::size_t> survivors;
        survivors.reserve(alive.size());
        for (std::size_t i = 0; i < alive.size(); ++i) {
            if (keep[i]) survivors.push_back(alive[i]);
        }

        if (survivors.size() < floor_count) {
            record.points_after = record.points_before;
            record.rolled_back = true;
            result.report.iterations.push_back(record);
            break;
        }
        record.points_after = survivors.size();
        result.report.iterations.push_back(record);
        result.kept = std::move(survivors);
        tau = threshold_update(tau, cfg.beta, result.kept.size(), m0);
    }

    result.cloud = cloud.subset(result.kept);
    result.report.final_count = result.kept.size();
    return result;
}

}  // namespace nakags::ppm
