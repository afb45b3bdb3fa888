#include "nakags/fit.hpp"

#include "nakags/counter_rng.hpp"
#include "nakags/errors.hpp"
#include "nakags/naka.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nakags {

namespace {

constexpr double kStepGrow = 1.25;
constexpr double kStepShrink = 0.6;
constexpr double kMaxStepFactor = 4.0;
constexpr double kMinStepFactor = 1e-3;
// Parabolic step is limited to this many probe widths.
constexpr double kMaxParabolicReach = 3.0;

struct Level {
    std::size_t w;
    std::size_t h;
};

// 1x1, 2x2, 4x4, ... up to the grid size; each axis saturates independently.
std::vector<Level> pyramid(std::size_t grid_w, std::size_t grid_h) {
    std::vector<Level> levels;
    std::size_t s = 1;
    while (true) {
        const Level l{std::min(s, grid_w), std::min(s, grid_h)};
        levels.push_back(l);
        if (l.w == grid_w && l.h == grid_h) break;
        s *= 2;
    }
    return levels;
}

// Random +/-1 field at one pyramid level, upsampled to the grid.
CorrectionMaps draw_direction(const Level& level, std::size_t grid_w, std::size_t grid_h,
                              std::uint64_t seed, std::uint64_t iteration) {
    CorrectionMaps coarse{ImageBuffer(level.w, level.h, 1), ImageBuffer(level.w, level.h, 3)};
    std::uint64_t key = 0;
    auto sign = [&] { return (counter_hash(seed, key++, iteration) & 1ULL) ? 1.0 : -1.0; };
    for (double& v : coarse.mul.data()) v = sign();
    for (double& v : coarse.add.data()) v = sign();
    return upsample_maps(coarse, grid_w, grid_h);
}

CorrectionMaps step_along(const CorrectionMaps& base, const CorrectionMaps& dir, double alpha) {
    CorrectionMaps out = base;
    for (std::size_t i = 0; i < out.mul.size(); ++i) {
        out.mul.data()[i] = std::max(0.0, out.mul.data()[i] + alpha * dir.mul.data()[i]);
    }
    for (std::size_t i = 0; i < out.add.size(); ++i) out.add.data()[i] += alpha * dir.add.data()[i];
    return out;
}

class Problem {
public:
    Problem(const ImageBuffer& naka, const ImageBuffer& gt, const FitConfig& cfg, const LossWeights& weights)
        : bands_(frequency_decompose(naka, cfg.blur)), objective_(gt, weights),
          width_(naka.width()), height_(naka.height()) {}

    struct Evaluation {
        CorrectionMaps full;
        LossReport report;
    };

    Evaluation evaluate(const CorrectionMaps& coarse) const {
        Evaluation e{upsample_maps(coarse, width_, height_), {}};
        const ImageBuffer pred = apply_correction(bands_.low_freq, bands_.high_freq, e.full);
        e.report = objective_.evaluate(pred, e.full);
        return e;
    }

private:
    FrequencyPair bands_;
    ObjectiveEvaluator objective_;
    std::size_t width_;
    std::size_t height_;
};

}  // namespace

void FitConfig::validate() const {
    if (grid_w < 1 || grid_h < 1) throw InvalidArgument("fit: grid dimensions must be >= 1");
    if (iterations < 0) throw InvalidArgument("fit: iterations must be >= 0");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("fit: step_size must be > 0");
    blur.validate();
}

FitResult fit_correction(const ImageBuffer& low, const ImageBuffer& naka, const ImageBuffer& gt,
                         const FitConfig& cfg, const LossWeights& weights) {
    cfg.validate();
    weights.validate();
    if (naka.channels() != 3) throw ShapeMismatch("fit_correction: images must have 3 channels");
    if (!low.same_shape(naka) || !gt.same_shape(naka)) {
        throw ShapeMismatch("fit_correction: low, naka and gt must share one shape");
    }

    const std::size_t gw = std::min(cfg.grid_w, naka.width());
    const std::size_t gh = std::min(cfg.grid_h, naka.height());
    const Problem problem(naka, gt, cfg, weights);
    const auto levels = pyramid(gw, gh);

    FitResult result;
    result.coarse = identity_maps(gw, gh);
    auto current = problem.evaluate(result.coarse);
    result.initial_report = current.report;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
    result.loss_trace.push_back(current.report.total);

    double h = cfg.step_size;
    const double h_max = cfg.step_size * kMaxStepFactor;
    const double h_min = cfg.step_size * kMinStepFactor;

    for (int it = 0; it < cfg.iterations; ++it) {
        const auto t = static_cast<std::uint64_t>(it);
        const CorrectionMaps dir = draw_direction(levels[t % levels.size()], gw, gh, cfg.seed, t);

        const double f0 = current.report.total;
        CorrectionMaps best_coarse;
        Problem::Evaluation best;
        double best_loss = f0;
        auto consider = [&](CorrectionMaps cand) {
            auto e = problem.evaluate(cand);
            const double loss = e.report.total;
            if (loss < best_loss) {
                best_loss = loss;
                best_coarse = std::move(cand);
                best = std::move(e);
            }
            return loss;
        };

        const double fp = consider(step_along(result.coarse, dir, h));
        const double fm = consider(step_along(result.coarse, dir, -h));

        // Minimizer of the parabola through (-h, fm), (0, f0), (h, fp).
        const double curvature = fp - 2.0 * f0 + fm;
        if (curvature > 0.0) {
            double alpha = h * (fm - fp) / (2.0 * curvature);
            alpha = std::clamp(alpha, -kMaxParabolicReach * h, kMaxParabolicReach * h);
            if (alpha != 0.0 && alpha != h && alpha != -h) consider(step_along(result.coarse, dir, alpha));
        }

        if (best_loss < f0) {
            result.coarse = std::move(best_coarse);
            current = std::move(best);
            ++result.accepted_steps;
            h = std::min(h * kStepGrow, h_max);
        } else {
            h = std::max(h * kStepShrink, h_min);
        }
        result.loss_trace.push_back(current.report.total);
    }

    result.maps = std::move(current.full);
    result.final_report = current.report;
    return result;
}

}  // namespace nakags
