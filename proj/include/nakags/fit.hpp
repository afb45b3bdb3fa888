#pragma once

#include "nakags/chroma.hpp"
#include "nakags/objective.hpp"

#include <cstdint>
#include <vector>

namespace nakags {

struct FitConfig {
    std::size_t grid_w = 16;
    std::size_t grid_h = 16;
    int iterations = 200;
    double step_size = 0.05;
    std::uint64_t seed = 0;
    /// Low/high frequency split of the Naka image.
    BlurParams blur{};

    void validate() const;
};

struct FitResult {
    /// Parameters on the coarse grid (clamped to the image extent).
    CorrectionMaps coarse;
    /// Full-resolution maps used for the final loss evaluation.
    CorrectionMaps maps;
    /// Loss before the first iteration followed by the loss after each one.
    std::vector<double> loss_trace;
    LossReport initial_report;
    LossReport final_report;
    int accepted_steps = 0;
};

/// Fits coarse-grid correction maps to `gt` by derivative-free descent on the
/// compound objective. Each iteration draws a seeded +/-1 direction at one
/// level of a coarse-to-fine pyramid, probes the loss at +/-h along it, tries
/// the minimizer of the parabola through the three samples, and keeps the
/// best candidate only if it lowers the loss. The probe size grows after a
/// success and shrinks after a failure.
///
/// `low` is validated against the other inputs but not otherwise read: the
/// direct optimizer only needs the Naka image and the target.
FitResult fit_correction(const ImageBuffer& low, const ImageBuffer& naka, const ImageBuffer& gt,
                         const FitConfig& cfg, const LossWeights& weights = {});

}  // namespace nakags
