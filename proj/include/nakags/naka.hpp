#pragma once

#include "nakags/imagecore.hpp"

#include <array>

namespace nakags {

/// Normalized Naka-Rushton response R(I) = I^n / (I^n + sigma^n).
struct NakaParams {
    /// Half-saturation intensity: R(sigma) = 0.5.
    double sigma = 0.05;
    double exponent = 1.0;

    void validate() const;
};

/// Scalar response; negative inputs are treated as 0.
double naka_response(double intensity, const NakaParams& params);

/// Per-channel, per-pixel Naka-Rushton tone curve.
ImageBuffer naka_transform(const ImageBuffer& img, const NakaParams& params);

/// naka - low, signed and unclipped.
ImageBuffer residual(const ImageBuffer& low, const ImageBuffer& naka);

/// Network input built from the low-light frame, its Naka enhancement and
/// their residual. `raw` is [low, naka, delta] (9 channels), `normalized` is
/// the same stack standardized per channel, `combined` is raw ++ normalized.
struct DualBranchInput {
    ImageBuffer raw;
    ImageBuffer normalized;
    ImageBuffer combined;
    /// Per-channel statistics used for standardization (population std).
    std::array<double, 9> means{};
    std::array<double, 9> stddevs{};
};

/// Channels whose std is at or below this are standardized to all-zero.
inline constexpr double kStandardizeEpsilon = 1e-6;

DualBranchInput build_dual_branch(const ImageBuffer& low, const ImageBuffer& naka);

struct FrequencyPair {
    ImageBuffer low_freq;
    ImageBuffer high_freq;
};

/// Gaussian low-pass and its exact complement.
FrequencyPair frequency_decompose(const ImageBuffer& naka, const BlurParams& blur);

}  // namespace nakags
