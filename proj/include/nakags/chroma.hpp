#pragma once

#include "nakags/imagecore.hpp"

namespace nakags {

/// Frequency-decoupled correction maps: a 1-channel multiplicative gain and a
/// 3-channel signed additive offset, both at the resolution of the image
/// they correct (or at a coarse grid before upsampling).
struct CorrectionMaps {
    ImageBuffer mul;
    ImageBuffer add;

    std::size_t width() const noexcept { return mul.width(); }
    std::size_t height() const noexcept { return mul.height(); }

    /// Checks channel counts, matching extents, and mul >= 0 finite.
    void validate() const;

    friend bool operator==(const CorrectionMaps&, const CorrectionMaps&) = default;
};

/// mul = 1, add = 0.
CorrectionMaps identity_maps(std::size_t width, std::size_t height);

/// clip(lf * mul + add + hf, 0, 1) where (lf, hf) is the Gaussian split of
/// `naka`. mul is broadcast over the three color channels.
ImageBuffer apply_correction(const ImageBuffer& naka, const CorrectionMaps& maps, const BlurParams& blur);

/// Same as apply_correction, with the frequency split precomputed.
ImageBuffer apply_correction(const ImageBuffer& low_freq, const ImageBuffer& high_freq,
                             const CorrectionMaps& maps);

/// Bilinear upsampling with corner-aligned sample positions.
CorrectionMaps upsample_maps(const CorrectionMaps& coarse, std::size_t width, std::size_t height);

/// 1-channel bilinear resize with corner-aligned sample positions.
ImageBuffer upsample_bilinear(const ImageBuffer& coarse, std::size_t width, std::size_t height);

}  // namespace nakags
