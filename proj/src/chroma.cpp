#include "nakags/chroma.hpp"

#include "nakags/errors.hpp"
#include "nakags/naka.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nakags {

namespace {

// Sample positions for corner-aligned resampling: target index i maps to
// i * (n_src - 1) / (n_dst - 1) in source coordinates.
struct Tap {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

std::vector<Tap> resample_taps(std::size_t src, std::size_t dst) {
    std::vector<Tap> taps(dst);
    for (std::size_t i = 0; i < dst; ++i) {
        if (src == 1 || dst == 1) {
            taps[i] = {0, 0, 0.0};
            continue;
        }
        const std::size_t num = i * (src - 1);
        const std::size_t lo = num / (dst - 1);
        const std::size_t rem = num % (dst - 1);
        const double frac = static_cast<double>(rem) / static_cast<double>(dst - 1);
        taps[i] = {lo, std::min(lo + 1, src - 1), frac};
    }
    return taps;
}

}  // namespace

void CorrectionMaps::validate() const {
    if (mul.channels() != 1) throw ShapeMismatch("correction maps: mul must have 1 channel");
    if (add.channels() != 3) throw ShapeMismatch("correction maps: add must have 3 channels");
    if (!mul.same_extent(add)) throw ShapeMismatch("correction maps: mul and add extents differ");
    for (double v : mul.data()) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("correction maps: mul must be finite and >= 0");
    }
    if (has_non_finite(add)) throw InvalidArgument("correction maps: add must be finite");
}

CorrectionMaps identity_maps(std::size_t width, std::size_t height) {
    return {ImageBuffer(width, height, 1, 1.0), ImageBuffer(width, height, 3, 0.0)};
}

ImageBuffer apply_correction(const ImageBuffer& low_freq, const ImageBuffer& high_freq,
                             const CorrectionMaps& maps) {
    if (low_freq.channels() != 3 || !low_freq.same_shape(high_freq)) {
        throw ShapeMismatch("apply_correction: expected matching 3-channel frequency bands");
    }
    if (maps.mul.channels() != 1 || maps.add.channels() != 3 || !maps.mul.same_extent(low_freq) ||
        !maps.add.same_extent(low_freq)) {
        throw ShapeMismatch("apply_correction: correction maps do not match image extent " +
                            std::to_string(low_freq.width()) + "x" + std::to_string(low_freq.height()));
    }
    ImageBuffer out(low_freq.width(), low_freq.height(), 3);
    auto gain = maps.mul.plane(0);
    for (std::size_t c = 0; c < 3; ++c) {
        auto lf = low_freq.plane(c);
        auto hf = high_freq.plane(c);
        auto offset = maps.add.plane(c);
        auto dst = out.plane(c);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const double base = lf[i] * gain[i] + offset[i];
            dst[i] = std::clamp(base + hf[i], 0.0, 1.0);
        }
    }
    return out;
}

ImageBuffer apply_correction(const ImageBuffer& naka, const CorrectionMaps& maps, const BlurParams& blur) {
    if (naka.channels() != 3) throw ShapeMismatch("apply_correction: naka image must have 3 channels");
    if (!maps.mul.same_extent(naka) || !maps.add.same_extent(naka)) {
        throw ShapeMismatch("apply_correction: correction maps do not match image extent");
    }
    const FrequencyPair bands = frequency_decompose(naka, blur);
    return apply_correction(bands.low_freq, bands.high_freq, maps);
}

ImageBuffer upsample_bilinear(const ImageBuffer& coarse, std::size_t width, std::size_t height) {
    if (width < coarse.width() || height < coarse.height()) {
        throw InvalidArgument("upsample: target " + std::to_string(width) + "x" + std::to_string(height) +
                              " is smaller than source " + std::to_string(coarse.width()) + "x" +
                              std::to_string(coarse.height()));
    }
    const auto tx = resample_taps(coarse.width(), width);
    const auto ty = resample_taps(coarse.height(), height);
    ImageBuffer out(width, height, coarse.channels());
    for (std::size_t c = 0; c < coarse.channels(); ++c) {
        for (std::size_t y = 0; y < height; ++y) {
            const Tap& vy = ty[y];
            for (std::size_t x = 0; x < width; ++x) {
                const Tap& vx = tx[x];
                const double top = coarse.at(vx.lo, vy.lo, c) +
                                   vx.frac * (coarse.at(vx.hi, vy.lo, c) - coarse.at(vx.lo, vy.lo, c));
                const double bottom = coarse.at(vx.lo, vy.hi, c) +
                                      vx.frac * (coarse.at(vx.hi, vy.hi, c) - coarse.at(vx.lo, vy.hi, c));
                out.at(x, y, c) = top + vy.frac * (bottom - top);
            }
        }
    }
    return out;
}

CorrectionMaps upsample_maps(const CorrectionMaps& coarse, std::size_t width, std::size_t height) {
    return {upsample_bilinear(coarse.mul, width, height), upsample_bilinear(coarse.add, width, height)};
}

}  // namespace nakags
