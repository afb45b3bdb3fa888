#include "nakags/naka.hpp"

#include "nakags/errors.hpp"

#include <cmath>
#include <string>

namespace nakags {

void NakaParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("naka sigma must be > 0, got " + std::to_string(sigma));
    }
    if (!(exponent > 0.0) || !std::isfinite(exponent)) {
        throw InvalidArgument("naka exponent must be > 0, got " + std::to_string(exponent));
    }
}

double naka_response(double intensity, const NakaParams& params) {
    const double i = intensity > 0.0 ? intensity : 0.0;
    if (params.exponent == 1.0) return i / (i + params.sigma);
    const double in = std::pow(i, params.exponent);
    return in / (in + std::pow(params.sigma, params.exponent));
}

ImageBuffer naka_transform(const ImageBuffer& img, const NakaParams& params) {
    params.validate();
    ImageBuffer out(img.width(), img.height(), img.channels());
    for (std::size_t i = 0; i < img.size(); ++i) out.data()[i] = naka_response(img.data()[i], params);
    return out;
}

ImageBuffer residual(const ImageBuffer& low, const ImageBuffer& naka) {
    if (!low.same_shape(naka)) throw ShapeMismatch("residual: low and naka differ in shape");
    ImageBuffer out(low.width(), low.height(), low.channels());
    for (std::size_t i = 0; i < low.size(); ++i) out.data()[i] = naka.data()[i] - low.data()[i];
    return out;
}

DualBranchInput build_dual_branch(const ImageBuffer& low, const ImageBuffer& naka) {
    if (low.channels() != 3 || naka.channels() != 3) {
        throw ShapeMismatch("build_dual_branch: inputs must have 3 channels");
    }
    if (!low.same_shape(naka)) throw ShapeMismatch("build_dual_branch: low and naka differ in shape");

    DualBranchInput out;
    const ImageBuffer delta = residual(low, naka);
    const std::array<ImageBuffer, 3> parts{low, naka, delta};
    out.raw = stack_channels(parts);

    out.normalized = ImageBuffer(low.width(), low.height(), 9);
    const auto n = static_cast<double>(low.plane_size());
    for (std::size_t c = 0; c < 9; ++c) {
        auto src = out.raw.plane(c);
        auto dst = out.normalized.plane(c);
        double mean = 0.0;
        for (double v : src) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : src) var += (v - mean) * (v - mean);
        const double std = std::sqrt(var / n);
        out.means[c] = mean;
        out.stddevs[c] = std;
        if (std <= kStandardizeEpsilon) continue;  // stays all-zero
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - mean) / std;
    }

    const std::array<ImageBuffer, 2> branches{out.raw, out.normalized};
    out.combined = stack_channels(branches);
    return out;
}

FrequencyPair frequency_decompose(const ImageBuffer& naka, const BlurParams& blur) {
    FrequencyPair out{gaussian_blur(naka, blur), ImageBuffer(naka.width(), naka.height(), naka.channels())};
    for (std::size_t i = 0; i < naka.size(); ++i) {
        out.high_freq.data()[i] = naka.data()[i] - out.low_freq.data()[i];
    }
    return out;
}

}  // namespace nakags
