#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nakags {

/// Planar, channel-major float image. Channel c of pixel (x, y) lives at
/// data[(c * height + y) * width + x].
///
/// Most operations expect 1 or 3 channels; wider stacks (the 9/18 channel
/// network inputs) use the same container.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, double fill = 0.0);
    ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, std::vector<double> data);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept { return width_ * height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(std::size_t x, std::size_t y, std::size_t c = 0) {
        return data_[(c * height_ + y) * width_ + x];
    }
    double at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return data_[(c * height_ + y) * width_ + x];
    }

    std::span<double> plane(std::size_t c) {
        return {data_.data() + c * plane_size(), plane_size()};
    }
    std::span<const double> plane(std::size_t c) const {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const ImageBuffer& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }
    bool same_extent(const ImageBuffer& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    /// Copy of a single channel as a 1-channel image.
    ImageBuffer channel(std::size_t c) const;

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

/// Concatenate images of identical extent along the channel axis.
ImageBuffer stack_channels(std::span<const ImageBuffer> parts);

enum class Boundary { Reflect, Replicate };

struct BlurParams {
    double sigma = 2.0;
    /// 0 selects ceil(3 * sigma).
    int radius = 0;
    Boundary boundary = Boundary::Reflect;

    int effective_radius() const;
    void validate() const;
};

/// Normalized 1D Gaussian taps, length 2 * radius + 1.
std::vector<double> gaussian_kernel(double sigma, int radius);

// Luma weights shared by grayscale, BT.601 YCbCr and the mask losses.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

ImageBuffer to_grayscale(const ImageBuffer& img);

/// Full-range BT.601. Cb and Cr are centered at 0.5.
ImageBuffer to_ycbcr(const ImageBuffer& img);
ImageBuffer from_ycbcr(const ImageBuffer& ycc);

/// Separable Gaussian filter applied per channel.
ImageBuffer gaussian_blur(const ImageBuffer& img, const BlurParams& params);

/// 4-neighbour Laplacian with replicated borders.
ImageBuffer laplacian(const ImageBuffer& img);

/// sqrt(Gx^2 + Gy^2) of the 3x3 Sobel pair, replicated borders.
ImageBuffer sobel_magnitude(const ImageBuffer& img);

/// Linear-interpolation quantile over every sample of a 1-channel image.
double quantile(const ImageBuffer& img, double q);
double quantile(std::vector<double> values, double q);

/// Peak signal-to-noise ratio in dB for unit-range images; +inf when identical.
double psnr(const ImageBuffer& pred, const ImageBuffer& gt);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// Mean SSIM over all fully-covered window positions. 3-channel inputs are
/// converted to grayscale first.
double ssim(const ImageBuffer& pred, const ImageBuffer& gt, const SsimParams& params = {});

/// Precomputed local statistics of a fixed reference image, so repeated SSIM
/// evaluations against it (as in fitting) only filter the prediction side.
class SsimReference {
public:
    SsimReference(const ImageBuffer& reference, const SsimParams& params = {});

    double score(const ImageBuffer& pred) const;

private:
    SsimParams params_;
    std::vector<double> taps_;
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    ImageBuffer gray_;
    ImageBuffer mean_;
    ImageBuffer sq_mean_;
};

/// Whether any sample is NaN or infinite.
bool has_non_finite(const ImageBuffer& img);

}  // namespace nakags
