#include "nakags/imagecore.hpp"

#include "nakags/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nakags {

namespace {

void require_nonempty_extent(std::size_t width, std::size_t height, std::size_t channels) {
    if (width == 0 || height == 0 || channels == 0) {
        throw InvalidArgument("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                              std::to_string(height) + "x" + std::to_string(channels));
    }
}

void require_channels(const ImageBuffer& img, std::size_t channels, const char* op) {
    if (img.channels() != channels) {
        throw ShapeMismatch(std::string(op) + ": expected " + std::to_string(channels) +
                            " channel(s), got " + std::to_string(img.channels()));
    }
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch(std::string(op) + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                            std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                            std::to_string(b.channels()) + ")");
    }
}

// Half-sample symmetric extension: ... b a | a b c ... c | c b ...
// Periodic with period 2n, so any offset maps inside.
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
    const std::ptrdiff_t period = 2 * n;
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::ptrdiff_t n) {
    return std::clamp<std::ptrdiff_t>(i, 0, n - 1);
}

std::ptrdiff_t map_index(std::ptrdiff_t i, std::ptrdiff_t n, Boundary boundary) {
    return boundary == Boundary::Reflect ? reflect_index(i, n) : clamp_index(i, n);
}

void blur_plane(std::span<const double> src, std::span<double> dst, std::size_t width,
                std::size_t height, const std::vector<double>& taps, Boundary boundary) {
    const auto w = static_cast<std::ptrdiff_t>(width);
    const auto h = static_cast<std::ptrdiff_t>(height);
    const auto r = static_cast<std::ptrdiff_t>(taps.size() / 2);
    std::vector<double> tmp(src.size());

    for (std::ptrdiff_t y = 0; y < h; ++y) {
        const double* row = src.data() + y * w;
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -r; k <= r; ++k) {
                acc += taps[k + r] * row[map_index(x + k, w, boundary)];
            }
            tmp[y * w + x] = acc;
        }
    }
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -r; k <= r; ++k) {
                acc += taps[k + r] * tmp[map_index(y + k, h, boundary) * w + x];
            }
            dst[y * w + x] = acc;
        }
    }
}

// Separable filtering restricted to positions where the whole window fits.
// Output extent is (width - 2r) x (height - 2r).
std::vector<double> filter_valid(std::span<const double> src, std::size_t width, std::size_t height,
                                 const std::vector<double>& taps) {
    const std::size_t win = taps.size();
    const std::size_t ow = width - win + 1;
    const std::size_t oh = height - win + 1;
    std::vector<double> tmp(ow * height);
    for (std::size_t y = 0; y < height; ++y) {
        const double* row = src.data() + y * width;
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < win; ++k) acc += taps[k] * row[x + k];
            tmp[y * ow + x] = acc;
        }
    }
    std::vector<double> out(ow * oh);
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < win; ++k) acc += taps[k] * tmp[(y + k) * ow + x];
            out[y * ow + x] = acc;
        }
    }
    return out;
}

ImageBuffer as_ssim_gray(const ImageBuffer& img) {
    if (img.channels() == 3) return to_grayscale(img);
    if (img.channels() == 1) return img;
    throw ShapeMismatch("ssim: expected 1 or 3 channels, got " + std::to_string(img.channels()));
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    require_nonempty_extent(width, height, channels);
    data_.assign(width * height * channels, fill);
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    require_nonempty_extent(width, height, channels);
    if (data_.size() != width * height * channels) {
        throw InvalidArgument("image data length " + std::to_string(data_.size()) + " does not match " +
                              std::to_string(width) + "x" + std::to_string(height) + "x" +
                              std::to_string(channels));
    }
}

ImageBuffer ImageBuffer::channel(std::size_t c) const {
    if (c >= channels_) throw InvalidArgument("channel index out of range");
    auto p = plane(c);
    return ImageBuffer(width_, height_, 1, std::vector<double>(p.begin(), p.end()));
}

ImageBuffer stack_channels(std::span<const ImageBuffer> parts) {
    if (parts.empty()) throw InvalidArgument("stack_channels: no inputs");
    std::size_t channels = 0;
    for (const auto& p : parts) {
        if (!p.same_extent(parts.front())) throw ShapeMismatch("stack_channels: extent mismatch");
        channels += p.channels();
    }
    std::vector<double> data;
    data.reserve(parts.front().plane_size() * channels);
    for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
    return ImageBuffer(parts.front().width(), parts.front().height(), channels, std::move(data));
}

int BlurParams::effective_radius() const {
    return radius > 0 ? radius : std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
}

void BlurParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("blur sigma must be > 0, got " + std::to_string(sigma));
    }
    if (radius < 0) throw InvalidArgument("blur radius must be >= 1 (or 0 for auto)");
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be > 0");
    if (radius < 0) throw InvalidArgument("gaussian_kernel: radius must be >= 0");
    std::vector<double> taps(2 * static_cast<std::size_t>(radius) + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        taps[i + radius] = v;
        sum += v;
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
    require_channels(img, 3, "to_grayscale");
    ImageBuffer out(img.width(), img.height(), 1);
    auto r = img.plane(0);
    auto g = img.plane(1);
    auto b = img.plane(2);
    auto o = out.plane(0);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = kLumaR * r[i] + kLumaG * g[i] + kLumaB * b[i];
    return out;
}

ImageBuffer to_ycbcr(const ImageBuffer& img) {
    require_channels(img, 3, "to_ycbcr");
    ImageBuffer out(img.width(), img.height(), 3);
    auto r = img.plane(0);
    auto g = img.plane(1);
    auto b = img.plane(2);
    auto y = out.plane(0);
    auto cb = out.plane(1);
    auto cr = out.plane(2);
    // Cb = (B - Y) / (2 (1 - kB)), Cr = (R - Y) / (2 (1 - kR))
    constexpr double cb_scale = 0.5 / (1.0 - kLumaB);
    constexpr double cr_scale = 0.5 / (1.0 - kLumaR);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double luma = kLumaR * r[i] + kLumaG * g[i] + kLumaB * b[i];
        y[i] = luma;
        cb[i] = 0.5 + cb_scale * (b[i] - luma);
        cr[i] = 0.5 + cr_scale * (r[i] - luma);
    }
    return out;
}

ImageBuffer from_ycbcr(const ImageBuffer& ycc) {
    require_channels(ycc, 3, "from_ycbcr");
    ImageBuffer out(ycc.width(), ycc.height(), 3);
    auto y = ycc.plane(0);
    auto cb = ycc.plane(1);
    auto cr = ycc.plane(2);
    auto r = out.plane(0);
    auto g = out.plane(1);
    auto b = out.plane(2);
    constexpr double cb_inv = 2.0 * (1.0 - kLumaB);
    constexpr double cr_inv = 2.0 * (1.0 - kLumaR);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double rv = y[i] + cr_inv * (cr[i] - 0.5);
        const double bv = y[i] + cb_inv * (cb[i] - 0.5);
        r[i] = rv;
        b[i] = bv;
        g[i] = (y[i] - kLumaR * rv - kLumaB * bv) / kLumaG;
    }
    return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, const BlurParams& params) {
    params.validate();
    const auto taps = gaussian_kernel(params.sigma, params.effective_radius());
    ImageBuffer out(img.width(), img.height(), img.channels());
    for (std::size_t c = 0; c < img.channels(); ++c) {
        blur_plane(img.plane(c), out.plane(c), img.width(), img.height(), taps, params.boundary);
    }
    return out;
}

ImageBuffer laplacian(const ImageBuffer& img) {
    require_channels(img, 1, "laplacian");
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    ImageBuffer out(img.width(), img.height(), 1);
    auto src = img.plane(0);
    auto dst = out.plane(0);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            const double c = src[y * w + x];
            const double l = src[y * w + clamp_index(x - 1, w)];
            const double r = src[y * w + clamp_index(x + 1, w)];
            const double u = src[clamp_index(y - 1, h) * w + x];
            const double d = src[clamp_index(y + 1, h) * w + x];
            dst[y * w + x] = (l + r) + (u + d) - 4.0 * c;
        }
    }
    return out;
}

ImageBuffer sobel_magnitude(const ImageBuffer& img) {
    require_channels(img, 1, "sobel_magnitude");
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    ImageBuffer out(img.width(), img.height(), 1);
    auto src = img.plane(0);
    auto dst = out.plane(0);
    auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
        return src[clamp_index(y, h) * w + clamp_index(x, w)];
    };
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            const double gx = (px(x + 1, y - 1) - px(x - 1, y - 1)) +
                              2.0 * (px(x + 1, y) - px(x - 1, y)) +
                              (px(x + 1, y + 1) - px(x - 1, y + 1));
            const double gy = (px(x - 1, y + 1) - px(x - 1, y - 1)) +
                              2.0 * (px(x, y + 1) - px(x, y - 1)) +
                              (px(x + 1, y + 1) - px(x + 1, y - 1));
            dst[y * w + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile: q must lie in [0, 1], got " + std::to_string(q));
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(values.begin(), values.begin() + lo, values.end());
    const double lo_val = values[lo];
    if (frac == 0.0 || lo + 1 >= values.size()) return lo_val;
    const double hi_val = *std::min_element(values.begin() + lo + 1, values.end());
    return lo_val + frac * (hi_val - lo_val);
}

double quantile(const ImageBuffer& img, double q) {
    require_channels(img, 1, "quantile");
    return quantile(img.data(), q);
}

double psnr(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_same_shape(pred, gt, "psnr");
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - gt.data()[i];
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sse / static_cast<double>(pred.size());
    return 10.0 * std::log10(1.0 / mse);
}

SsimReference::SsimReference(const ImageBuffer& reference, const SsimParams& params)
    : params_(params), gray_(as_ssim_gray(reference)) {
    if (params.window < 1 || params.window % 2 == 0) throw InvalidArgument("ssim window must be odd and >= 1");
    width_ = gray_.width();
    height_ = gray_.height();
    const auto win = static_cast<std::size_t>(params.window);
    if (width_ < win || height_ < win) {
        throw InvalidArgument("ssim: image " + std::to_string(width_) + "x" + std::to_string(height_) +
                              " is smaller than the " + std::to_string(win) + "x" + std::to_string(win) +
                              " window");
    }
    taps_ = gaussian_kernel(params.sigma, params.window / 2);
    const std::size_t ow = width_ - win + 1;
    const std::size_t oh = height_ - win + 1;
    auto g = gray_.plane(0);
    std::vector<double> sq(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) sq[i] = g[i] * g[i];
    mean_ = ImageBuffer(ow, oh, 1, filter_valid(g, width_, height_, taps_));
    sq_mean_ = ImageBuffer(ow, oh, 1, filter_valid(sq, width_, height_, taps_));
}

double SsimReference::score(const ImageBuffer& pred) const {
    const ImageBuffer x = as_ssim_gray(pred);
    if (x.width() != width_ || x.height() != height_) throw ShapeMismatch("ssim: shape mismatch");
    auto xs = x.plane(0);
    auto ys = gray_.plane(0);
    std::vector<double> xx(xs.size());
    std::vector<double> xy(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xx[i] = xs[i] * xs[i];
        xy[i] = xs[i] * ys[i];
    }
    const auto mx = filter_valid(xs, width_, height_, taps_);
    const auto exx = filter_valid(xx, width_, height_, taps_);
    const auto exy = filter_valid(xy, width_, height_, taps_);
    auto my = mean_.plane(0);
    auto eyy = sq_mean_.plane(0);

    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double mxy = mx[i] * my[i];
        const double mxx = mx[i] * mx[i];
        const double myy = my[i] * my[i];
        const double vx = exx[i] - mxx;
        const double vy = eyy[i] - myy;
        const double cov = exy[i] - mxy;
        const double num = (2.0 * mxy + params_.c1) * (2.0 * cov + params_.c2);
        const double den = (mxx + myy + params_.c1) * (vx + vy + params_.c2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

double ssim(const ImageBuffer& pred, const ImageBuffer& gt, const SsimParams& params) {
    if (!pred.same_shape(gt)) throw ShapeMismatch("ssim: shape mismatch");
    return SsimReference(gt, params).score(pred);
}

bool has_non_finite(const ImageBuffer& img) {
    return std::any_of(img.data().begin(), img.data().end(), [](double v) { return !std::isfinite(v); });
}

}  // namespace nakags
