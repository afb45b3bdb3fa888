#include "nakags/objective.hpp"

#include "nakags/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nakags {

namespace {

void require_pair(const ImageBuffer& pred, const ImageBuffer& gt, const char* op) {
    if (!pred.same_shape(gt)) {
        throw ShapeMismatch(std::string(op) + ": prediction and ground truth differ in shape");
    }
}

void require_rgb_pair(const ImageBuffer& pred, const ImageBuffer& gt, const char* op) {
    require_pair(pred, gt, op);
    if (pred.channels() != 3) throw ShapeMismatch(std::string(op) + ": expected 3-channel images");
}

ImageBuffer luma_or_self(const ImageBuffer& img) {
    return img.channels() == 3 ? to_grayscale(img) : img;
}

double mean_abs_diff(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

// mean over all samples of mask(x, y) * |pred - gt|, mask broadcast per channel.
double masked_mae(const ImageBuffer& pred, const ImageBuffer& gt, const ImageBuffer& mask) {
    auto m = mask.plane(0);
    double acc = 0.0;
    for (std::size_t c = 0; c < pred.channels(); ++c) {
        auto p = pred.plane(c);
        auto g = gt.plane(c);
        for (std::size_t i = 0; i < p.size(); ++i) acc += m[i] * std::abs(p[i] - g[i]);
    }
    return acc / static_cast<double>(pred.size());
}

double chroma_from_ycbcr(const ImageBuffer& pred_ycc, const ImageBuffer& gt_ycc) {
    const double dy = mean_abs_diff(pred_ycc.plane(0), gt_ycc.plane(0));
    const double dcb = mean_abs_diff(pred_ycc.plane(1), gt_ycc.plane(1));
    const double dcr = mean_abs_diff(pred_ycc.plane(2), gt_ycc.plane(2));
    return dcb + dcr + kChromaLumaWeight * dy;
}

void check_weight(double value, const char* name) {
    if (!std::isfinite(value) || value < 0.0) {
        throw InvalidArgument(std::string("loss weight ") + name + " must be finite and >= 0");
    }
}

}  // namespace

void LossWeights::validate() const {
    check_weight(rgb, "rgb");
    check_weight(chroma, "chroma");
    check_weight(ssim, "ssim");
    check_weight(edge, "edge");
    check_weight(reg, "reg");
    check_weight(mse, "mse");
    check_weight(gray, "gray");
    check_weight(bright, "bright");
    if (feat != 0.0) throw InvalidArgument("loss weight feat must be 0: the perceptual term is not available");
    if (!(charbonnier_eps > 0.0)) throw InvalidArgument("charbonnier_eps must be > 0");
    if (!(mul_lo <= mul_hi)) throw InvalidArgument("mul range lower bound exceeds upper bound");
}

double loss_rgb(const ImageBuffer& pred, const ImageBuffer& gt, double eps) {
    require_pair(pred, gt, "loss_rgb");
    if (!(eps > 0.0)) throw InvalidArgument("loss_rgb: eps must be > 0");
    const double eps2 = eps * eps;
    double charb = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - gt.data()[i];
        charb += std::sqrt(d * d + eps2) - eps;
        l1 += std::abs(d);
    }
    const auto n = static_cast<double>(pred.size());
    return charb / n + l1 / n;
}

double loss_chroma(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_rgb_pair(pred, gt, "loss_chroma");
    return chroma_from_ycbcr(to_ycbcr(pred), to_ycbcr(gt));
}

double loss_ssim(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_pair(pred, gt, "loss_ssim");
    return std::max(0.0, 1.0 - ssim(pred, gt));
}

double loss_edge(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_pair(pred, gt, "loss_edge");
    const ImageBuffer ep = sobel_magnitude(luma_or_self(pred));
    const ImageBuffer eg = sobel_magnitude(luma_or_self(gt));
    return mean_abs_diff(ep.plane(0), eg.plane(0));
}

double loss_mse(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_pair(pred, gt, "loss_mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - gt.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double total_variation(const ImageBuffer& img) {
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < img.channels(); ++c) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double v = img.at(x, y, c);
                if (x + 1 < w) acc += std::abs(img.at(x + 1, y, c) - v);
                if (y + 1 < h) acc += std::abs(img.at(x, y + 1, c) - v);
            }
        }
        count += (w - 1) * h + w * (h - 1);
    }
    return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

double loss_reg(const CorrectionMaps& maps, double lo, double hi) {
    if (lo > hi) throw InvalidArgument("loss_reg: range lower bound exceeds upper bound");
    if (maps.mul.channels() != 1 || maps.add.channels() != 3 || !maps.mul.same_extent(maps.add)) {
        throw ShapeMismatch("loss_reg: malformed correction maps");
    }
    double range = 0.0;
    for (double m : maps.mul.data()) range += std::max(0.0, lo - m) + std::max(0.0, m - hi);
    range /= static_cast<double>(maps.mul.size());
    return range + total_variation(maps.mul) + total_variation(maps.add);
}

ImageBuffer gray_edge_mask(const ImageBuffer& gt, double eps) {
    if (gt.channels() != 3) throw ShapeMismatch("gray_edge_mask: expected a 3-channel image");
    ImageBuffer response = laplacian(to_grayscale(gt));
    double peak = 0.0;
    for (double& v : response.data()) {
        v = std::abs(v);
        peak = std::max(peak, v);
    }
    const double denom = peak + eps;
    for (double& v : response.data()) v = std::sqrt(v / denom);
    return response;
}

double loss_gray(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_rgb_pair(pred, gt, "loss_gray");
    return masked_mae(pred, gt, gray_edge_mask(gt));
}

BrightMask bright_mask(const ImageBuffer& pred) {
    if (pred.channels() != 3) throw ShapeMismatch("bright_mask: expected a 3-channel image");
    BrightMask out;
    out.mask = to_grayscale(pred);
    out.tau = quantile(out.mask, kBrightQuantile);
    for (double& v : out.mask.data()) v = v >= out.tau ? 1.0 : 0.0;
    return out;
}

double loss_bright(const ImageBuffer& pred, const ImageBuffer& gt) {
    require_rgb_pair(pred, gt, "loss_bright");
    return masked_mae(pred, gt, bright_mask(pred).mask);
}

double weighted_total(const LossReport& r, const LossWeights& w) {
    return w.rgb * r.rgb + w.chroma * r.chroma + w.ssim * r.ssim + w.edge * r.edge + w.feat * r.feat +
           w.reg * r.reg + w.mse * r.mse + w.gray * r.gray + w.bright * r.bright;
}

ObjectiveEvaluator::ObjectiveEvaluator(const ImageBuffer& gt, const LossWeights& weights)
    : gt_(gt),
      weights_(weights),
      gt_ycbcr_(to_ycbcr(gt)),
      gt_edges_(sobel_magnitude(to_grayscale(gt))),
      gray_mask_(gray_edge_mask(gt)),
      ssim_ref_(gt) {
    weights_.validate();
}

LossReport ObjectiveEvaluator::evaluate(const ImageBuffer& pred, const CorrectionMaps& maps) const {
    require_rgb_pair(pred, gt_, "compound_loss");
    LossReport r;
    r.rgb = loss_rgb(pred, gt_, weights_.charbonnier_eps);
    r.chroma = chroma_from_ycbcr(to_ycbcr(pred), gt_ycbcr_);
    r.ssim = std::max(0.0, 1.0 - ssim_ref_.score(pred));
    const ImageBuffer pred_edges = sobel_magnitude(to_grayscale(pred));
    r.edge = mean_abs_diff(pred_edges.plane(0), gt_edges_.plane(0));
    r.reg = loss_reg(maps, weights_.mul_lo, weights_.mul_hi);
    r.mse = loss_mse(pred, gt_);
    r.gray = masked_mae(pred, gt_, gray_mask_);
    r.bright = masked_mae(pred, gt_, bright_mask(pred).mask);
    r.total = weighted_total(r, weights_);
    return r;
}

LossReport compound_loss(const ImageBuffer& pred, const ImageBuffer& gt, const CorrectionMaps& maps,
                         const LossWeights& weights) {
    return ObjectiveEvaluator(gt, weights).evaluate(pred, maps);
}

}  // namespace nakags
