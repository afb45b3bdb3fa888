#pragma once

#include "nakags/chroma.hpp"
#include "nakags/imagecore.hpp"

namespace nakags {

/// Weights of the compound correction objective:
///   total = rgb*L_rgb + chroma*L_chroma + ssim*L_ssim + edge*L_edge
///         + feat*L_feat + reg*L_reg + mse*L_mse + gray*L_gray + bright*L_bright
/// The perceptual (feat) term has no implementation and its weight must stay 0.
struct LossWeights {
    double rgb = 1.0;
    double chroma = 0.5;
    double ssim = 0.2;
    double edge = 0.1;
    double feat = 0.0;
    double reg = 0.01;
    double mse = 0.0;
    double gray = 1.0;
    double bright = 0.8;
    double charbonnier_eps = 1e-3;
    double mul_lo = 0.2;
    double mul_hi = 5.0;

    void validate() const;
};

struct LossReport {
    double rgb = 0.0;
    double chroma = 0.0;
    double ssim = 0.0;
    double edge = 0.0;
    /// Always 0; the perceptual term is not computed.
    double feat = 0.0;
    bool feat_excluded = true;
    double reg = 0.0;
    double mse = 0.0;
    double gray = 0.0;
    double bright = 0.0;
    double total = 0.0;
};

inline constexpr double kGrayMaskEpsilon = 1e-8;
inline constexpr double kBrightQuantile = 0.85;
inline constexpr double kChromaLumaWeight = 0.5;

/// Charbonnier (shifted to 0 at d = 0) plus L1, each averaged over samples.
double loss_rgb(const ImageBuffer& pred, const ImageBuffer& gt, double eps = 1e-3);

/// mean|dCb| + mean|dCr| + 0.5 mean|dY| in full-range BT.601.
double loss_chroma(const ImageBuffer& pred, const ImageBuffer& gt);

double loss_ssim(const ImageBuffer& pred, const ImageBuffer& gt);

/// Mean absolute difference of grayscale Sobel magnitudes.
double loss_edge(const ImageBuffer& pred, const ImageBuffer& gt);

double loss_mse(const ImageBuffer& pred, const ImageBuffer& gt);

/// Mean total variation over the pooled set of forward differences in x and
/// y, across all channels. 0 when the image has no neighbours.
double total_variation(const ImageBuffer& img);

/// Out-of-range penalty on mul plus TV(mul) + TV(add).
double loss_reg(const CorrectionMaps& maps, double lo = 0.2, double hi = 5.0);

/// sqrt(|lap(gray)| / (max|lap(gray)| + eps)) of the ground truth.
ImageBuffer gray_edge_mask(const ImageBuffer& gt, double eps = kGrayMaskEpsilon);

/// mean(M_gray * |pred - gt|) with the mask broadcast over channels.
double loss_gray(const ImageBuffer& pred, const ImageBuffer& gt);

struct BrightMask {
    ImageBuffer mask;
    double tau = 0.0;
};

/// Indicator of prediction grayscale >= its 0.85 quantile.
BrightMask bright_mask(const ImageBuffer& pred);

/// mean(M_bright * |pred - gt|) with the mask taken from the prediction.
double loss_bright(const ImageBuffer& pred, const ImageBuffer& gt);

LossReport compound_loss(const ImageBuffer& pred, const ImageBuffer& gt, const CorrectionMaps& maps,
                         const LossWeights& weights = {});

/// Weighted sum of the terms in `report` (ignores report.total).
double weighted_total(const LossReport& report, const LossWeights& weights);

/// Compound objective against a fixed ground truth. Ground-truth-only
/// quantities (YCbCr, Sobel response, gray-edge mask, SSIM statistics) are
/// computed once, so repeated evaluation during fitting is cheaper.
class ObjectiveEvaluator {
public:
    ObjectiveEvaluator(const ImageBuffer& gt, const LossWeights& weights);

    LossReport evaluate(const ImageBuffer& pred, const CorrectionMaps& maps) const;

    const ImageBuffer& gt() const noexcept { return gt_; }
    const LossWeights& weights() const noexcept { return weights_; }

private:
    ImageBuffer gt_;
    LossWeights weights_;
    ImageBuffer gt_ycbcr_;
    ImageBuffer gt_edges_;
    ImageBuffer gray_mask_;
    SsimReference ssim_ref_;
};

}  // namespace nakags
