#include "nakags/errors.hpp"
#include "nakags/objective.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace nakags;

namespace {

ImageBuffer plus(const ImageBuffer& img, double offset) {
    ImageBuffer out = img;
    for (double& v : out.data()) v += offset;
    return out;
}

ImageBuffer gray_impulse(std::size_t size) {
    ImageBuffer img(size, size, 3);
    for (std::size_t c = 0; c < 3; ++c) img.at(size / 2, size / 2, c) = 1.0;
    return img;
}

double mean_of(const ImageBuffer& img) {
    double acc = 0.0;
    for (double v : img.data()) acc += v;
    return acc / static_cast<double>(img.size());
}

/// 10x10 neutral image whose gray levels are a permutation of 0..99 / 99.
ImageBuffer gray_ramp() {
    ImageBuffer img(10, 10, 3);
    for (std::size_t i = 0; i < 100; ++i) {
        const double v = static_cast<double>(i * 37 % 100) / 99.0;
        for (std::size_t c = 0; c < 3; ++c) img.data()[c * 100 + i] = v;
    }
    return img;
}

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("rgb term") {
    const ImageBuffer gt = testutil::random_image(8, 8, 3, 1, 0.2, 0.8);
    CHECK(loss_rgb(gt, gt) == 0.0);
    const double expect = (std::sqrt(0.01 + 1e-6) - 1e-3) + 0.1;
    CHECK(loss_rgb(plus(gt, 0.1), gt) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.19905).epsilon(1e-4));
    CHECK(loss_rgb(plus(gt, -0.1), gt) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("chroma term") {
    const ImageBuffer gt = testutil::random_image(8, 8, 3, 2);
    CHECK(loss_chroma(gt, gt) == 0.0);
    CHECK(loss_chroma(ImageBuffer(4, 4, 3, 0.6), ImageBuffer(4, 4, 3, 0.4)) ==
          doctest::Approx(0.1).epsilon(1e-12));
    const ImageBuffer pred = testutil::random_image(8, 8, 3, 3);
    CHECK(loss_chroma(pred, gt) == doctest::Approx(loss_chroma(gt, pred)).epsilon(1e-14));
}

TEST_CASE("ssim term") {
    const ImageBuffer gt = testutil::random_image(16, 16, 3, 4);
    CHECK(loss_ssim(gt, gt) == 0.0);
    const double v = loss_ssim(testutil::random_image(16, 16, 3, 5), gt);
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
    const double a = 0.2;
    const double b = 0.7;
    const double c1 = 1e-4;
    CHECK(loss_ssim(ImageBuffer(12, 12, 3, a), ImageBuffer(12, 12, 3, b)) ==
          doctest::Approx(1.0 - (2 * a * b + c1) / (a * a + b * b + c1)).epsilon(1e-12));
}

TEST_CASE("edge term") {
    const ImageBuffer gt = testutil::random_image(10, 10, 3, 6, 0.2, 0.7);
    CHECK(loss_edge(gt, gt) == 0.0);
    CHECK(loss_edge(plus(gt, 0.1), gt) < 1e-12);

    // Vertical step in every channel vs flat: Sobel is 4 on the two edge
    // columns of an 8-wide image, 0 elsewhere, so the mean is 4 * 2 / 8.
    ImageBuffer step(8, 6, 3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t x = 4; x < 8; ++x) step.at(x, y, c) = 1.0;
    CHECK(loss_edge(step, ImageBuffer(8, 6, 3)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mse term") {
    const ImageBuffer gt = testutil::random_image(6, 6, 3, 7);
    CHECK(loss_mse(plus(gt, 0.1), gt) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("regularizer") {
    CHECK(loss_reg(identity_maps(6, 6)) == 0.0);

    CorrectionMaps high = identity_maps(5, 5);
    for (double& v : high.mul.data()) v = 6.0;
    CHECK(loss_reg(high, 0.2, 5.0) == doctest::Approx(1.0).epsilon(1e-14));

    CorrectionMaps checker = identity_maps(6, 6);
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 6; ++x) checker.mul.at(x, y) = (x + y) % 2 == 0 ? 0.5 : 1.5;
    CHECK(total_variation(checker.mul) == 1.0);
    CHECK(loss_reg(checker, 0.2, 5.0) == 1.0);
    CHECK(total_variation(ImageBuffer(1, 1, 1, 3.0)) == 0.0);
}

TEST_CASE("gray-edge mask") {
    for (const ImageBuffer r = gray_edge_mask(ImageBuffer(7, 7, 3, 0.4)); double v : r.data()) CHECK(v == 0.0);

    const ImageBuffer m = gray_edge_mask(gray_impulse(5));
    CHECK(std::abs(m.at(2, 2) - 1.0) < 1e-6);
    for (auto [x, y] : {std::pair{1, 2}, {3, 2}, {2, 1}, {2, 3}}) CHECK(std::abs(m.at(x, y) - 0.5) < 1e-6);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(1, 1) == 0.0);

    const ImageBuffer gt = testutil::random_image(12, 12, 3, 8);
    const ImageBuffer mask = gray_edge_mask(gt);
    ImageBuffer lap = laplacian(to_grayscale(gt));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        CHECK(mask.data()[i] >= 0.0);
        CHECK(mask.data()[i] <= 1.0);
        for (std::size_t j = 0; j < mask.size(); ++j) {
            if (std::abs(lap.data()[i]) < std::abs(lap.data()[j])) CHECK(mask.data()[i] <= mask.data()[j]);
        }
    }
}

TEST_CASE("gray term") {
    const ImageBuffer gt = gray_impulse(9);
    CHECK(loss_gray(gt, gt) == 0.0);
    CHECK(loss_gray(testutil::random_image(9, 9, 3, 9), ImageBuffer(9, 9, 3, 0.3)) == 0.0);
    const ImageBuffer pred = plus(gt, 0.1);
    CHECK(loss_gray(pred, gt) == doctest::Approx(0.1 * mean_of(gray_edge_mask(gt))).epsilon(1e-12));

    // Errors where the mask vanishes do not count.
    ImageBuffer far = pred;
    for (std::size_t c = 0; c < 3; ++c) far.at(0, 0, c) += 0.5;
    CHECK(loss_gray(far, gt) == loss_gray(pred, gt));
}

TEST_CASE("bright mask") {
    const BrightMask flat = bright_mask(ImageBuffer(6, 6, 3, 0.42));
    CHECK(flat.tau == doctest::Approx(0.42).epsilon(1e-14));
    for (double v : flat.mask.data()) CHECK(v == 1.0);

    const ImageBuffer ramp = gray_ramp();
    const BrightMask bm = bright_mask(ramp);
    std::vector<double> sorted = to_grayscale(ramp).data();
    std::sort(sorted.begin(), sorted.end());
    const double pos = 0.85 * 99.0;
    const auto lo = static_cast<std::size_t>(pos);
    const double tau = sorted[lo] + (pos - lo) * (sorted[lo + 1] - sorted[lo]);
    CHECK(bm.tau == tau);
    const ImageBuffer gray = to_grayscale(ramp);
    std::size_t count = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(bm.mask.data()[i] == (gray.data()[i] >= tau ? 1.0 : 0.0));
        count += bm.mask.data()[i] == 1.0;
    }
    CHECK(count == 15);

    const ImageBuffer img = testutil::random_image(20, 20, 3, 10);
    const BrightMask r = bright_mask(img);
    double covered = 0.0;
    for (double v : r.mask.data()) {
        CHECK((v == 0.0 || v == 1.0));
        covered += v;
    }
    CHECK(covered / 400.0 >= 0.10);
    CHECK(covered / 400.0 <= 0.20);
}

TEST_CASE("bright term") {
    const ImageBuffer gt = testutil::random_image(10, 10, 3, 11, 0.1, 0.8);
    CHECK(loss_bright(gt, gt) == 0.0);
    const ImageBuffer pred = plus(gt, 0.1);
    CHECK(loss_bright(pred, gt) == doctest::Approx(0.1 * mean_of(bright_mask(pred).mask)).epsilon(1e-12));

    // Shrinking the error on pixels below the threshold leaves the term unchanged.
    const ImageBuffer ramp = gray_ramp();
    const ImageBuffer target = plus(ramp, -0.05);
    const double tau = bright_mask(ramp).tau;
    ImageBuffer closer = ramp;
    const ImageBuffer gray = to_grayscale(ramp);
    for (std::size_t i = 0; i < 100; ++i) {
        if (gray.data()[i] < 0.5) {
            for (std::size_t c = 0; c < 3; ++c) closer.data()[c * 100 + i] -= 0.03;
        }
    }
    CHECK(bright_mask(closer).tau == tau);
    CHECK(loss_bright(closer, target) == doctest::Approx(loss_bright(ramp, target)).epsilon(1e-14));
}

TEST_CASE("compound loss") {
    const ImageBuffer gt = testutil::random_image(16, 16, 3, 12);
    const LossReport zero = compound_loss(gt, gt, identity_maps(16, 16));
    CHECK(zero.total == 0.0);
    CHECK(zero.feat_excluded);

    // Constant images make every term available in closed form.
    const double a = 0.4;
    const double b = 0.5;
    const LossReport r = compound_loss(ImageBuffer(16, 16, 3, b), ImageBuffer(16, 16, 3, a), identity_maps(16, 16));
    const double rgb = (std::sqrt(0.01 + 1e-6) - 1e-3) + 0.1;
    const double ssim_loss = 1.0 - (2 * a * b + 1e-4) / (a * a + b * b + 1e-4);
    CHECK(r.rgb == doctest::Approx(rgb).epsilon(1e-12));
    CHECK(r.chroma == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(r.ssim == doctest::Approx(ssim_loss).epsilon(1e-12));
    CHECK(r.edge == 0.0);
    CHECK(r.reg == 0.0);
    CHECK(r.gray == 0.0);
    CHECK(r.bright == doctest::Approx(0.1).epsilon(1e-12));
    const double hand = rgb + 0.5 * 0.05 + 0.2 * ssim_loss + 0.8 * 0.1;
    CHECK(r.total == doctest::Approx(hand).epsilon(1e-12));

    const ImageBuffer pred = testutil::random_image(16, 16, 3, 13);
    LossWeights w;
    const LossReport base = compound_loss(pred, gt, identity_maps(16, 16), w);
    w.rgb *= 2.0;
    const LossReport doubled = compound_loss(pred, gt, identity_maps(16, 16), w);
    CHECK(doubled.total - base.total == doctest::Approx(base.rgb).epsilon(1e-12));
    CHECK(doubled.chroma == base.chroma);
}

TEST_CASE("evaluator matches the free functions") {
    const ImageBuffer gt = testutil::random_image(20, 18, 3, 14);
    const ImageBuffer pred = testutil::random_image(20, 18, 3, 15);
    CorrectionMaps maps = identity_maps(20, 18);
    maps.mul = testutil::random_image(20, 18, 1, 16, 0.1, 6.0);
    const LossWeights w{};
    const LossReport a = compound_loss(pred, gt, maps, w);
    const LossReport b = ObjectiveEvaluator(gt, w).evaluate(pred, maps);
    CHECK(a.total == doctest::Approx(b.total).epsilon(1e-12));
    CHECK(a.total == doctest::Approx(weighted_total(a, w)).epsilon(1e-12));
    for (double v : {a.rgb, a.chroma, a.ssim, a.edge, a.reg, a.mse, a.gray, a.bright}) CHECK(v >= 0.0);
}

TEST_CASE("weights and shapes are validated") {
    LossWeights w;
    w.feat = 0.5;
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
    w = {};
    w.gray = -1.0;
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
    CHECK_THROWS_AS(loss_rgb(ImageBuffer(2, 2, 3), ImageBuffer(2, 3, 3)), ShapeMismatch);
    CHECK_THROWS_AS(loss_gray(ImageBuffer(2, 2, 1), ImageBuffer(2, 2, 1)), ShapeMismatch);
}

}
