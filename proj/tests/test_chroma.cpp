#include "nakags/chroma.hpp"
#include "nakags/errors.hpp"
#include "nakags/fit.hpp"
#include "nakags/naka.hpp"
#include "nakags/objective.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace nakags;

TEST_SUITE("chroma") {

TEST_CASE("identity maps") {
    const CorrectionMaps m = identity_maps(4, 4);
    CHECK(m.width() == 4);
    CHECK(m.height() == 4);
    CHECK(m.mul.channels() == 1);
    CHECK(m.add.channels() == 3);
    CHECK(loss_reg(m) == 0.0);

    const ImageBuffer naka = testutil::random_image(20, 16, 3, 1);
    const ImageBuffer out = apply_correction(naka, identity_maps(20, 16), BlurParams{});
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out.data()[i] - naka.data()[i]) < 1e-7);
}

TEST_CASE("zero gain keeps only the high band") {
    const ImageBuffer naka = testutil::random_image(16, 16, 3, 2);
    const FrequencyPair f = frequency_decompose(naka, {});
    CorrectionMaps m = identity_maps(16, 16);
    for (double& v : m.mul.data()) v = 0.0;
    const ImageBuffer out = apply_correction(naka, m, {});
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out.data()[i] == doctest::Approx(std::clamp(f.high_freq.data()[i], 0.0, 1.0)).epsilon(1e-14));
    }
}

TEST_CASE("gain and offset on a constant image") {
    const double c = 0.35;
    CorrectionMaps m = identity_maps(8, 8);
    for (double& v : m.mul.data()) v = 2.0;
    for (double& v : m.add.data()) v = -c;
    for (const ImageBuffer r = apply_correction(ImageBuffer(8, 8, 3, c), m, {}); double v : r.data()) {
        CHECK(v == doctest::Approx(c).epsilon(1e-14));
    }
}

TEST_CASE("output is clipped to the unit range") {
    const ImageBuffer naka = testutil::random_image(12, 12, 3, 3);
    CorrectionMaps m = identity_maps(12, 12);
    const ImageBuffer mul_noise = testutil::random_image(12, 12, 1, 4, 0.0, 4.0);
    const ImageBuffer add_noise = testutil::random_image(12, 12, 3, 5, -1.0, 1.0);
    m.mul = mul_noise;
    m.add = add_noise;
    for (const ImageBuffer r = apply_correction(naka, m, {}); double v : r.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("high band passes through untouched where nothing clips") {
    const ImageBuffer naka = testutil::random_image(24, 24, 3, 6, 0.3, 0.6);
    const FrequencyPair f = frequency_decompose(naka, {});
    CorrectionMaps m = identity_maps(24, 24);
    for (double& v : m.mul.data()) v = 0.8;
    for (double& v : m.add.data()) v = 0.05;
    const ImageBuffer out = apply_correction(naka, m, {});
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double base = f.low_freq.data()[i] * 0.8 + 0.05;
        CHECK(std::abs(out.data()[i] - base - f.high_freq.data()[i]) < 1e-12);
    }
}

TEST_CASE("map validation and shape errors") {
    CorrectionMaps m = identity_maps(4, 4);
    m.mul.at(1, 1) = -0.1;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    CHECK_THROWS_AS(apply_correction(ImageBuffer(5, 4, 3), identity_maps(4, 4), {}), ShapeMismatch);
    CHECK_THROWS_AS(apply_correction(ImageBuffer(4, 4, 1), identity_maps(4, 4), {}), ShapeMismatch);
}

TEST_CASE("bilinear upsampling") {
    CorrectionMaps one = identity_maps(1, 1);
    one.mul.at(0, 0) = 1.3;
    const CorrectionMaps big = upsample_maps(one, 7, 5);
    for (double v : big.mul.data()) CHECK(v == 1.3);

    const CorrectionMaps same = upsample_maps(big, 7, 5);
    CHECK(same == big);

    const ImageBuffer row(2, 1, 1, std::vector<double>{0.0, 1.0});
    const ImageBuffer up = upsample_bilinear(row, 3, 1);
    CHECK(up.at(0, 0) == 0.0);
    CHECK(up.at(1, 0) == 0.5);
    CHECK(up.at(2, 0) == 1.0);

    // Corner-aligned: corners reproduce the coarse corners exactly.
    const ImageBuffer coarse = testutil::random_image(4, 3, 1, 8);
    const ImageBuffer fine = upsample_bilinear(coarse, 10, 7);
    CHECK(fine.at(0, 0) == coarse.at(0, 0));
    CHECK(fine.at(9, 0) == coarse.at(3, 0));
    CHECK(fine.at(0, 6) == coarse.at(0, 2));
    CHECK(fine.at(9, 6) == coarse.at(3, 2));
    CHECK_THROWS_AS(upsample_bilinear(coarse, 3, 3), InvalidArgument);
}

}

TEST_SUITE("fit") {

namespace {

struct Scene {
    ImageBuffer low;
    ImageBuffer naka;
    ImageBuffer gt;
};

Scene tinted_scene(std::size_t size, std::uint64_t seed) {
    Scene s;
    const ImageBuffer base = gaussian_blur(testutil::random_image(size, size, 3, seed, 0.1, 0.9), {1.5});
    s.gt = base;
    s.low = base;
    for (double& v : s.low.data()) v = 0.1 * std::pow(v, 2.2);
    s.naka = naka_transform(s.low, {});
    return s;
}

}  // namespace

TEST_CASE("zero iterations returns identity with a single trace entry") {
    const Scene s = tinted_scene(24, 1);
    FitConfig cfg;
    cfg.iterations = 0;
    const FitResult r = fit_correction(s.low, s.naka, s.gt, cfg);
    CHECK(r.loss_trace.size() == 1);
    CHECK(r.maps == identity_maps(24, 24));
    CHECK(r.accepted_steps == 0);
    CHECK(r.loss_trace[0] == r.initial_report.total);
}

TEST_CASE("loss trace is monotone and improves on a mismatched target") {
    const Scene s = tinted_scene(32, 2);
    FitConfig cfg;
    cfg.grid_w = cfg.grid_h = 4;
    cfg.iterations = 60;
    cfg.seed = 3;
    const FitResult r = fit_correction(s.low, s.naka, s.gt, cfg);
    REQUIRE(r.loss_trace.size() == 61);
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i) CHECK(r.loss_trace[i] <= r.loss_trace[i - 1]);
    CHECK(r.loss_trace.back() < r.loss_trace.front());
    CHECK(r.final_report.total == doctest::Approx(r.loss_trace.back()).epsilon(1e-12));
    CHECK(r.coarse.width() == 4);
    CHECK(r.maps.width() == 32);
    for (double v : r.maps.mul.data()) CHECK(v >= 0.0);
}

TEST_CASE("self-consistent target stays at identity") {
    const Scene s = tinted_scene(24, 4);
    const ImageBuffer gt = apply_correction(s.naka, identity_maps(24, 24), {});
    FitConfig cfg;
    cfg.iterations = 30;
    const FitResult r = fit_correction(s.low, s.naka, gt, cfg);
    CHECK(r.final_report.total <= r.initial_report.total);
    double dev = 0.0;
    for (double v : r.maps.mul.data()) dev += std::abs(v - 1.0);
    for (double v : r.maps.add.data()) dev += std::abs(v);
    CHECK(dev / static_cast<double>(r.maps.mul.size() + r.maps.add.size()) <= 0.05);
}

TEST_CASE("fitting is deterministic for a seed") {
    const Scene s = tinted_scene(24, 5);
    FitConfig cfg;
    cfg.grid_w = cfg.grid_h = 3;
    cfg.iterations = 25;
    cfg.seed = 9;
    const FitResult a = fit_correction(s.low, s.naka, s.gt, cfg);
    const FitResult b = fit_correction(s.low, s.naka, s.gt, cfg);
    CHECK(a.maps == b.maps);
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("fit rejects bad configuration and shapes") {
    const Scene s = tinted_scene(16, 6);
    FitConfig cfg;
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(fit_correction(s.low, s.naka, s.gt, cfg), InvalidArgument);
    CHECK_THROWS_AS(fit_correction(s.low, s.naka, ImageBuffer(16, 15, 3), FitConfig{}), ShapeMismatch);
    LossWeights w;
    w.feat = 1.0;
    CHECK_THROWS_AS(fit_correction(s.low, s.naka, s.gt, FitConfig{}, w), InvalidArgument);
}

}
