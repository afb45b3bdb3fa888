#include "nakags/errors.hpp"
#include "nakags/naka.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace nakags;

TEST_SUITE("naka") {

TEST_CASE("response fixed points") {
    for (double n : {0.5, 1.0, 2.0, 4.0}) {
        const NakaParams p{0.05, n};
        CHECK(naka_response(0.0, p) == 0.0);
        CHECK(std::abs(naka_response(0.05, p) - 0.5) < 1e-12);
        CHECK(naka_response(-0.3, p) == 0.0);
    }
    CHECK(naka_response(0.45, {0.05, 1.0}) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("response is monotone in intensity and half-saturation") {
    for (double n : {0.5, 1.0, 2.0, 4.0}) {
        double prev = -1.0;
        for (int i = 0; i <= 1000; ++i) {
            const double r = naka_response(i / 1000.0, {0.05, n});
            CHECK(r > prev);
            CHECK(r < 1.0);
            prev = r;
        }
        double prev_sigma = 2.0;
        for (double sigma = 0.01; sigma < 1.0; sigma += 0.01) {
            const double r = naka_response(0.3, {sigma, n});
            CHECK(r < prev_sigma);
            prev_sigma = r;
        }
    }
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(NakaParams({0.0, 1.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(NakaParams({0.05, -1.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(naka_transform(ImageBuffer(2, 2, 3), {std::nan(""), 1.0}), InvalidArgument);
}

TEST_CASE("transform is per-sample") {
    const ImageBuffer img = testutil::random_image(7, 5, 3, 2);
    const NakaParams p{0.1, 2.0};
    const ImageBuffer out = naka_transform(img, p);
    REQUIRE(out.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.data()[i] == naka_response(img.data()[i], p));
}

TEST_CASE("residual") {
    const ImageBuffer low = testutil::random_image(6, 6, 3, 4);
    for (const ImageBuffer r = residual(low, low); double v : r.data()) CHECK(v == 0.0);
    for (const ImageBuffer r = residual(ImageBuffer(3, 3, 3, 0.1), ImageBuffer(3, 3, 3, 0.7)); double v : r.data()) {
        CHECK(v == doctest::Approx(0.6).epsilon(1e-15));
    }
    // With n = 1, R(I) = I at I = 1 - sigma; the curve amplifies below it.
    const NakaParams p{0.05, 1.0};
    const ImageBuffer dark = testutil::random_image(8, 8, 3, 5, 0.0, 0.95);
    for (const ImageBuffer r = residual(dark, naka_transform(dark, p)); double v : r.data()) CHECK(v >= 0.0);
    CHECK_THROWS_AS(residual(low, ImageBuffer(6, 5, 3)), ShapeMismatch);
}

TEST_CASE("dual-branch layout and standardization") {
    const ImageBuffer low = testutil::random_image(9, 7, 3, 6, 0.0, 0.2);
    const ImageBuffer naka = naka_transform(low, {});
    const DualBranchInput in = build_dual_branch(low, naka);
    REQUIRE(in.raw.channels() == 9);
    REQUIRE(in.normalized.channels() == 9);
    REQUIRE(in.combined.channels() == 18);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(in.combined.channel(c) == low.channel(c));
        CHECK(in.raw.channel(3 + c) == naka.channel(c));
    }
    for (std::size_t c = 0; c < 9; ++c) {
        CHECK(in.combined.channel(9 + c) == in.normalized.channel(c));
        const auto raw = in.raw.plane(c);
        const auto norm = in.normalized.plane(c);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            CHECK(std::abs(norm[i] * in.stddevs[c] + in.means[c] - raw[i]) < 1e-5);
        }
    }
}

TEST_CASE("dual-branch handles constant and two-valued channels") {
    ImageBuffer low(2, 1, 3, 0.2);
    low.at(0, 0, 1) = 0.0;
    low.at(1, 0, 1) = 1.0;
    const ImageBuffer naka(2, 1, 3, 0.5);
    const DualBranchInput in = build_dual_branch(low, naka);
    for (double v : in.normalized.plane(0)) CHECK(v == 0.0);
    CHECK(std::abs(in.normalized.at(0, 0, 1) + 1.0) < 1e-4);
    CHECK(std::abs(in.normalized.at(1, 0, 1) - 1.0) < 1e-4);
    for (double v : in.normalized.plane(3)) CHECK(v == 0.0);
    CHECK_THROWS_AS(build_dual_branch(ImageBuffer(2, 1, 1), ImageBuffer(2, 1, 1)), ShapeMismatch);
}

TEST_CASE("frequency decomposition") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ImageBuffer img = testutil::random_image(32, 24, 3, 100 + seed);
        const FrequencyPair f = frequency_decompose(img, {});
        for (std::size_t i = 0; i < img.size(); ++i) {
            CHECK(std::abs(f.low_freq.data()[i] + f.high_freq.data()[i] - img.data()[i]) < 1e-6);
        }
    }
    for (double v : frequency_decompose(ImageBuffer(10, 10, 3, 0.4), {}).high_freq.data()) {
        CHECK(std::abs(v) < 1e-14);
    }
    double sum = 0.0;
    for (int k = -3; k <= 3; ++k) sum += std::exp(-0.5 * k * k);
    ImageBuffer impulse(15, 15, 1);
    impulse.at(7, 7) = 1.0;
    const FrequencyPair f = frequency_decompose(impulse, {1.0, 0, Boundary::Reflect});
    CHECK(f.high_freq.at(7, 7) == doctest::Approx(1.0 - 1.0 / (sum * sum)).epsilon(1e-14));
}

}
