#include <doctest.h>

#include "fixtures.hpp"

#include <flarekit/error.hpp>
#include <flarekit/quality.hpp>

#include <cmath>

using namespace flarekit;
using flarekit::testing::random_image;

namespace {

Image gray2x2(float a, float b, float c, float d) {
    Image img(2, 2, Domain::encoded(2.2));
    const float v[4] = {a, b, c, d};
    for (int i = 0; i < 4; ++i)
        for (int ch = 0; ch < 3; ++ch) img.at(i % 2, i / 2, ch) = v[i];
    return img;
}

Image plus(const Image& img, float d) {
    Image out = img;
    for (float& v : out.samples()) v += d;
    return out;
}

} // namespace

TEST_CASE("l1 basics") {
    const Image x = random_image(8, 8, Domain::encoded(2.2), 1);
    const Image y = random_image(8, 8, Domain::encoded(2.2), 2);
    CHECK(l1(x, x) == 0.0);
    CHECK(l1(Image(4, 4), Image::filled(4, 4, 0.3f, Domain::encoded(2.2))) == doctest::Approx(0.3));
    CHECK(l1(x, y) == l1(y, x));
    CHECK(l1(scale(x, 3.0), scale(y, 3.0)) == doctest::Approx(3.0 * l1(x, y)));
    CHECK_THROWS_AS(l1(x, Image(7, 8)), std::invalid_argument);
}

TEST_CASE("masked l1") {
    const Image x = random_image(8, 6, Domain::encoded(2.2), 3);
    const Image y = random_image(8, 6, Domain::encoded(2.2), 4);
    CHECK(masked_l1(x, y, Mask(8, 6, true)) == l1(x, y));
    CHECK(masked_l1(x, y, Mask(8, 6)) == 0.0);
    // left half differs by 0.2, right half by 0.6
    Image a(8, 6), b(8, 6);
    Mask left(8, 6);
    for (int yy = 0; yy < 6; ++yy)
        for (int xx = 0; xx < 8; ++xx) {
            for (int c = 0; c < 3; ++c) b.at(xx, yy, c) = xx < 4 ? 0.2f : 0.6f;
            left.set(xx, yy, xx < 4);
        }
    CHECK(masked_l1(a, b, left) == doctest::Approx(0.2));
    CHECK(l1(a, b) == doctest::Approx(0.4));
    CHECK_THROWS_AS(masked_l1(a, b, Mask(3, 3)), std::invalid_argument);
}

TEST_CASE("gradient pyramid planes") {
    const Image img = gray2x2(0.2f, 0.4f, 0.6f, 0.8f);
    const auto planes = GradientPyramid(3).extract(img);
    // level 0: luma, dx, dy; level 1: 1x1 luma only; level 2 would be empty
    REQUIRE(planes.size() == 4);
    CHECK(planes[1].width == 1);
    CHECK(planes[1].values[0] == doctest::Approx(0.2f));
    CHECK(planes[2].values[1] == doctest::Approx(0.4f));
    CHECK(planes[3].values[0] == doctest::Approx(0.5f));
    CHECK_THROWS_AS(GradientPyramid(0), std::invalid_argument);
}

TEST_CASE("background loss with default weights, computed by hand") {
    const Image est = gray2x2(0.2f, 0.4f, 0.6f, 0.8f);
    const Image gt = gray2x2(0, 0, 0, 0);
    Mask m(2, 2);
    m.set(0, 0, true);
    // l1 = 0.5; features: (0.5 + 0.2 + 0.4 + 0.5) / 4 = 0.4; masked = 0.2
    const GradientPyramid f;
    CHECK(background_loss(est, gt, m, f) == doctest::Approx(0.5 * 0.5 + 0.1 * 0.4 + 20.0 * 0.2));
    CHECK(flare_loss(est, gt, m, f) == doctest::Approx(4.29));
    CHECK(background_loss(est, gt, m, f, {1.0, 0.0, 0.0}) == doctest::Approx(l1(est, gt)));
    CHECK(background_loss(est, gt, m, f, {0.0, 0.0, 1.0}) == doctest::Approx(0.2));
    CHECK(background_loss(est, est, m, f) == 0.0);
    const LossWeights w;
    CHECK(w.w1 == 0.5);
    CHECK(w.w2 == 0.1);
    CHECK(w.w3 == 20.0);
}

TEST_CASE("precomputed features are looked up by image") {
    const Image a = gray2x2(0, 0, 0, 0), b = gray2x2(1, 1, 1, 1);
    PrecomputedFeatures f;
    f.add(a, {{2, 1, {1.0f, 2.0f}}, {1, 1, {0.0f}}});
    f.add(b, {{2, 1, {1.5f, 1.0f}}, {1, 1, {3.0f}}});
    // plane means 0.75 and 3, averaged
    CHECK(feature_l1(f, a, b) == doctest::Approx((0.75 + 3.0) / 2.0));
    CHECK_THROWS_AS(f.extract(gray2x2(0, 0, 0, 1)), std::out_of_range);
}

TEST_CASE("reconstruction loss") {
    const Image bg = random_image(6, 6, Domain::encoded(2.2), 7, 0.0, 0.6);
    const Image fl = random_image(6, 6, Domain::encoded(2.2), 8, 0.0, 0.6);
    const Image in = encode_gamma(add(decode_gamma(bg), decode_gamma(fl)), 2.2);
    CHECK(reconstruction_loss(in, bg, fl) < 1e-7);
    CHECK(reconstruction_loss(in, Image(6, 6), in) == 0.0);
    // +eps in linear light on the background
    const double eps = 1e-3;
    Image lin = decode_gamma(bg);
    for (float& v : lin.samples()) v += static_cast<float>(eps);
    CHECK(reconstruction_loss(in, encode_gamma(lin, 2.2), fl) == doctest::Approx(eps).epsilon(1e-3));
    CHECK_THROWS_AS(reconstruction_loss(in, Image(6, 6, Domain::encoded(2.0)), fl), DomainError);
    CHECK_THROWS_AS(reconstruction_loss(decode_gamma(in), bg, fl), DomainError);
}

TEST_CASE("total loss") {
    const Image in = random_image(16, 16, Domain::encoded(2.2), 9);
    const Image bg = random_image(16, 16, Domain::encoded(2.2), 10);
    const Image fl = random_image(16, 16, Domain::encoded(2.2), 11);
    const Image fe = random_image(16, 16, Domain::encoded(2.2), 12);
    Mask m(16, 16);
    m.set(3, 3, true);
    const GradientPyramid f;
    const LossBreakdown perfect = total_loss(in, bg, bg, fl, fl, m, f);
    CHECK(perfect.flare == 0.0);
    CHECK(perfect.background == 0.0);
    const LossBreakdown b = total_loss(in, bg, fe, fl, fe, m, f);
    CHECK(b.total == doctest::Approx(b.reconstruction + b.flare + b.background));
    CHECK(b.flare == doctest::Approx(flare_loss(fl, fe, m, f)));
    CHECK(b.total >= 0.0);
}

TEST_CASE("psnr") {
    const Image x = random_image(10, 10, Domain::encoded(2.2), 13, 0.0, 0.8);
    CHECK(psnr(x, plus(x, 0.1f)) == doctest::Approx(20.0).epsilon(1e-5));
    CHECK(psnr(x, x) == kPsnrCap);
    CHECK(psnr(x, plus(x, 0.1f), 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-5));
    const Image y = random_image(10, 10, Domain::encoded(2.2), 14);
    CHECK(psnr(x, y) == psnr(y, x));
}

TEST_CASE("masked psnr") {
    const Image x = random_image(10, 10, Domain::encoded(2.2), 15);
    const Image y = random_image(10, 10, Domain::encoded(2.2), 16);
    CHECK(masked_psnr(x, y, Mask(10, 10, true)) == psnr(x, y));
    CHECK(masked_psnr(x, y, Mask(10, 10)) == kPsnrCap);
    Image z = x;
    z.at(0, 0, 1) += 0.5f;
    Mask m(10, 10, true);
    m.set(0, 0, false);
    CHECK(masked_psnr(x, z, m) == kPsnrCap);
}

TEST_CASE("ssim") {
    const Image x = random_image(64, 64, Domain::encoded(2.2), 17);
    CHECK(ssim(x, x) == doctest::Approx(1.0));
    const Image y = random_image(64, 64, Domain::encoded(2.2), 18);
    CHECK(std::abs(ssim(x, y)) < 0.05);
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)));
    const Image flat = Image::filled(64, 64, 0.5f, Domain::encoded(2.2));
    CHECK(ssim(flat, plus(flat, 0.1f)) < 1.0);
    CHECK(ssim(x, gaussian_blur(x, 1.0)) < ssim(x, gaussian_blur(x, 0.5)));
    CHECK_THROWS_AS(ssim(Image(10, 10), Image(10, 10)), std::invalid_argument);
}

TEST_CASE("ssim of a constant offset follows the luminance term") {
    // flat images: variances are zero, so ssim = (2 mu_x mu_y + C1) / (mu_x^2 + mu_y^2 + C1)
    const Image a = Image::filled(20, 20, 0.4f, Domain::encoded(2.2));
    const Image b = Image::filled(20, 20, 0.6f, Domain::encoded(2.2));
    const double c1 = 1e-4;
    CHECK(ssim(a, b) == doctest::Approx((2 * 0.4 * 0.6 + c1) / (0.16 + 0.36 + c1)).epsilon(1e-5));
}
