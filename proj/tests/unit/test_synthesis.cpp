#include <doctest.h>

#include "fixtures.hpp"

#include <flarekit/error.hpp>
#include <flarekit/scene.hpp>
#include <flarekit/synthesis.hpp>

#include <cmath>
#include <vector>

using namespace flarekit;

namespace {

BracketPair small_pair(std::uint64_t seed) {
    SceneConfig sc;
    sc.width = 96;
    sc.height = 80;
    sc.light_radius = {3.0, 5.0};
    sc.edge_margin = 12.0;
    sc.min_center_distance = 10.0;
    Rng rng(seed);
    return make_bracket_pair(render_scene(sc, rng));
}

SynthesisConfig small_config() {
    SynthesisConfig cfg;
    cfg.resize_width = 96;
    cfg.resize_height = 80;
    cfg.crop = 64;
    return cfg;
}

double tent(const Image& img, double x, double y, int c) {
    double v = 0.0;
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    for (int yi = y0; yi <= y0 + 1; ++yi)
        for (int xi = x0; xi <= x0 + 1; ++xi) {
            if (xi < 0 || yi < 0 || xi >= img.width() || yi >= img.height()) continue;
            v += std::max(0.0, 1.0 - std::abs(x - xi)) * std::max(0.0, 1.0 - std::abs(y - yi)) * img.at(xi, yi, c);
        }
    return v;
}

// The forward model evaluated pixel by pixel with a dense blur.
struct Reference {
    std::vector<double> flare, background;
};

Reference reference_model(const PreparedPair& pair, const SynthesisParams& p) {
    const int n = p.crop_size;
    const double g = p.gamma;
    std::vector<double> low(n * n * 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int c = 0; c < 3; ++c)
                low[(y * n + x) * 3 + c] =
                    std::pow(tent(pair.low, p.crop_x + x - p.tx, p.crop_y + y - p.ty, c), g) * p.gains[c];
    std::vector<double> blurred = low;
    if (p.blur_sigma > 0.0) {
        const int r = static_cast<int>(std::ceil(3.0 * p.blur_sigma));
        double wsum = 0.0;
        for (int j = -r; j <= r; ++j)
            for (int i = -r; i <= r; ++i) wsum += std::exp(-(i * i + j * j) / (2 * p.blur_sigma * p.blur_sigma));
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int j = -r; j <= r; ++j)
                        for (int i = -r; i <= r; ++i) {
                            const int xi = std::clamp(x + i, 0, n - 1), yi = std::clamp(y + j, 0, n - 1);
                            acc += std::exp(-(i * i + j * j) / (2 * p.blur_sigma * p.blur_sigma)) *
                                   low[(yi * n + xi) * 3 + c];
                        }
                    blurred[(y * n + x) * 3 + c] = acc / wsum;
                }
    }
    Image b(n, n, Domain::linear());
    for (std::size_t i = 0; i < blurred.size(); ++i) b.samples()[i] = static_cast<float>(blurred[i]);
    Reference ref;
    ref.flare.resize(n * n * 3);
    ref.background.resize(n * n * 3);
    const double cc = (n - 1) * 0.5;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int c = 0; c < 3; ++c) {
                const std::size_t k = (y * n + x) * 3 + c;
                ref.flare[k] = std::clamp(tent(b, 2 * cc - x, 2 * cc - y, c) * p.opacity, 0.0, 1.0);
                const double bg = std::pow(pair.normal.at(p.crop_x + x, p.crop_y + y, c), g) + p.offsets[c];
                ref.background[k] = std::clamp(bg, 0.0, 1.0);
            }
    return ref;
}

} // namespace

TEST_CASE("resize target follows orientation") {
    const SynthesisConfig cfg;
    CHECK(resized_size(cfg, 4000, 3000) == std::array<int, 2>{1200, 800});
    CHECK(resized_size(cfg, 3000, 4000) == std::array<int, 2>{800, 1200});
    CHECK(resized_size(cfg, 1000, 1000) == std::array<int, 2>{1200, 800});
}

TEST_CASE("sampled parameters respect the configured ranges") {
    const SynthesisConfig cfg;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng rng(s);
        const SynthesisParams p = sample_params(cfg, 1200, 800, rng);
        CHECK(p.gamma >= 1.8);
        CHECK(p.gamma <= 2.2);
        CHECK(std::hypot(p.tx, p.ty) <= 15.0 + 1e-12);
        CHECK(p.crop_x >= 0);
        CHECK(p.crop_x + 512 <= 1200);
        CHECK(p.crop_y + 512 <= 800);
        for (double g : p.gains) CHECK((g >= 0.5 && g <= 1.2));
        for (double o : p.offsets) CHECK(std::abs(o) <= 0.02);
        CHECK(p.blur_sigma <= 3.0);
        CHECK((p.opacity >= 0.3 && p.opacity <= 1.0));
        CHECK(p.noise_sigma <= 0.02);
        CHECK(p.seed == s);
    }
    Rng a(5), b(5);
    CHECK(sample_params(cfg, 1200, 800, a) == sample_params(cfg, 1200, 800, b));
}

TEST_CASE("collapsed ranges pin the sampled values") {
    SynthesisConfig cfg;
    cfg.translate_max = 0.0;
    cfg.blur_sigma = {1.5, 1.5};
    cfg.gamma = {2.0, 2.0};
    Rng rng(3);
    const SynthesisParams p = sample_params(cfg, 1200, 800, rng);
    CHECK(p.tx == 0.0);
    CHECK(p.blur_sigma == 1.5);
    CHECK(p.gamma == 2.0);
}

TEST_CASE("rendered triplet matches a per-pixel reference") {
    const SynthesisConfig cfg = small_config();
    const PreparedPair pair = prepare_pair(small_pair(2), cfg);
    Rng rng(11);
    SynthesisParams p = sample_params(cfg, 96, 80, rng);
    p.noise_sigma = 0.0;
    p.tx = 2.3;
    p.ty = -1.6;
    p.blur_sigma = 1.2;
    const FlareTriplet t = render_triplet(pair, cfg, p);
    const Reference ref = reference_model(pair, p);
    const Image flare = decode_gamma(t.flare);
    const Image bg = decode_gamma(t.flare_free);
    const Image cor = decode_gamma(t.corrupted);
    double ef = 0.0, eb = 0.0, ec = 0.0;
    for (std::size_t k = 0; k < ref.flare.size(); ++k) {
        ef = std::max(ef, std::abs(flare.samples()[k] - ref.flare[k]));
        eb = std::max(eb, std::abs(bg.samples()[k] - ref.background[k]));
        ec = std::max(ec, std::abs(cor.samples()[k] - std::min(1.0, ref.flare[k] + ref.background[k])));
    }
    CHECK(ef < 1e-5);
    CHECK(eb < 1e-5);
    CHECK(ec < 1e-5);
    CHECK(t.corrupted.domain() == Domain::encoded(p.gamma));
}

TEST_CASE("decomposition identity and mask definition") {
    const SynthesisConfig cfg = small_config();
    const PreparedPair pair = prepare_pair(small_pair(3), cfg);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const FlareTriplet t = synthesize_triplet(pair, cfg, seed);
        const Image c = decode_gamma(t.corrupted), b = decode_gamma(t.flare_free), f = decode_gamma(t.flare);
        double worst = 0.0;
        for (std::size_t k = 0; k < c.sample_count(); ++k) {
            worst = std::max(worst, static_cast<double>(std::abs(c.samples()[k] - std::min(1.0f, b.samples()[k] + f.samples()[k]))));
        }
        CHECK(worst <= 1e-5);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const float m = std::max({t.flare.at(x, y, 0), t.flare.at(x, y, 1), t.flare.at(x, y, 2)});
                CHECK(t.mask.at(x, y) == (m > cfg.mask_threshold));
            }
    }
}

TEST_CASE("noise has the sampled standard deviation") {
    SynthesisConfig cfg = small_config();
    cfg.crop = 80;
    cfg.color_offset = 0.0;
    cfg.noise_sigma = {0.01, 0.01};
    // flat mid-grey bracket: no clipping at either bound
    BracketPair pair;
    pair.normal = Image::filled(96, 80, 0.6f, Domain::encoded(2.2));
    pair.low = Image::filled(96, 80, 0.0f, Domain::encoded(2.2));
    const FlareTriplet t = synthesize_triplet(pair, cfg, 4);
    const Image b = decode_gamma(t.flare_free);
    const double base = std::pow(0.6, t.params.gamma);
    double s = 0.0, s2 = 0.0;
    for (float v : b.samples()) {
        s += v - base;
        s2 += (v - base) * (v - base);
    }
    const double n = static_cast<double>(b.sample_count());
    CHECK(std::abs(s / n) < 5 * 0.01 / std::sqrt(n));
    CHECK(std::sqrt(s2 / n) == doctest::Approx(0.01).epsilon(0.05));
    CHECK(t.params.dark_low);
    CHECK(max_sample(t.flare) == 0.0f);
    CHECK_FALSE(t.mask.any());
}

TEST_CASE("synthesis is deterministic per seed") {
    const SynthesisConfig cfg = small_config();
    const BracketPair pair = small_pair(6);
    const FlareTriplet a = synthesize_triplet(pair, cfg, 42);
    const FlareTriplet b = synthesize_triplet(pair, cfg, 42);
    CHECK(testing::same_samples(a.corrupted, b.corrupted));
    CHECK(testing::same_samples(a.flare, b.flare));
    CHECK(a.params == b.params);
    const FlareTriplet c = synthesize_triplet(pair, cfg, 43);
    CHECK_FALSE(testing::same_samples(a.corrupted, c.corrupted));
}

TEST_CASE("prepare_pair preconditions") {
    const SynthesisConfig cfg = small_config();
    BracketPair pair = small_pair(1);
    CHECK(prepare_pair(pair, cfg).normal.width() == 96);
    SynthesisConfig big = cfg;
    big.resize_width = 200;
    big.resize_height = 150;
    CHECK_THROWS_AS(prepare_pair(pair, big), std::invalid_argument);
    BracketPair bad = pair;
    bad.low = Image(90, 80, Domain::encoded(2.2));
    CHECK_THROWS_AS(prepare_pair(bad, cfg), std::invalid_argument);
    bad = pair;
    bad.low.set_domain(Domain::linear());
    CHECK_THROWS_AS(prepare_pair(bad, cfg), DomainError);
    // larger inputs are resized down
    SynthesisConfig half = cfg;
    half.resize_width = 48;
    half.resize_height = 40;
    half.crop = 32;
    CHECK(prepare_pair(pair, half).low.height() == 40);
}

TEST_CASE("config validation and JSON") {
    SynthesisConfig cfg;
    cfg.crop = 900;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("{\"blur\": 1}"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("{\"gamma\": [2.2, 1.8]}"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("{\"mask_threshold\": 1.5}"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("[1]"), std::invalid_argument);
    const SynthesisConfig j = config_from_json("{\"crop\": 256, \"opacity\": [0.5, 0.6]}");
    CHECK(j.crop == 256);
    CHECK(j.opacity == Range{0.5, 0.6});
    CHECK(j.translate_max == 15.0);
    CHECK(config_from_json(config_to_json(j)) == j);
}

TEST_CASE("params JSON round trip") {
    Rng rng(77);
    const SynthesisParams p = sample_params(SynthesisConfig{}, 1200, 800, rng);
    CHECK(params_from_json(params_to_json(p)) == p);
    CHECK_THROWS_AS(params_from_json("{}"), FormatError);
}
