#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>
#include <unistd.h>

namespace flarekit::testing {

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
        path_ = base / ("flarekit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        if (std::filesystem::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

Image random_image(int width, int height, Domain domain, std::uint64_t seed, double lo, double hi) {
    Image img(width, height, domain);
    Rng rng(seed);
    for (float& v : img.samples()) v = static_cast<float>(rng.uniform(lo, hi));
    return img;
}

BracketPair scene_pair(std::uint64_t seed, int size, int lights) {
    SceneConfig sc;
    sc.width = size;
    sc.height = size;
    sc.lights = lights;
    Rng rng(seed);
    return make_bracket_pair(render_scene(sc, rng), "scene" + std::to_string(seed));
}

SynthesisConfig square_config(int size) {
    SynthesisConfig cfg;
    cfg.resize_width = size;
    cfg.resize_height = size;
    cfg.crop = size;
    return cfg;
}

GridCase grid_truth_case(std::uint64_t seed, int index, bool noisy) {
    const SynthesisConfig cfg = square_config(512);
    SceneConfig sc;
    sc.width = 512;
    sc.height = 512;
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(index)));
    const Scene scene = render_scene(sc, rng);
    const PreparedPair pair = prepare_pair(make_bracket_pair(scene), cfg);
    SynthesisParams p = sample_params(cfg, 512, 512, rng);
    if (!noisy) p.noise_sigma = 0.0;
    p.offsets = {0.0, 0.0, 0.0};
    p.blur_sigma = 0.5 * static_cast<int>(rng.uniform(0.0, 9.0));
    const int gx = static_cast<int>(rng.uniform(0.0, 11.0));
    const int gy = static_cast<int>(rng.uniform(0.0, 11.0));
    GridCase out;
    out.sigma = p.blur_sigma;
    out.dx = -15.0 + 3.0 * gx;
    out.dy = -15.0 + 3.0 * gy;
    p.tx = -out.dx;
    p.ty = -out.dy;
    p.translate_magnitude = std::hypot(p.tx, p.ty);
    p.translate_angle = std::atan2(p.ty, p.tx);
    out.triplet = render_triplet(pair, cfg, p);
    const SceneLight& light = scene.lights.front();
    const int lx = static_cast<int>(std::lround(light.x));
    const int ly = static_cast<int>(std::lround(light.y));
    for (int c = 0; c < 3; ++c) {
        out.gains[c] = p.opacity * p.gains[c] * std::pow(static_cast<double>(pair.low.at(lx, ly, c)), p.gamma);
    }
    return out;
}

optics::LensPrescription random_prescription(Rng& rng) {
    optics::LensPrescription lens;
    lens.object_distance = rng.uniform(1.0, 5.0);
    const int n = 3 + static_cast<int>(rng.uniform(0.0, 4.0));
    for (int i = 0; i < n; ++i) {
        optics::Surface s;
        s.curvature = rng.uniform(-0.05, 0.05);
        s.thickness = i + 1 < n ? rng.uniform(1.0, 8.0) : 0.0;
        s.index = (i % 2 == 0 && i + 1 < n) ? rng.uniform(1.4, 1.9) : 1.0;
        lens.surfaces.push_back(s);
    }
    lens.sensor_distance = rng.uniform(5.0, 20.0);
    const auto first = 1 + static_cast<std::size_t>(rng.uniform(0.0, n - 1.0));
    const auto second = static_cast<std::size_t>(rng.uniform(0.0, static_cast<double>(first)));
    lens.ghost = optics::GhostPath{first, second};
    return lens;
}

double max_ray_height(const std::vector<optics::TransferMatrix>& chain, optics::RayState ray) {
    double m = std::abs(ray.height);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        ray = *it * ray;
        m = std::max(m, std::abs(ray.height));
    }
    return m;
}

optics::LensPrescription random_paraxial_prescription(Rng& rng, double angle, double bound) {
    for (;;) {
        optics::LensPrescription lens = random_prescription(rng);
        const auto direct = optics::direct_chain(lens);
        const auto ghost = optics::ghost_chain(lens, *lens.ghost);
        bool ok = true;
        for (double h : {0.0, 0.01}) {
            ok = ok && max_ray_height(direct, {h, angle}) <= bound && max_ray_height(ghost, {h, angle}) <= bound;
        }
        if (ok) return lens;
    }
}

std::filesystem::path bundled_lens() { return std::filesystem::path(FLAREKIT_TEST_DATA_DIR) / "lenses/symmetric5.lens"; }

bool same_samples(const Image& a, const Image& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.samples().data(), b.samples().data(), a.sample_count() * sizeof(float)) == 0;
}

} // namespace flarekit::testing
