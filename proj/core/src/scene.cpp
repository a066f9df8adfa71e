#include "flarekit/scene.hpp"

#include "flarekit/error.hpp"
#include "flarekit/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace flarekit {

namespace {

constexpr double kSceneGamma = 2.2;

Image smooth_background(const SceneConfig& cfg, Rng& rng) {
    // a few low-frequency waves per channel, remapped into the radiance range
    struct Wave {
        double fx, fy, phase, amp;
    };
    const double span = cfg.background.hi - cfg.background.lo;
    const double base = rng.uniform(0.3, 0.7);
    ChannelGains tint;
    for (auto& t : tint) t = rng.uniform(0.8, 1.0);
    std::vector<Wave> waves(4);
    for (auto& w : waves) {
        const double period = rng.uniform(150.0, 600.0);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        w.fx = 2.0 * std::numbers::pi * std::cos(angle) / period;
        w.fy = 2.0 * std::numbers::pi * std::sin(angle) / period;
        w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.amp = rng.uniform(0.05, 0.12);
    }
    Image img(cfg.width, cfg.height, Domain::linear());
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            double v = base;
            for (const auto& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
            v = std::clamp(v, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = static_cast<float>(cfg.background.lo + span * v * tint[c]);
            }
        }
    }
    return img;
}

bool far_enough(const SceneLight& l, const std::vector<SceneLight>& placed, double cx, double cy) {
    // keep every light clear of the other lights and of their mirror images
    for (const auto& o : placed) {
        const double reach = l.radius + o.radius + 60.0;
        if (std::hypot(l.x - o.x, l.y - o.y) < reach) return false;
        if (std::hypot(l.x - (2 * cx - o.x), l.y - (2 * cy - o.y)) < reach) return false;
    }
    return true;
}

} // namespace

Scene render_scene(const SceneConfig& cfg, Rng& rng) {
    if (cfg.width < 1 || cfg.height < 1) throw std::invalid_argument("scene size must be positive");
    if (cfg.lights < 0) throw std::invalid_argument("scene light count must be >= 0");
    Scene scene;
    scene.exposure_gap = cfg.exposure_gap;
    scene.radiance = smooth_background(cfg, rng);

    const double cx = (cfg.width - 1) * 0.5;
    const double cy = (cfg.height - 1) * 0.5;
    double x_lo = 0, x_hi = cfg.width - 1, y_lo = 0, y_hi = cfg.height - 1;
    if (cfg.keep_inside > 0) {
        const double half = (cfg.keep_inside - 1) * 0.5;
        x_lo = std::max(x_lo, cx - half);
        x_hi = std::min(x_hi, cx + half);
        y_lo = std::max(y_lo, cy - half);
        y_hi = std::min(y_hi, cy + half);
    }

    const double gain = std::exp2(cfg.exposure_gap);
    for (int i = 0; i < cfg.lights; ++i) {
        SceneLight light;
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            light.radius = rng.uniform(cfg.light_radius.lo, cfg.light_radius.hi);
            const double m = light.radius + cfg.edge_margin;
            if (x_lo + m > x_hi - m || y_lo + m > y_hi - m) break;
            light.x = rng.uniform(x_lo + m, x_hi - m);
            light.y = rng.uniform(y_lo + m, y_hi - m);
            ok = std::hypot(light.x - cx, light.y - cy) >= cfg.min_center_distance &&
                 far_enough(light, scene.lights, cx, cy);
        }
        if (!ok) throw std::invalid_argument("scene: cannot place light sources with these constraints");
        const double v = rng.uniform(cfg.light_level.lo, cfg.light_level.hi);
        for (auto& c : light.level) c = v * rng.uniform(0.85, 1.0);

        const int x0 = std::max(0, static_cast<int>(std::floor(light.x - light.radius)));
        const int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(light.x + light.radius)));
        const int y0 = std::max(0, static_cast<int>(std::floor(light.y - light.radius)));
        const int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(light.y + light.radius)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (std::hypot(x - light.x, y - light.y) > light.radius) continue;
                for (int c = 0; c < 3; ++c) scene.radiance.at(x, y, c) = static_cast<float>(light.level[c] * gain);
            }
        }
        scene.lights.push_back(light);
    }
    return scene;
}

Scene render_flare_free_scene(const SceneConfig& cfg, Rng& rng) {
    SceneConfig c = cfg;
    c.lights = 0;
    return render_scene(c, rng);
}

Image expose(const Scene& scene, double ev) {
    const double k = std::exp2(ev);
    Image out(scene.radiance.width(), scene.radiance.height(), Domain::encoded(kSceneGamma));
    auto src = scene.radiance.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(src[i] * k, 0.0, 1.0);
        dst[i] = v == 0.0 ? 0.0f : static_cast<float>(std::pow(v, 1.0 / kSceneGamma));
    }
    return out;
}

BracketPair make_bracket_pair(const Scene& scene, std::string id) {
    BracketPair p;
    p.id = std::move(id);
    p.normal = expose(scene, 0.0);
    p.low = expose(scene, -scene.exposure_gap);
    p.ev_gap = scene.exposure_gap;
    return p;
}

void write_bracket_group(const std::filesystem::path& dir, const Scene& scene, const std::vector<double>& evs) {
    std::filesystem::create_directories(dir);
    std::vector<double> sorted = evs;
    std::sort(sorted.begin(), sorted.end());
    std::ofstream side(dir / "exposures.txt");
    if (!side) throw IoError("cannot write " + (dir / "exposures.txt").string());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const std::string name = "shot_" + std::to_string(i) + ".png";
        save_image(dir / name, expose(scene, sorted[i]), ImageFormat::Png16);
        side << name << ' ' << sorted[i] << '\n';
    }
}

} // namespace flarekit
