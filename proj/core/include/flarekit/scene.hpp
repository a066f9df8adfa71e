#pragma once

#include "flarekit/image.hpp"
#include "flarekit/rng.hpp"
#include "flarekit/synthesis.hpp"

#include <filesystem>
#include <vector>

namespace flarekit {

/// Procedural HDR test scenes: a smooth low-radiance background plus
/// uniform, hard-edged light disks far brighter than the background.
struct SceneConfig {
    int width = 1200;
    int height = 800;
    int lights = 1;
    Range light_radius{6.0, 14.0};
    Range light_level{0.2, 0.8};         ///< radiance in units of 2^exposure_gap
    Range background{0.02, 0.3};          ///< linear radiance of the background
    double exposure_gap = 6.0;            ///< EV between the normal and lowest shot
    double min_center_distance = 60.0;    ///< lights keep this far from the raster centre
    double edge_margin = 48.0;            ///< gap between a light's rim and the frame edge
    /// Lights (and their mirror images) avoid this window when > 0: they are
    /// placed inside the centred square of this side instead.
    int keep_inside = 0;
};

struct SceneLight {
    double x = 0.0;
    double y = 0.0;
    double radius = 0.0;
    ChannelGains level{};  ///< radiance / 2^exposure_gap per channel
};

struct Scene {
    Image radiance;  ///< Linear, unbounded
    std::vector<SceneLight> lights;
    double exposure_gap = 6.0;
};

Scene render_scene(const SceneConfig& cfg, Rng& rng);
/// A scene with no light sources (nothing saturates at EV 0).
Scene render_flare_free_scene(const SceneConfig& cfg, Rng& rng);

/// clip(radiance * 2^ev)^(1/2.2), tagged Encoded(2.2).
Image expose(const Scene& scene, double ev);

/// Normal = EV 0, low = EV -exposure_gap.
BracketPair make_bracket_pair(const Scene& scene, std::string id = {});

/// Writes dir/shot_<i>.png (16 bit, darkest first) and exposures.txt for the
/// given EVs.
void write_bracket_group(const std::filesystem::path& dir, const Scene& scene, const std::vector<double>& evs);

} // namespace flarekit
