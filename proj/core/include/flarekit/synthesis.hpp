#pragma once

#include "flarekit/image.hpp"
#include "flarekit/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace flarekit {

/// Normal and lowest exposure of one bracket, both Encoded.
struct BracketPair {
    Image normal;
    Image low;
    std::string id;
    std::string normal_source;
    std::string low_source;
    double ev_gap = 0.0;  ///< EV(normal) - EV(low); 0 when unknown
};

/// Closed interval [lo, hi].
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    friend bool operator==(const Range&, const Range&) = default;
};

struct SynthesisConfig {
    int resize_width = 1200;   ///< landscape target; swapped for portrait inputs
    int resize_height = 800;
    int crop = 512;
    double translate_max = 15.0;
    Range gamma{1.8, 2.2};
    Range color_gain{0.5, 1.2};
    Range blur_sigma{0.0, 3.0};
    Range opacity{0.3, 1.0};
    Range noise_sigma{0.0, 0.02};
    double color_offset = 0.02;  ///< offsets drawn from U(-x, x) per channel
    double mask_threshold = 0.2;

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;

    friend bool operator==(const SynthesisConfig&, const SynthesisConfig&) = default;
};

/// JSON object with the field names above; ranges are [lo, hi] arrays.
/// Unknown keys are rejected, missing keys keep their defaults.
SynthesisConfig config_from_json(std::string_view json);
std::string config_to_json(const SynthesisConfig& cfg);

/// Every sampled augmentation value of one triplet.
struct SynthesisParams {
    double gamma = 2.0;
    double translate_magnitude = 0.0;
    double translate_angle = 0.0;  ///< radians
    double tx = 0.0;               ///< magnitude * cos(angle)
    double ty = 0.0;
    int frame_width = 0;           ///< size of the resized frame
    int frame_height = 0;
    int crop_x = 0;
    int crop_y = 0;
    int crop_size = 0;
    ChannelGains gains{1.0, 1.0, 1.0};
    double blur_sigma = 0.0;
    double opacity = 1.0;
    double noise_sigma = 0.0;
    ChannelGains offsets{0.0, 0.0, 0.0};
    std::uint64_t noise_seed = 0;
    std::uint64_t seed = 0;
    bool dark_low = false;  ///< low crop was all black, so the flare is empty

    friend bool operator==(const SynthesisParams&, const SynthesisParams&) = default;
};

std::string params_to_json(const SynthesisParams& params);
SynthesisParams params_from_json(std::string_view json);

/// Resized frame size for an input of the given size (orientation follows
/// the input).
std::array<int, 2> resized_size(const SynthesisConfig& cfg, int width, int height);

/// Draws every augmentation value. The crop window is placed inside a frame of
/// frame_width x frame_height.
SynthesisParams sample_params(const SynthesisConfig& cfg, int frame_width, int frame_height, Rng& rng);

/// Both exposures resized to the target frame. Reusable across seeds.
struct PreparedPair {
    Image normal;
    Image low;
    std::string id;
};

/// Throws std::invalid_argument when the exposures differ in size, are not
/// Encoded, or are smaller than the target frame.
PreparedPair prepare_pair(const BracketPair& pair, const SynthesisConfig& cfg);

struct FlareTriplet {
    Image corrupted;   ///< Encoded(gamma)
    Image flare_free;  ///< Encoded(gamma)
    Image flare;       ///< Encoded(gamma)
    Mask mask;
    SynthesisParams params;

    OpticalCenter center() const {
        return OpticalCenter::raster_center(corrupted.width(), corrupted.height());
    }
};

/// Runs the augmentation chain with explicit parameters.
FlareTriplet render_triplet(const PreparedPair& pair, const SynthesisConfig& cfg, const SynthesisParams& params);

/// prepare_pair + sample_params(Rng(seed)) + render_triplet.
FlareTriplet synthesize_triplet(const BracketPair& pair, const SynthesisConfig& cfg, std::uint64_t seed);
FlareTriplet synthesize_triplet(const PreparedPair& pair, const SynthesisConfig& cfg, std::uint64_t seed);

/// mask(p) = max_c flare(p, c) > threshold.
Mask compute_mask(const Image& flare, double threshold = 0.2);

} // namespace flarekit
