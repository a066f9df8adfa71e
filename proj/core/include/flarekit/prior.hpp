#pragma once

#include "flarekit/image.hpp"
#include "flarekit/synthesis.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flarekit {

inline constexpr double kPriorGamma = 10.0;

/// Saturation map of an Encoded image: every sample raised to gamma_p, then
/// reflected through `center`. The result keeps the input's domain tag.
Image compute_prior(const Image& corrupted, const OpticalCenter& center, double gamma_p = kPriorGamma);

/// Six planes per pixel, interleaved in a fixed order.
class PlaneStack {
public:
    static constexpr int kPlanes = 6;

    PlaneStack() = default;
    /// Planes 0-2 from `first`, 3-5 from `second`; both must share a shape.
    PlaneStack(const Image& first, const Image& second);

    int width() const { return width_; }
    int height() const { return height_; }
    float at(int x, int y, int plane) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * kPlanes + plane];
    }
    const std::vector<float>& data() const { return data_; }

    /// Planes 0-2 (half == 0) or 3-5 (half == 1) as an image with `domain`.
    Image half(int which, Domain domain) const;

    friend bool operator==(const PlaneStack&, const PlaneStack&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Network I/O: input = [corrupted RGB | prior RGB],
/// target = [flare_free RGB | flare RGB].
struct SixChannelSample {
    std::string id;
    PlaneStack input;
    PlaneStack target;
    Domain domain;  ///< domain of all four RGB halves
};

SixChannelSample build_sample(const FlareTriplet& triplet, const OpticalCenter& center, std::string id = {},
                              double gamma_p = kPriorGamma);

/// Writes <id>_input_rgb.pfm, <id>_input_prior.pfm, <id>_target_bg.pfm and
/// <id>_target_flare.pfm per sample, plus samples.json listing ids, file
/// names and plane order.
void export_samples(const std::filesystem::path& dir, const std::vector<SixChannelSample>& samples);
std::vector<SixChannelSample> import_samples(const std::filesystem::path& dir);

} // namespace flarekit
