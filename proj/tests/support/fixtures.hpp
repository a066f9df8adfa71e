#pragma once

#include <flarekit/image.hpp>
#include <flarekit/optics.hpp>
#include <flarekit/rng.hpp>
#include <flarekit/scene.hpp>
#include <flarekit/synthesis.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flarekit::testing {

/// Fresh directory under the system temp dir, removed with its contents.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Uniform random samples in [lo, hi).
Image random_image(int width, int height, Domain domain, std::uint64_t seed, double lo = 0.0, double hi = 1.0);

/// Bracket pair of a square procedural scene of the given size.
BracketPair scene_pair(std::uint64_t seed, int size = 512, int lights = 1);

/// Synthesis config whose frame and crop both equal `size`.
SynthesisConfig square_config(int size = 512);

/// Noise-free triplet whose blur sigma and translation sit on the fitter's
/// coarse grid. Truth is reported in the fitter's frame: the flare moves by
/// (-tx, -ty).
struct GridCase {
    FlareTriplet triplet;
    double sigma = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    /// Linear flare level per channel at the ghost of the light disk.
    ChannelGains gains{};
};
GridCase grid_truth_case(std::uint64_t seed, int index, bool noisy = false);

/// Random prescription with a valid ghost path.
optics::LensPrescription random_prescription(Rng& rng);

/// Largest |height| the ray reaches at any step of a written-order chain.
double max_ray_height(const std::vector<optics::TransferMatrix>& chain, optics::RayState ray);

/// Random prescription kept only if rays launched at heights 0 and 0.01 mm
/// with angle `angle` stay within `bound` mm of the axis on both paths.
optics::LensPrescription random_paraxial_prescription(Rng& rng, double angle = 1e-3, double bound = 0.05);

/// Path of the bundled lens file.
std::filesystem::path bundled_lens();

/// Exact bit equality of two sample buffers.
bool same_samples(const Image& a, const Image& b);

} // namespace flarekit::testing
