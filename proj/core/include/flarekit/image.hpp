#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace flarekit {

class Rng;

/// Intensity domain of an image. Encoded images carry the gamma that maps
/// them back to linear light (linear = encoded^gamma).
struct Domain {
    enum class Kind : std::uint8_t { Linear, Encoded };

    Kind kind = Kind::Encoded;
    double gamma = 2.2;

    static Domain linear() { return {Kind::Linear, 1.0}; }
    static Domain encoded(double gamma) { return {Kind::Encoded, gamma}; }

    bool is_linear() const { return kind == Kind::Linear; }
    bool is_encoded() const { return kind == Kind::Encoded; }

    friend bool operator==(const Domain&, const Domain&) = default;
};

/// Gamma assumed for 8/16-bit files that carry no gamma of their own.
inline constexpr double kNominalGamma = 2.2;

/// Row-major, channel-interleaved RGB raster of 32-bit float samples.
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int width, int height, Domain domain = Domain::encoded(kNominalGamma));
    Image(int width, int height, std::vector<float> samples, Domain domain);

    static Image filled(int width, int height, float value, Domain domain);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t sample_count() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }

    const Domain& domain() const { return domain_; }
    void set_domain(Domain domain) { domain_ = domain; }

    float& at(int x, int y, int c) { return samples_[index(x, y, c)]; }
    float at(int x, int y, int c) const { return samples_[index(x, y, c)]; }

    std::span<float> samples() { return samples_; }
    std::span<const float> samples() const { return samples_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    /// Throws std::invalid_argument if any sample is non-finite or negative.
    void validate() const;

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

private:
    int width_ = 0;
    int height_ = 0;
    Domain domain_ = Domain::encoded(kNominalGamma);
    std::vector<float> samples_;
};

/// Binary raster (one byte per pixel, 0 or 1).
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, bool value = false);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return bits_.size(); }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    std::span<const std::uint8_t> bits() const { return bits_; }
    std::span<std::uint8_t> bits() { return bits_; }

    std::size_t count() const;
    bool any() const { return count() > 0; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Sub-pixel position; the origin is the centre of the top-left pixel.
struct OpticalCenter {
    double x = 0.0;
    double y = 0.0;

    static OpticalCenter raster_center(int width, int height) {
        return {(width - 1) * 0.5, (height - 1) * 0.5};
    }
    friend bool operator==(const OpticalCenter&, const OpticalCenter&) = default;
};

/// Centres may lie this far outside the raster.
inline constexpr double kCenterMargin = 32.0;

void validate_center(const OpticalCenter& center, int width, int height);

using ChannelGains = std::array<double, 3>;

// --- gamma ------------------------------------------------------------------

/// Raises every sample to `exponent` and tags the result with `result_domain`.
/// 0^exponent is 0.
Image gamma_apply(const Image& img, double exponent, Domain result_domain);

/// Encoded -> Linear: sample^gamma.
Image decode_gamma(const Image& img, double gamma);
/// Decode using the gamma recorded in the image's domain.
Image decode_gamma(const Image& img);
/// Linear -> Encoded(gamma): sample^(1/gamma).
Image encode_gamma(const Image& img, double gamma);

// --- geometry ---------------------------------------------------------------

/// Bilinear sample of channel c at (x, y); reads outside the raster are zero.
double sample_bilinear(const Image& img, double x, double y, int c);

/// Point reflection: out(p) = in(2*center - p), bilinear, zero fill.
Image rotate180_about(const Image& img, const OpticalCenter& center);
/// Same reflection for a binary raster; a pixel is set when any source pixel
/// with nonzero bilinear weight is set.
Mask rotate180_about(const Mask& mask, const OpticalCenter& center);

/// out(p) = in(p - (dx, dy)), bilinear, zero fill.
Image translate(const Image& img, double dx, double dy);

/// Equivalent to crop(translate(img, dx, dy), x, y, w, h) without
/// materialising the full translated frame.
Image crop_translated(const Image& img, double dx, double dy, int x, int y, int w, int h);

Image resize_bilinear(const Image& img, int new_width, int new_height);
Image crop(const Image& img, int x, int y, int w, int h);

// --- filtering --------------------------------------------------------------

/// 1-D Gaussian taps for radius ceil(3*sigma), normalised to sum 1.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with replicate-edge borders. sigma == 0 is a copy.
Image gaussian_blur(const Image& img, double sigma);

// --- arithmetic -------------------------------------------------------------

/// Elementwise sum; both operands must be Linear and the same shape.
Image add(const Image& a, const Image& b);
Image mul_gains(const Image& img, const ChannelGains& gains);
Image scale(const Image& img, double factor);
Image add_offsets(const Image& img, const ChannelGains& offsets);
Image clamp01(const Image& img);
Image clamp_min0(const Image& img);

/// i.i.d. N(0, sigma^2) per sample, result clamped to >= 0.
Image add_gaussian_noise(const Image& img, double sigma, Rng& rng);

// --- masks ------------------------------------------------------------------

/// Pixels whose largest channel is strictly above `threshold`.
Mask threshold_max_channel(const Image& img, double threshold);
/// Same test with `>=`.
Mask threshold_max_channel_at_least(const Image& img, double threshold);
/// Morphological dilation with a disk of the given radius (Euclidean,
/// integer offsets with dx^2 + dy^2 <= radius^2).
Mask dilate_disk(const Mask& mask, int radius);

// --- misc -------------------------------------------------------------------

double mean_sample(const Image& img);
float max_sample(const Image& img);
/// Rec.601 luma of pixel (x, y).
double luma(const Image& img, int x, int y);

} // namespace flarekit
