#include "flarekit/image.hpp"

#include "flarekit/error.hpp"
#include "flarekit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace flarekit {

namespace {

void require_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("image dimensions must be >= 1, got " + std::to_string(width) +
                                    "x" + std::to_string(height));
    }
}

void require_same_shape(const Image& a, const Image& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
}

template <typename F>
Image map_samples(const Image& img, Domain domain, F&& f) {
    Image out(img.width(), img.height(), domain);
    auto src = img.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = f(src[i], static_cast<int>(i % Image::kChannels));
    }
    return out;
}

} // namespace

Image::Image(int width, int height, Domain domain)
    : width_(width), height_(height), domain_(domain) {
    require_dims(width, height);
    samples_.assign(pixel_count() * kChannels, 0.0f);
}

Image::Image(int width, int height, std::vector<float> samples, Domain domain)
    : width_(width), height_(height), domain_(domain), samples_(std::move(samples)) {
    require_dims(width, height);
    if (samples_.size() != pixel_count() * kChannels) {
        throw std::invalid_argument("sample buffer length does not match width*height*3");
    }
}

Image Image::filled(int width, int height, float value, Domain domain) {
    Image img(width, height, domain);
    std::fill(img.samples_.begin(), img.samples_.end(), value);
    return img;
}

void Image::validate() const {
    for (float v : samples_) {
        if (!std::isfinite(v) || v < 0.0f) {
            throw std::invalid_argument("image contains a negative or non-finite sample");
        }
    }
}

Mask::Mask(int width, int height, bool value) : width_(width), height_(height) {
    require_dims(width, height);
    bits_.assign(static_cast<std::size_t>(width) * height, value ? 1 : 0);
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void validate_center(const OpticalCenter& center, int width, int height) {
    if (!std::isfinite(center.x) || !std::isfinite(center.y)) {
        throw std::invalid_argument("optical center must be finite");
    }
    if (center.x < -kCenterMargin || center.x > width - 1 + kCenterMargin ||
        center.y < -kCenterMargin || center.y > height - 1 + kCenterMargin) {
        throw std::invalid_argument("optical center lies outside the image plus margin");
    }
}

// --- gamma ------------------------------------------------------------------

Image gamma_apply(const Image& img, double exponent, Domain result_domain) {
    if (!std::isfinite(exponent) || exponent <= 0.0) {
        throw std::invalid_argument("gamma exponent must be finite and positive");
    }
    return map_samples(img, result_domain, [exponent](float v, int) {
        if (!(v >= 0.0f) || !std::isfinite(v)) {
            throw std::invalid_argument("gamma_apply: negative or non-finite sample");
        }
        if (v == 0.0f) return 0.0f;
        return static_cast<float>(std::pow(static_cast<double>(v), exponent));
    });
}

Image decode_gamma(const Image& img, double gamma) {
    return gamma_apply(img, gamma, Domain::linear());
}

Image decode_gamma(const Image& img) {
    if (!img.domain().is_encoded()) {
        throw DomainError("decode_gamma: image is already linear");
    }
    return decode_gamma(img, img.domain().gamma);
}

Image encode_gamma(const Image& img, double gamma) {
    if (!std::isfinite(gamma) || gamma <= 0.0) {
        throw std::invalid_argument("gamma must be finite and positive");
    }
    return gamma_apply(img, 1.0 / gamma, Domain::encoded(gamma));
}

// --- geometry ---------------------------------------------------------------

double sample_bilinear(const Image& img, double x, double y, int c) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const double ax = x - fx;
    const double ay = y - fy;
    const int w = img.width();
    const int h = img.height();

    auto tap = [&](int xi, int yi) -> double {
        if (xi < 0 || yi < 0 || xi >= w || yi >= h) return 0.0;
        return img.at(xi, yi, c);
    };
    // Zero-weight taps are skipped so integer positions reproduce samples exactly.
    double v = 0.0;
    const double w00 = (1.0 - ax) * (1.0 - ay);
    const double w10 = ax * (1.0 - ay);
    const double w01 = (1.0 - ax) * ay;
    const double w11 = ax * ay;
    if (w00 != 0.0) v += w00 * tap(x0, y0);
    if (w10 != 0.0) v += w10 * tap(x0 + 1, y0);
    if (w01 != 0.0) v += w01 * tap(x0, y0 + 1);
    if (w11 != 0.0) v += w11 * tap(x0 + 1, y0 + 1);
    return v;
}

namespace {

// out(p) = in(a*p + b) per axis, with a = +-1.
Image resample_affine(const Image& img, double ax, double bx, double ay, double by) {
    Image out(img.width(), img.height(), img.domain());
    const bool integral = bx == std::floor(bx) && by == std::floor(by);
    for (int y = 0; y < img.height(); ++y) {
        const double sy = ay * y + by;
        for (int x = 0; x < img.width(); ++x) {
            const double sx = ax * x + bx;
            if (integral) {
                const int ix = static_cast<int>(sx);
                const int iy = static_cast<int>(sy);
                if (ix < 0 || iy < 0 || ix >= img.width() || iy >= img.height()) continue;
                for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = img.at(ix, iy, c);
            } else {
                for (int c = 0; c < Image::kChannels; ++c) {
                    out.at(x, y, c) = static_cast<float>(sample_bilinear(img, sx, sy, c));
                }
            }
        }
    }
    return out;
}

} // namespace

Image rotate180_about(const Image& img, const OpticalCenter& center) {
    validate_center(center, img.width(), img.height());
    return resample_affine(img, -1.0, 2.0 * center.x, -1.0, 2.0 * center.y);
}

Mask rotate180_about(const Mask& mask, const OpticalCenter& center) {
    validate_center(center, mask.width(), mask.height());
    Mask out(mask.width(), mask.height());
    const int w = mask.width();
    const int h = mask.height();
    for (int y = 0; y < h; ++y) {
        const double sy = 2.0 * center.y - y;
        const int y0 = static_cast<int>(std::floor(sy));
        const bool fy = sy != std::floor(sy);
        for (int x = 0; x < w; ++x) {
            const double sx = 2.0 * center.x - x;
            const int x0 = static_cast<int>(std::floor(sx));
            const bool fx = sx != std::floor(sx);
            bool hit = false;
            for (int dy = 0; dy <= (fy ? 1 : 0) && !hit; ++dy) {
                for (int dx = 0; dx <= (fx ? 1 : 0) && !hit; ++dx) {
                    const int xi = x0 + dx;
                    const int yi = y0 + dy;
                    if (xi >= 0 && yi >= 0 && xi < w && yi < h && mask.at(xi, yi)) hit = true;
                }
            }
            if (hit) out.set(x, y, true);
        }
    }
    return out;
}

Image translate(const Image& img, double dx, double dy) {
    if (!std::isfinite(dx) || !std::isfinite(dy)) {
        throw std::invalid_argument("translate: offsets must be finite");
    }
    return resample_affine(img, 1.0, -dx, 1.0, -dy);
}

Image crop_translated(const Image& img, double dx, double dy, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width() || y + h > img.height()) {
        throw std::out_of_range("crop window outside image");
    }
    Image out(w, h, img.domain());
    const bool integral = dx == std::floor(dx) && dy == std::floor(dy);
    for (int yy = 0; yy < h; ++yy) {
        const double sy = (y + yy) - dy;
        for (int xx = 0; xx < w; ++xx) {
            const double sx = (x + xx) - dx;
            for (int c = 0; c < Image::kChannels; ++c) {
                if (integral) {
                    const int ix = static_cast<int>(sx);
                    const int iy = static_cast<int>(sy);
                    if (ix >= 0 && iy >= 0 && ix < img.width() && iy < img.height()) {
                        out.at(xx, yy, c) = img.at(ix, iy, c);
                    }
                } else {
                    out.at(xx, yy, c) = static_cast<float>(sample_bilinear(img, sx, sy, c));
                }
            }
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
    require_dims(new_width, new_height);
    Image out(new_width, new_height, img.domain());
    const double sx = static_cast<double>(img.width()) / new_width;
    const double sy = static_cast<double>(img.height()) / new_height;
    const double max_x = img.width() - 1;
    const double max_y = img.height() - 1;
    for (int y = 0; y < new_height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
        for (int x = 0; x < new_width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
            for (int c = 0; c < Image::kChannels; ++c) {
                out.at(x, y, c) = static_cast<float>(sample_bilinear(img, fx, fy, c));
            }
        }
    }
    return out;
}

Image crop(const Image& img, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width() || y + h > img.height()) {
        throw std::out_of_range("crop window outside image");
    }
    Image out(w, h, img.domain());
    for (int yy = 0; yy < h; ++yy) {
        const auto src = img.samples().subspan(img.index(x, y + yy, 0),
                                               static_cast<std::size_t>(w) * Image::kChannels);
        std::copy(src.begin(), src.end(), out.samples().begin() + out.index(0, yy, 0));
    }
    return out;
}

// --- filtering --------------------------------------------------------------

std::vector<double> gaussian_kernel(double sigma) {
    if (!std::isfinite(sigma) || sigma < 0.0) {
        throw std::invalid_argument("blur sigma must be finite and >= 0");
    }
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

Image gaussian_blur(const Image& img, double sigma) {
    const auto taps = gaussian_kernel(sigma);
    if (taps.size() == 1) return img;
    const int radius = static_cast<int>(taps.size() / 2);
    const int w = img.width();
    const int h = img.height();
    constexpr int C = Image::kChannels;

    std::vector<double> tmp(static_cast<std::size_t>(w) * h * C);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[C] = {0.0, 0.0, 0.0};
            for (int k = -radius; k <= radius; ++k) {
                const int xi = std::clamp(x + k, 0, w - 1);
                const double t = taps[k + radius];
                for (int c = 0; c < C; ++c) acc[c] += t * img.at(xi, y, c);
            }
            for (int c = 0; c < C; ++c) tmp[(static_cast<std::size_t>(y) * w + x) * C + c] = acc[c];
        }
    }
    Image out(w, h, img.domain());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[C] = {0.0, 0.0, 0.0};
            for (int k = -radius; k <= radius; ++k) {
                const int yi = std::clamp(y + k, 0, h - 1);
                const double t = taps[k + radius];
                for (int c = 0; c < C; ++c) acc[c] += t * tmp[(static_cast<std::size_t>(yi) * w + x) * C + c];
            }
            for (int c = 0; c < C; ++c) out.at(x, y, c) = static_cast<float>(acc[c]);
        }
    }
    return out;
}

// --- arithmetic -------------------------------------------------------------

Image add(const Image& a, const Image& b) {
    if (!a.domain().is_linear() || !b.domain().is_linear()) {
        throw DomainError("add: both operands must be in the linear domain");
    }
    require_same_shape(a, b, "add");
    Image out(a.width(), a.height(), Domain::linear());
    auto sa = a.samples();
    auto sb = b.samples();
    auto so = out.samples();
    for (std::size_t i = 0; i < so.size(); ++i) so[i] = sa[i] + sb[i];
    return out;
}

Image mul_gains(const Image& img, const ChannelGains& gains) {
    for (double g : gains) {
        if (!std::isfinite(g) || g < 0.0) throw std::invalid_argument("gains must be finite and >= 0");
    }
    return map_samples(img, img.domain(), [&gains](float v, int c) {
        return static_cast<float>(v * gains[c]);
    });
}

Image scale(const Image& img, double factor) {
    if (!std::isfinite(factor) || factor < 0.0) throw std::invalid_argument("scale factor must be >= 0");
    return map_samples(img, img.domain(), [factor](float v, int) { return static_cast<float>(v * factor); });
}

Image add_offsets(const Image& img, const ChannelGains& offsets) {
    return map_samples(img, img.domain(), [&offsets](float v, int c) {
        return static_cast<float>(v + offsets[c]);
    });
}

Image clamp01(const Image& img) {
    return map_samples(img, img.domain(), [](float v, int) { return std::clamp(v, 0.0f, 1.0f); });
}

Image clamp_min0(const Image& img) {
    return map_samples(img, img.domain(), [](float v, int) { return std::max(v, 0.0f); });
}

Image add_gaussian_noise(const Image& img, double sigma, Rng& rng) {
    if (!std::isfinite(sigma) || sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    if (sigma == 0.0) return img;
    return map_samples(img, img.domain(), [&rng, sigma](float v, int) {
        return std::max(0.0f, static_cast<float>(v + sigma * rng.normal()));
    });
}

// --- misc -------------------------------------------------------------------

double mean_sample(const Image& img) {
    double sum = 0.0;
    for (float v : img.samples()) sum += v;
    return img.sample_count() ? sum / static_cast<double>(img.sample_count()) : 0.0;
}

float max_sample(const Image& img) {
    float m = 0.0f;
    for (float v : img.samples()) m = std::max(m, v);
    return m;
}

double luma(const Image& img, int x, int y) {
    return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
}

} // namespace flarekit

namespace flarekit {

namespace {

template <class Pred>
Mask threshold_with(const Image& img, Pred pred) {
    Mask m(img.width(), img.height());
    auto s = img.samples();
    auto bits = m.bits();
    for (std::size_t p = 0; p < bits.size(); ++p) {
        const float v = std::max({s[3 * p], s[3 * p + 1], s[3 * p + 2]});
        bits[p] = pred(v) ? 1 : 0;
    }
    return m;
}

} // namespace

Mask threshold_max_channel(const Image& img, double threshold) {
    return threshold_with(img, [threshold](float v) { return v > threshold; });
}

Mask threshold_max_channel_at_least(const Image& img, double threshold) {
    return threshold_with(img, [threshold](float v) { return v >= threshold; });
}

Mask dilate_disk(const Mask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("dilate_disk: negative radius");
    const int w = mask.width();
    const int h = mask.height();
    Mask out(w, h);
    // per-row half widths of the disk
    std::vector<int> half(2 * radius + 1);
    for (int dy = -radius; dy <= radius; ++dy) {
        half[dy + radius] = static_cast<int>(std::floor(std::sqrt(double(radius) * radius - double(dy) * dy)));
    }
    auto src = mask.bits();
    auto dst = out.bits();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!src[static_cast<std::size_t>(y) * w + x]) continue;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const int hw = half[dy + radius];
                const int x0 = std::max(0, x - hw);
                const int x1 = std::min(w - 1, x + hw);
                std::uint8_t* row = dst.data() + static_cast<std::size_t>(yy) * w;
                std::fill(row + x0, row + x1 + 1, std::uint8_t{1});
            }
        }
    }
    return out;
}

} // namespace flarekit
