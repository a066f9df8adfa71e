#include "flarekit/quality.hpp"

#include "flarekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flarekit {

namespace {

void require_same(const Image& a, const Image& b, const char* op) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": image shapes differ");
}

void require_mask(const Image& a, const Mask& m, const char* op) {
    if (m.width() != a.width() || m.height() != a.height()) {
        throw std::invalid_argument(std::string(op) + ": mask shape differs from image");
    }
}

// Sum of f(a - b) over the samples of selected pixels, plus the sample count.
template <class F>
std::pair<double, std::size_t> accumulate(const Image& a, const Image& b, const Mask* mask, F f) {
    auto sa = a.samples();
    auto sb = b.samples();
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
        if (mask && !mask->bits()[p]) continue;
        for (int c = 0; c < 3; ++c) {
            sum += f(static_cast<double>(sa[p * 3 + c]) - static_cast<double>(sb[p * 3 + c]));
        }
        n += 3;
    }
    return {sum, n};
}

double abs_d(double d) { return std::abs(d); }
double sq_d(double d) { return d * d; }

double psnr_from_mse(double mse, double peak) {
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

std::vector<float> luma_plane(const Image& img) {
    std::vector<float> out(img.pixel_count());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out[static_cast<std::size_t>(y) * img.width() + x] = static_cast<float>(luma(img, x, y));
        }
    }
    return out;
}

// Valid-mode separable filter of a w x h plane with an odd symmetric kernel.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

} // namespace

// --- features -----------------------------------------------------------------

GradientPyramid::GradientPyramid(int levels) : levels_(levels) {
    if (levels < 1) throw std::invalid_argument("GradientPyramid needs at least one level");
}

std::vector<FeaturePlane> GradientPyramid::extract(const Image& img) const {
    std::vector<FeaturePlane> planes;
    int w = img.width();
    int h = img.height();
    std::vector<float> lum = luma_plane(img);
    for (int level = 0; level < levels_ && w >= 1 && h >= 1; ++level) {
        planes.push_back({w, h, lum});
        if (w > 1) {
            FeaturePlane dx{w - 1, h, std::vector<float>(static_cast<std::size_t>(w - 1) * h)};
            for (int y = 0; y < h; ++y)
                for (int x = 0; x + 1 < w; ++x)
                    dx.values[static_cast<std::size_t>(y) * (w - 1) + x] =
                        lum[static_cast<std::size_t>(y) * w + x + 1] - lum[static_cast<std::size_t>(y) * w + x];
            planes.push_back(std::move(dx));
        }
        if (h > 1) {
            FeaturePlane dy{w, h - 1, std::vector<float>(static_cast<std::size_t>(w) * (h - 1))};
            for (int y = 0; y + 1 < h; ++y)
                for (int x = 0; x < w; ++x)
                    dy.values[static_cast<std::size_t>(y) * w + x] =
                        lum[static_cast<std::size_t>(y + 1) * w + x] - lum[static_cast<std::size_t>(y) * w + x];
            planes.push_back(std::move(dy));
        }
        const int nw = w / 2;
        const int nh = h / 2;
        std::vector<float> next(static_cast<std::size_t>(nw) * nh);
        for (int y = 0; y < nh; ++y) {
            for (int x = 0; x < nw; ++x) {
                const auto at = [&](int xx, int yy) { return lum[static_cast<std::size_t>(yy) * w + xx]; };
                next[static_cast<std::size_t>(y) * nw + x] =
                    0.25f * (at(2 * x, 2 * y) + at(2 * x + 1, 2 * y) + at(2 * x, 2 * y + 1) + at(2 * x + 1, 2 * y + 1));
            }
        }
        lum = std::move(next);
        w = nw;
        h = nh;
    }
    return planes;
}

void PrecomputedFeatures::add(const Image& img, std::vector<FeaturePlane> planes) {
    table_.emplace_back(&img, std::move(planes));
}

std::vector<FeaturePlane> PrecomputedFeatures::extract(const Image& img) const {
    for (const auto& [key, planes] : table_) {
        if (key == &img) return planes;
    }
    throw std::out_of_range("PrecomputedFeatures: no features registered for this image");
}

// --- losses -------------------------------------------------------------------

double l1(const Image& a, const Image& b) {
    require_same(a, b, "l1");
    const auto [sum, n] = accumulate(a, b, nullptr, abs_d);
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double masked_l1(const Image& a, const Image& b, const Mask& mask) {
    require_same(a, b, "masked_l1");
    require_mask(a, mask, "masked_l1");
    const auto [sum, n] = accumulate(a, b, &mask, abs_d);
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double feature_l1(const FeatureExtractor& features, const Image& a, const Image& b) {
    require_same(a, b, "feature_l1");
    const auto fa = features.extract(a);
    const auto fb = features.extract(b);
    if (fa.size() != fb.size()) throw std::invalid_argument("feature_l1: plane count differs");
    double total = 0.0;
    std::size_t planes = 0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        if (fa[i].values.size() != fb[i].values.size()) {
            throw std::invalid_argument("feature_l1: plane sizes differ");
        }
        if (fa[i].values.empty()) continue;
        double s = 0.0;
        for (std::size_t k = 0; k < fa[i].values.size(); ++k) {
            s += std::abs(static_cast<double>(fa[i].values[k]) - static_cast<double>(fb[i].values[k]));
        }
        total += s / static_cast<double>(fa[i].values.size());
        ++planes;
    }
    return planes == 0 ? 0.0 : total / static_cast<double>(planes);
}

double reconstruction_loss(const Image& input, const Image& flare_free_est, const Image& flare_est) {
    require_same(input, flare_free_est, "reconstruction_loss");
    require_same(input, flare_est, "reconstruction_loss");
    if (!input.domain().is_encoded()) throw DomainError("reconstruction_loss: input must be Encoded");
    if (flare_free_est.domain() != input.domain() || flare_est.domain() != input.domain()) {
        throw DomainError("reconstruction_loss: estimates must share the input's domain");
    }
    const double g = input.domain().gamma;
    auto si = input.samples();
    auto sb = flare_free_est.samples();
    auto sf = flare_est.samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < si.size(); ++i) {
        const double lin_in = std::pow(static_cast<double>(si[i]), g);
        const double lin_sum =
            std::min(1.0, std::pow(static_cast<double>(sb[i]), g) + std::pow(static_cast<double>(sf[i]), g));
        sum += std::abs(lin_in - lin_sum);
    }
    return si.empty() ? 0.0 : sum / static_cast<double>(si.size());
}

double background_loss(const Image& est, const Image& gt, const Mask& mask, const FeatureExtractor& features,
                       const LossWeights& w) {
    double loss = 0.0;
    if (w.w1 != 0.0) loss += w.w1 * l1(est, gt);
    if (w.w2 != 0.0) loss += w.w2 * feature_l1(features, est, gt);
    if (w.w3 != 0.0) loss += w.w3 * masked_l1(est, gt, mask);
    return loss;
}

double flare_loss(const Image& est, const Image& gt, const Mask& mask, const FeatureExtractor& features,
                  const LossWeights& w) {
    return background_loss(est, gt, mask, features, w);
}

LossBreakdown total_loss(const Image& input, const Image& flare_free_est, const Image& flare_free_gt,
                         const Image& flare_est, const Image& flare_gt, const Mask& mask,
                         const FeatureExtractor& features, const LossWeights& w) {
    LossBreakdown b;
    b.reconstruction = reconstruction_loss(input, flare_free_est, flare_est);
    b.flare = flare_loss(flare_est, flare_gt, mask, features, w);
    b.background = background_loss(flare_free_est, flare_free_gt, mask, features, w);
    b.total = b.reconstruction + b.flare + b.background;
    return b;
}

// --- metrics ------------------------------------------------------------------

double psnr(const Image& a, const Image& b, double peak) {
    require_same(a, b, "psnr");
    const auto [sum, n] = accumulate(a, b, nullptr, sq_d);
    return psnr_from_mse(n == 0 ? 0.0 : sum / static_cast<double>(n), peak);
}

double masked_psnr(const Image& a, const Image& b, const Mask& mask, double peak) {
    require_same(a, b, "masked_psnr");
    require_mask(a, mask, "masked_psnr");
    const auto [sum, n] = accumulate(a, b, &mask, sq_d);
    return psnr_from_mse(n == 0 ? 0.0 : sum / static_cast<double>(n), peak);
}

double ssim(const Image& a, const Image& b, double peak) {
    require_same(a, b, "ssim");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    const int w = a.width();
    const int h = a.height();
    if (w < kWindow || h < kWindow) throw std::invalid_argument("ssim: images must be at least 11x11");

    std::vector<double> k(kWindow);
    double ksum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        ksum += k[i];
    }
    for (auto& v : k) v /= ksum;

    const std::size_t n = static_cast<std::size_t>(w) * h;
    const auto la = luma_plane(a);
    const auto lb = luma_plane(b);
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = la[i];
        y[i] = lb[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, k);
    const auto my = filter_valid(y, w, h, k);
    const auto mxx = filter_valid(xx, w, h, k);
    const auto myy = filter_valid(yy, w, h, k);
    const auto mxy = filter_valid(xy, w, h, k);

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace flarekit
