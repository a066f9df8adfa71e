#pragma once

#include "flarekit/image.hpp"

#include <memory>
#include <vector>

namespace flarekit {

struct LossWeights {
    double w1 = 0.5;   ///< plain L1
    double w2 = 0.1;   ///< feature L1
    double w3 = 20.0;  ///< masked L1
};

/// One single-channel feature map.
struct FeaturePlane {
    int width = 0;
    int height = 0;
    std::vector<float> values;
};

/// Maps an image to feature planes. Implementations must be deterministic and
/// return the same plane layout for same-sized inputs.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<FeaturePlane> extract(const Image& img) const = 0;
};

/// {luma, d/dx luma, d/dy luma} at `levels` scales. Each coarser level is a
/// 2x2 box average of the previous luma; derivatives are forward differences.
/// Levels that would be smaller than 1x1 are omitted.
class GradientPyramid final : public FeatureExtractor {
public:
    explicit GradientPyramid(int levels = 3);
    int levels() const { return levels_; }
    std::vector<FeaturePlane> extract(const Image& img) const override;

private:
    int levels_;
};

/// Features computed elsewhere (e.g. by an external network), looked up by
/// the address of the image they were computed for.
class PrecomputedFeatures final : public FeatureExtractor {
public:
    void add(const Image& img, std::vector<FeaturePlane> planes);
    std::vector<FeaturePlane> extract(const Image& img) const override;

private:
    std::vector<std::pair<const Image*, std::vector<FeaturePlane>>> table_;
};

/// Mean absolute difference over all samples.
double l1(const Image& a, const Image& b);
/// Mean absolute difference over the samples of mask pixels; 0 for an empty mask.
double masked_l1(const Image& a, const Image& b, const Mask& mask);
/// Mean over planes of the per-plane mean absolute difference.
double feature_l1(const FeatureExtractor& features, const Image& a, const Image& b);

/// Mean |decode(input) - clip(decode(flare_free_est) + decode(flare_est))|,
/// all three decoded with the input's gamma. The sum is clipped to [0, 1]
/// because the corrupted image itself was clipped.
double reconstruction_loss(const Image& input, const Image& flare_free_est, const Image& flare_est);

/// w1 * l1 + w2 * feature_l1 + w3 * masked_l1.
double background_loss(const Image& est, const Image& gt, const Mask& mask, const FeatureExtractor& features,
                       const LossWeights& w = {});
double flare_loss(const Image& est, const Image& gt, const Mask& mask, const FeatureExtractor& features,
                  const LossWeights& w = {});

struct LossBreakdown {
    double reconstruction = 0.0;
    double flare = 0.0;
    double background = 0.0;
    double total = 0.0;
};

LossBreakdown total_loss(const Image& input, const Image& flare_free_est, const Image& flare_free_gt,
                         const Image& flare_est, const Image& flare_gt, const Mask& mask,
                         const FeatureExtractor& features, const LossWeights& w = {});

/// Reported instead of +infinity for identical images.
inline constexpr double kPsnrCap = 99.0;

double psnr(const Image& a, const Image& b, double peak = 1.0);
/// PSNR from the mean squared error over mask pixels; kPsnrCap for an empty mask.
double masked_psnr(const Image& a, const Image& b, const Mask& mask, double peak = 1.0);
/// Mean SSIM on Rec.601 luma with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, over valid window positions. Images must be at
/// least 11x11.
double ssim(const Image& a, const Image& b, double peak = 1.0);

} // namespace flarekit
