#pragma once

#include "flarekit/image.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace flarekit {

struct RemovalConfig {
    double sat_threshold = 0.9;    ///< proposal seeds: max channel above this
    int dilation = 25;             ///< proposal disk radius (px)
    double search_window = 15.0;   ///< |dx|, |dy| bound (px)
    double offset_step = 3.0;      ///< coarse grid spacing of dx, dy
    double sigma_max = 4.0;
    double sigma_step = 0.5;
    double tolerance = 1e-3;       ///< golden-section interval width
    int max_sweeps = 8;            ///< coordinate-descent passes
    double lambda = 10.0;          ///< weight of the negativity penalty
    /// 1: forward first differences; 2: central second differences, which
    /// are blind to smooth background shading.
    int derivative_order = 2;
    /// Penalty on the differences of the residual: 1 = absolute value,
    /// 2 = square.
    int norm = 2;
    /// Gaussian sigma (px) applied to both the input and the model before
    /// differencing; suppresses pixel noise. 0 disables it; a negative value
    /// picks 1.5 when the estimated noise exceeds noise_floor and 0 otherwise.
    double presmooth = -1.0;
    /// Linear-light noise level below which automatic presmoothing stays off.
    double noise_floor = 2e-4;
    /// Samples at or above this carry no information (clipped); pixels whose
    /// difference stencil touches one are left out of the objective.
    double clip_level = 0.99;
    /// Light sources fitted one after another, largest first.
    int max_sources = 3;
    double prior_gamma = 10.0;     ///< exponent of the saturation extraction
    /// A fit counts as a flare only if it lowers the objective by this
    /// fraction of the no-flare objective.
    double min_relative_improvement = 0.05;

    void validate() const;
};

/// JSON object with the field names above. Unknown keys are rejected,
/// missing keys keep their defaults.
RemovalConfig removal_config_from_json(std::string_view json);
std::string removal_config_to_json(const RemovalConfig& cfg);

struct FlareFitParams {
    ChannelGains gains{0.0, 0.0, 0.0};
    double blur_sigma = 0.0;
    double dx = 0.0;
    double dy = 0.0;
};

struct FitResult {
    FlareFitParams params;
    double objective = 0.0;       ///< at params
    double null_objective = 0.0;  ///< with no flare
    double grid_objective = 0.0;  ///< best coarse-grid value
    /// Objective after the grid and after every accepted refinement step;
    /// strictly decreasing.
    std::vector<double> trace;
    double noise_sigma = 0.0;     ///< robust noise estimate around the proposal (linear)
    double presmooth = 0.0;       ///< smoothing actually used
    bool found = false;           ///< significant flare detected
    bool refined = false;         ///< refinement improved on the grid optimum
    Mask proposal;
};

struct RemovalResult {
    Image flare_free_est;  ///< Encoded, bit-identical to the input outside the proposal
    Image flare_est;       ///< Encoded, zero outside the proposal
    std::vector<FitResult> fits;  ///< one per attempted source, in fitting order
    Mask proposal;         ///< union of the attempted proposals

    bool found() const {
        for (const auto& f : fits) if (f.found) return true;
        return false;
    }
};

/// Saturated regions (max channel > sat_threshold), one mask per 8-connected
/// component, largest first (ties by raster position).
std::vector<Mask> saturated_sources(const Image& input, double sat_threshold = 0.9);

/// Saturated pixels (max channel > sat_threshold), reflected through
/// `center`, dilated by a disk of radius `dilation`.
Mask proposal_region(const Image& input, const OpticalCenter& center, double sat_threshold = 0.9,
                     int dilation = 25);
/// The same construction for one seed mask.
Mask seed_proposal(const Mask& seeds, const OpticalCenter& center, int dilation);

/// Flare model F = gains * blur_sigma(translate_(dx,dy)(rotate180(input^prior_gamma)))
/// in linear light, evaluated on the proposal of `seeds` (zero elsewhere).
Image render_flare_model(const Image& input, const OpticalCenter& center, const Mask& seeds,
                         const FlareFitParams& params, const RemovalConfig& cfg = {});

/// Objective for explicit parameters (gains used as given): over the
/// proposal of `seeds`, the penalty on the differences of r = I - F plus
/// lambda * max(0, F - I), with I = decode(input).
double flare_objective(const Image& input, const OpticalCenter& center, const Mask& seeds,
                       const FlareFitParams& params, const RemovalConfig& cfg = {});
/// Objective for the dominant (largest) source; 0 when nothing saturates.
double flare_objective(const Image& input, const OpticalCenter& center, const FlareFitParams& params,
                       const RemovalConfig& cfg = {});

/// Coarse grid over (sigma, dx, dy), then coordinate descent with
/// golden-section line searches. Gains are solved per channel by
/// nonnegative least squares on the differenced image.
FitResult fit_flare(const Image& input, const OpticalCenter& center, const Mask& seeds,
                    const RemovalConfig& cfg = {});
/// Fit for the dominant source; an empty result (found == false) when
/// nothing saturates.
FitResult fit_flare(const Image& input, const OpticalCenter& center, const RemovalConfig& cfg = {});

/// Fits up to max_sources light sources in turn, each on what the previous
/// passes left behind, and subtracts every significant flare.
RemovalResult remove_flare(const Image& input, const OpticalCenter& center, const RemovalConfig& cfg = {});

/// decode(input) with every pixel whose max channel is >= sat_threshold
/// replaced by rotate180(decode(flare_est)) * 2^ev_step. Linear output.
Image hdr_merge(const Image& input, const Image& flare_est, const OpticalCenter& center, double ev_step = 12.0,
                double sat_threshold = 0.99);

} // namespace flarekit
