#include "flarekit/synthesis.hpp"

#include "flarekit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flarekit {

using nlohmann::json;

namespace {

void check_range(const Range& r, const char* name, double min_lo) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || r.lo < min_lo) {
        throw std::invalid_argument(std::string("synthesis config: bad range '") + name + "'");
    }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw std::invalid_argument(std::string("synthesis config: '") + name + "' must be [lo, hi]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json gains_json(const ChannelGains& g) { return json::array({g[0], g[1], g[2]}); }

ChannelGains gains_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

int uniform_int(Rng& rng, int lo, int hi) {  // inclusive
    const double u = rng.uniform();
    const int v = lo + static_cast<int>(std::floor(u * (hi - lo + 1)));
    return std::min(v, hi);
}

} // namespace

void SynthesisConfig::validate() const {
    if (resize_width < 1 || resize_height < 1) throw std::invalid_argument("synthesis config: bad resize target");
    if (crop < 1 || crop > std::min(resize_width, resize_height)) {
        throw std::invalid_argument("synthesis config: crop must fit inside the resize target");
    }
    if (!std::isfinite(translate_max) || translate_max < 0.0) {
        throw std::invalid_argument("synthesis config: translate_max must be >= 0");
    }
    check_range(gamma, "gamma", 1e-6);
    check_range(color_gain, "color_gain", 0.0);
    check_range(blur_sigma, "blur_sigma", 0.0);
    check_range(opacity, "opacity", 0.0);
    check_range(noise_sigma, "noise_sigma", 0.0);
    if (!std::isfinite(color_offset) || color_offset < 0.0) {
        throw std::invalid_argument("synthesis config: color_offset must be >= 0");
    }
    if (!(mask_threshold > 0.0 && mask_threshold < 1.0)) {
        throw std::invalid_argument("synthesis config: mask_threshold must lie in (0, 1)");
    }
}

SynthesisConfig config_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("synthesis config: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("synthesis config: expected a JSON object");
    SynthesisConfig cfg;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "resize_width") cfg.resize_width = v.get<int>();
            else if (key == "resize_height") cfg.resize_height = v.get<int>();
            else if (key == "crop") cfg.crop = v.get<int>();
            else if (key == "translate_max") cfg.translate_max = v.get<double>();
            else if (key == "gamma") cfg.gamma = range_from(v, "gamma");
            else if (key == "color_gain") cfg.color_gain = range_from(v, "color_gain");
            else if (key == "blur_sigma") cfg.blur_sigma = range_from(v, "blur_sigma");
            else if (key == "opacity") cfg.opacity = range_from(v, "opacity");
            else if (key == "noise_sigma") cfg.noise_sigma = range_from(v, "noise_sigma");
            else if (key == "color_offset") cfg.color_offset = v.get<double>();
            else if (key == "mask_threshold") cfg.mask_threshold = v.get<double>();
            else throw std::invalid_argument("synthesis config: unknown key '" + key + "'");
        }
    } catch (const json::type_error& e) {
        throw std::invalid_argument(std::string("synthesis config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const SynthesisConfig& cfg) {
    json j;
    j["resize_width"] = cfg.resize_width;
    j["resize_height"] = cfg.resize_height;
    j["crop"] = cfg.crop;
    j["translate_max"] = cfg.translate_max;
    j["gamma"] = range_json(cfg.gamma);
    j["color_gain"] = range_json(cfg.color_gain);
    j["blur_sigma"] = range_json(cfg.blur_sigma);
    j["opacity"] = range_json(cfg.opacity);
    j["noise_sigma"] = range_json(cfg.noise_sigma);
    j["color_offset"] = cfg.color_offset;
    j["mask_threshold"] = cfg.mask_threshold;
    return j.dump(2);
}

std::string params_to_json(const SynthesisParams& p) {
    json j;
    j["gamma"] = p.gamma;
    j["translate_magnitude"] = p.translate_magnitude;
    j["translate_angle"] = p.translate_angle;
    j["tx"] = p.tx;
    j["ty"] = p.ty;
    j["frame"] = json::array({p.frame_width, p.frame_height});
    j["crop"] = json::array({p.crop_x, p.crop_y, p.crop_size});
    j["gains"] = gains_json(p.gains);
    j["blur_sigma"] = p.blur_sigma;
    j["opacity"] = p.opacity;
    j["noise_sigma"] = p.noise_sigma;
    j["offsets"] = gains_json(p.offsets);
    j["noise_seed"] = p.noise_seed;
    j["seed"] = p.seed;
    j["dark_low"] = p.dark_low;
    return j.dump(2);
}

SynthesisParams params_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        SynthesisParams p;
        p.gamma = j.at("gamma").get<double>();
        p.translate_magnitude = j.at("translate_magnitude").get<double>();
        p.translate_angle = j.at("translate_angle").get<double>();
        p.tx = j.at("tx").get<double>();
        p.ty = j.at("ty").get<double>();
        p.frame_width = j.at("frame").at(0).get<int>();
        p.frame_height = j.at("frame").at(1).get<int>();
        p.crop_x = j.at("crop").at(0).get<int>();
        p.crop_y = j.at("crop").at(1).get<int>();
        p.crop_size = j.at("crop").at(2).get<int>();
        p.gains = gains_from(j.at("gains"));
        p.blur_sigma = j.at("blur_sigma").get<double>();
        p.opacity = j.at("opacity").get<double>();
        p.noise_sigma = j.at("noise_sigma").get<double>();
        p.offsets = gains_from(j.at("offsets"));
        p.noise_seed = j.at("noise_seed").get<std::uint64_t>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.dark_low = j.at("dark_low").get<bool>();
        return p;
    } catch (const json::exception& e) {
        throw FormatError(std::string("params sidecar: ") + e.what());
    }
}

std::array<int, 2> resized_size(const SynthesisConfig& cfg, int width, int height) {
    const int big = std::max(cfg.resize_width, cfg.resize_height);
    const int small = std::min(cfg.resize_width, cfg.resize_height);
    if (height > width) return {small, big};
    return {big, small};
}

SynthesisParams sample_params(const SynthesisConfig& cfg, int frame_width, int frame_height, Rng& rng) {
    cfg.validate();
    if (cfg.crop > frame_width || cfg.crop > frame_height) {
        throw std::invalid_argument("crop larger than the resized frame");
    }
    SynthesisParams p;
    p.seed = rng.seed();
    p.frame_width = frame_width;
    p.frame_height = frame_height;
    p.gamma = rng.uniform(cfg.gamma.lo, cfg.gamma.hi);
    p.translate_magnitude = rng.uniform(0.0, cfg.translate_max);
    p.translate_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.tx = p.translate_magnitude * std::cos(p.translate_angle);
    p.ty = p.translate_magnitude * std::sin(p.translate_angle);
    p.crop_size = cfg.crop;
    p.crop_x = uniform_int(rng, 0, frame_width - cfg.crop);
    p.crop_y = uniform_int(rng, 0, frame_height - cfg.crop);
    for (auto& g : p.gains) g = rng.uniform(cfg.color_gain.lo, cfg.color_gain.hi);
    p.blur_sigma = rng.uniform(cfg.blur_sigma.lo, cfg.blur_sigma.hi);
    p.opacity = rng.uniform(cfg.opacity.lo, cfg.opacity.hi);
    p.noise_sigma = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
    for (auto& o : p.offsets) o = rng.uniform(-cfg.color_offset, cfg.color_offset);
    p.noise_seed = rng.next_u64();
    return p;
}

PreparedPair prepare_pair(const BracketPair& pair, const SynthesisConfig& cfg) {
    cfg.validate();
    if (!pair.normal.same_shape(pair.low)) throw std::invalid_argument("bracket exposures differ in size");
    if (!pair.normal.domain().is_encoded() || !pair.low.domain().is_encoded()) {
        throw DomainError("bracket exposures must be Encoded");
    }
    const auto [w, h] = resized_size(cfg, pair.normal.width(), pair.normal.height());
    if (pair.normal.width() < w || pair.normal.height() < h) {
        throw std::invalid_argument("bracket pair " + pair.id + " is smaller than the resize target");
    }
    PreparedPair out;
    out.id = pair.id;
    if (pair.normal.width() == w && pair.normal.height() == h) {
        out.normal = pair.normal;
        out.low = pair.low;
    } else {
        out.normal = resize_bilinear(pair.normal, w, h);
        out.low = resize_bilinear(pair.low, w, h);
    }
    return out;
}

FlareTriplet render_triplet(const PreparedPair& pair, const SynthesisConfig& cfg, const SynthesisParams& params) {
    const int c = params.crop_size;
    if (params.frame_width != pair.normal.width() || params.frame_height != pair.normal.height()) {
        throw std::invalid_argument("params were sampled for a different frame size");
    }
    if (!pair.normal.same_shape(pair.low)) throw std::invalid_argument("prepared exposures differ in size");

    const Image normal_crop = crop(pair.normal, params.crop_x, params.crop_y, c, c);
    const Image low_crop = crop_translated(pair.low, params.tx, params.ty, params.crop_x, params.crop_y, c, c);

    const double g = params.gamma;
    const Image normal_lin = decode_gamma(normal_crop, g);
    const Image low_lin = decode_gamma(low_crop, g);

    const OpticalCenter center = OpticalCenter::raster_center(c, c);
    Image flare = mul_gains(low_lin, params.gains);
    flare = gaussian_blur(flare, params.blur_sigma);
    flare = rotate180_about(flare, center);
    flare = clamp01(scale(flare, params.opacity));

    Rng noise_rng(params.noise_seed);
    Image background = add_gaussian_noise(normal_lin, params.noise_sigma, noise_rng);
    background = clamp01(add_offsets(background, params.offsets));

    const Image corrupted_lin = clamp01(add(background, flare));

    FlareTriplet t;
    t.corrupted = encode_gamma(corrupted_lin, g);
    t.flare_free = encode_gamma(background, g);
    t.flare = encode_gamma(flare, g);
    t.mask = compute_mask(t.flare, cfg.mask_threshold);
    t.params = params;
    t.params.dark_low = max_sample(low_crop) == 0.0f;
    return t;
}

FlareTriplet synthesize_triplet(const PreparedPair& pair, const SynthesisConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    const SynthesisParams p = sample_params(cfg, pair.normal.width(), pair.normal.height(), rng);
    return render_triplet(pair, cfg, p);
}

FlareTriplet synthesize_triplet(const BracketPair& pair, const SynthesisConfig& cfg, std::uint64_t seed) {
    return synthesize_triplet(prepare_pair(pair, cfg), cfg, seed);
}

Mask compute_mask(const Image& flare, double threshold) {
    return threshold_max_channel(flare, threshold);
}

} // namespace flarekit
