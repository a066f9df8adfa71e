#include "flarekit/removal.hpp"

#include "flarekit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace flarekit {

namespace {

struct Box {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
};

Box grow(const Box& b, int by, int w, int h) {
    return {std::max(0, b.x0 - by), std::max(0, b.y0 - by), std::min(w - 1, b.x1 + by), std::min(h - 1, b.y1 + by)};
}

void require_encoded_unit(const Image& input, const char* op) {
    if (!input.domain().is_encoded()) throw DomainError(std::string(op) + ": input must be Encoded");
    for (float v : input.samples()) {
        if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument(std::string(op) + ": samples must lie in [0, 1]");
    }
}

float encode_sample(double v, double gamma) {
    return v <= 0.0 ? 0.0f : static_cast<float>(std::pow(v, 1.0 / gamma));
}

constexpr double kAutoPresmooth = 1.5;

// Noise level in linear light from the median absolute deviation of the
// 5-point Laplacian over unclipped proposal pixels (all channels pooled).
// White noise of std s gives a Laplacian of std s * sqrt(20).
double estimate_noise(const Image& input, const Mask& proposal, const Box& bb, double clip_level) {
    const double g = input.domain().gamma;
    const int w = input.width(), h = input.height();
    auto lin = [&](int x, int y, int c) {
        const double v = input.at(x, y, c);
        return v == 0.0 ? 0.0 : std::pow(v, g);
    };
    auto clipped = [&](int x, int y) {
        return std::max({input.at(x, y, 0), input.at(x, y, 1), input.at(x, y, 2)}) >= clip_level;
    };
    std::vector<double> lap;
    for (int y = std::max(1, bb.y0); y <= std::min(h - 2, bb.y1); ++y) {
        for (int x = std::max(1, bb.x0); x <= std::min(w - 2, bb.x1); ++x) {
            if (!proposal.at(x, y)) continue;
            if (clipped(x, y) || clipped(x - 1, y) || clipped(x + 1, y) || clipped(x, y - 1) || clipped(x, y + 1)) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                lap.push_back(4.0 * lin(x, y, c) - lin(x - 1, y, c) - lin(x + 1, y, c) - lin(x, y - 1, c) -
                              lin(x, y + 1, c));
            }
        }
    }
    if (lap.empty()) return 0.0;
    auto median = [](std::vector<double>& v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
    };
    const double m = median(lap);
    for (auto& v : lap) v = std::abs(v - m);
    return 1.4826 * median(lap) / std::sqrt(20.0);
}

// Everything the objective needs, restricted to a box around the proposal.
class FitContext {
public:
    struct Px {
        std::size_t i = 0;
        bool right = false;
        bool down = false;
        bool left = false;
        bool up = false;
    };

    FitContext(const Image& input, const OpticalCenter& center, const RemovalConfig& cfg, const Mask& proposal)
        : cfg_(cfg), w_(input.width()), h_(input.height()) {
        Box bb{w_, h_, -1, -1};
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                if (!proposal.at(x, y)) continue;
                bb.x0 = std::min(bb.x0, x);
                bb.y0 = std::min(bb.y0, y);
                bb.x1 = std::max(bb.x1, x);
                bb.y1 = std::max(bb.y1, y);
            }
        }
        empty_ = bb.x1 < 0;
        if (empty_) return;

        area_ = grow(bb, 1, w_, h_);
        const int reach = static_cast<int>(std::ceil(cfg.search_window)) + 1;
        const int blur_reach = static_cast<int>(std::ceil(3.0 * cfg.sigma_max));
        pattern_box_ = grow(area_, reach + blur_reach, w_, h_);

        const double g = input.domain().gamma;
        const int aw = area_.width();
        const int ah = area_.height();
        for (int c = 0; c < 3; ++c) lin_[c].assign(static_cast<std::size_t>(aw) * ah, 0.0);
        for (int y = 0; y < ah; ++y) {
            for (int x = 0; x < aw; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double v = input.at(area_.x0 + x, area_.y0 + y, c);
                    lin_[c][static_cast<std::size_t>(y) * aw + x] = v == 0.0 ? 0.0 : std::pow(v, g);
                }
            }
        }
        noise_ = estimate_noise(input, proposal, bb, cfg.clip_level);
        presmooth_ = cfg.presmooth >= 0.0 ? cfg.presmooth : (noise_ > cfg.noise_floor ? kAutoPresmooth : 0.0);

        // Clipped samples carry no information; a pixel is dropped when its
        // difference stencil, widened by the smoothing support, reaches one.
        smooth_kernel_ = presmooth_ > 0.0 ? gaussian_kernel(presmooth_) : std::vector<double>{};
        const int smooth_r = static_cast<int>(smooth_kernel_.size() / 2);
        const Box reach_box = grow(area_, smooth_r + 1, w_, h_);
        const int rw = reach_box.width();
        std::vector<int> sat_table(static_cast<std::size_t>(rw + 1) * (reach_box.height() + 1), 0);
        for (int y = 0; y < reach_box.height(); ++y) {
            for (int x = 0; x < rw; ++x) {
                const int ix = reach_box.x0 + x, iy = reach_box.y0 + y;
                const int hit =
                    std::max({input.at(ix, iy, 0), input.at(ix, iy, 1), input.at(ix, iy, 2)}) >= cfg.clip_level;
                sat_table[static_cast<std::size_t>(y + 1) * (rw + 1) + x + 1] =
                    hit + sat_table[static_cast<std::size_t>(y) * (rw + 1) + x + 1] +
                    sat_table[static_cast<std::size_t>(y + 1) * (rw + 1) + x] -
                    sat_table[static_cast<std::size_t>(y) * (rw + 1) + x];
            }
        }
        auto clipped_near = [&](int x, int y, int r) {
            const int x0 = std::max(reach_box.x0, x - r) - reach_box.x0;
            const int y0 = std::max(reach_box.y0, y - r) - reach_box.y0;
            const int x1 = std::min(reach_box.x1, x + r) - reach_box.x0 + 1;
            const int y1 = std::min(reach_box.y1, y + r) - reach_box.y0 + 1;
            const auto at = [&](int xx, int yy) { return sat_table[static_cast<std::size_t>(yy) * (rw + 1) + xx]; };
            return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0) > 0;
        };
        for (int y = bb.y0; y <= bb.y1; ++y) {
            for (int x = bb.x0; x <= bb.x1; ++x) {
                if (!proposal.at(x, y)) continue;
                if (clipped_near(x, y, smooth_r + 1)) continue;
                Px p;
                p.i = static_cast<std::size_t>(y - area_.y0) * aw + (x - area_.x0);
                p.right = x + 1 <= area_.x1;
                p.down = y + 1 <= area_.y1;
                p.left = x - 1 >= area_.x0;
                p.up = y - 1 >= area_.y0;
                px_.push_back(p);
            }
        }

        for (int c = 0; c < 3; ++c) smooth(lin_[c], lin_smooth_[c]);

        const Image sat = gamma_apply(input, cfg.prior_gamma, input.domain());
        const Image rotated = rotate180_about(sat, center);
        pattern_ = crop(rotated, pattern_box_.x0, pattern_box_.y0, pattern_box_.width(), pattern_box_.height());
    }

    bool empty() const { return empty_; }
    const Box& area() const { return area_; }
    double noise() const { return noise_; }
    double presmooth() const { return presmooth_; }

    using Planes = std::array<std::vector<double>, 3>;

    // Unit-gain model blur_sigma(pattern) shifted by (dx, dy), over the area box.
    void unit_model(double sigma, double dx, double dy, Planes& out) {
        const Image& b = blurred(sigma);
        const int aw = area_.width();
        const int ah = area_.height();
        for (auto& p : out) p.assign(static_cast<std::size_t>(aw) * ah, 0.0);
        const double fx = std::floor(dx), fy = std::floor(dy);
        const double tx = dx - fx, ty = dy - fy;
        // source = p - d, so taps sit at p - floor(d) and one pixel left/up
        const int ox = static_cast<int>(fx), oy = static_cast<int>(fy);
        const double wx[2] = {1.0 - tx, tx};
        const double wy[2] = {1.0 - ty, ty};
        for (int y = 0; y < ah; ++y) {
            for (int x = 0; x < aw; ++x) {
                const int sx = area_.x0 + x - ox;
                const int sy = area_.y0 + y - oy;
                double acc[3] = {0.0, 0.0, 0.0};
                for (int j = 0; j < 2; ++j) {
                    if (wy[j] == 0.0) continue;
                    const int qy = sy - j;
                    if (qy < 0 || qy >= h_) continue;
                    for (int i = 0; i < 2; ++i) {
                        if (wx[i] == 0.0) continue;
                        const int qx = sx - i;
                        if (qx < 0 || qx >= w_) continue;
                        const double wgt = wx[i] * wy[j];
                        for (int c = 0; c < 3; ++c) {
                            acc[c] += wgt * b.at(qx - pattern_box_.x0, qy - pattern_box_.y0, c);
                        }
                    }
                }
                for (int c = 0; c < 3; ++c) out[c][static_cast<std::size_t>(y) * aw + x] = acc[c];
            }
        }
    }

    // Per channel: gain g >= 0 and one offset per axis, fitted by least
    // squares to the differenced image. The offsets absorb smooth background
    // shading (a plane for first differences, a quadric for second ones).
    struct Linear {
        ChannelGains gains{};
        std::array<std::array<double, 2>, 3> offsets{};
    };

    struct Moments {
        double n = 0, sb = 0, si = 0, sbb = 0, sbi = 0;
    };

    std::array<std::array<Moments, 2>, 3> moments(const Planes& unit) const {
        std::array<std::array<Moments, 2>, 3> m{};
        for (int c = 0; c < 3; ++c) {
            for (const auto& p : px_) {
                for (int axis = 0; axis < 2; ++axis) {
                    double db, di;
                    if (!difference(unit[c], p, axis, db)) continue;
                    difference(lin_smooth_[c], p, axis, di);
                    auto& mm = m[c][axis];
                    mm.n += 1;
                    mm.sb += db;
                    mm.si += di;
                    mm.sbb += db * db;
                    mm.sbi += db * di;
                }
            }
        }
        return m;
    }

    // Offsets for fixed gains.
    Linear offsets_for(const Planes& unit, const ChannelGains& gains) const {
        const auto m = moments(unit);
        Linear lin;
        lin.gains = gains;
        for (int c = 0; c < 3; ++c) {
            for (int axis = 0; axis < 2; ++axis) {
                const auto& mm = m[c][axis];
                lin.offsets[c][axis] = mm.n > 0 ? (mm.si - gains[c] * mm.sb) / mm.n : 0.0;
            }
        }
        return lin;
    }

    Linear solve_linear(const Planes& unit) const {
        const auto m = moments(unit);
        Linear lin;
        for (int c = 0; c < 3; ++c) {
            double num = 0.0, den = 0.0;
            for (int axis = 0; axis < 2; ++axis) {
                const auto& mm = m[c][axis];
                if (mm.n == 0) continue;
                num += mm.sbi - mm.sb * mm.si / mm.n;
                den += mm.sbb - mm.sb * mm.sb / mm.n;
            }
            const double g = den > 0.0 ? std::max(0.0, num / den) : 0.0;
            lin.gains[c] = g;
            for (int axis = 0; axis < 2; ++axis) {
                const auto& mm = m[c][axis];
                lin.offsets[c][axis] = mm.n > 0 ? (mm.si - g * mm.sb) / mm.n : 0.0;
            }
        }
        return lin;
    }

    // `unit` holds the raw model, `smoothed` the same planes after presmoothing.
    double objective(const Planes& unit, const Planes& smoothed, const Linear& lin) const {
        double j = 0.0;
        for (int c = 0; c < 3; ++c) {
            const auto& B = unit[c];
            const auto& I = lin_[c];
            const double g = lin.gains[c];
            for (const auto& p : px_) {
                for (int axis = 0; axis < 2; ++axis) {
                    double db, di;
                    if (!difference(smoothed[c], p, axis, db)) continue;
                    difference(lin_smooth_[c], p, axis, di);
                    const double e = di - g * db - lin.offsets[c][axis];
                    j += cfg_.norm == 2 ? e * e : std::abs(e);
                }
                const double r = I[p.i] - g * B[p.i];
                if (r < 0.0) j += cfg_.lambda * -r;
            }
        }
        return j;
    }

    // Objective for fixed gains (model given raw; smoothed here).
    double objective(const Planes& unit, const ChannelGains& gains) {
        for (int c = 0; c < 3; ++c) smooth(unit[c], smoothed_[c]);
        return objective(unit, smoothed_, offsets_for(smoothed_, gains));
    }

    double null_objective() {
        Planes zero;
        for (auto& p : zero) p.assign(static_cast<std::size_t>(area_.width()) * area_.height(), 0.0);
        return objective(zero, ChannelGains{0.0, 0.0, 0.0});
    }

    // Objective with gains solved; `gains` receives them.
    double evaluate(double sigma, double dx, double dy, ChannelGains& gains) {
        unit_model(sigma, dx, dy, scratch_);
        for (int c = 0; c < 3; ++c) smooth(scratch_[c], smoothed_[c]);
        const Linear lin = solve_linear(smoothed_);
        gains = lin.gains;
        return objective(scratch_, smoothed_, lin);
    }

    // Separable presmoothing over the area box, replicate edges. The input
    // and every model go through the same filter, so residuals stay linear.
    void smooth(const std::vector<double>& in, std::vector<double>& out) const {
        if (smooth_kernel_.empty()) {
            out = in;
            return;
        }
        const int aw = area_.width();
        const int ah = area_.height();
        const int r = static_cast<int>(smooth_kernel_.size() / 2);
        tmp_.assign(in.size(), 0.0);
        out.assign(in.size(), 0.0);
        for (int y = 0; y < ah; ++y) {
            const double* row = in.data() + static_cast<std::size_t>(y) * aw;
            for (int x = 0; x < aw; ++x) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) acc += smooth_kernel_[k + r] * row[std::clamp(x + k, 0, aw - 1)];
                tmp_[static_cast<std::size_t>(y) * aw + x] = acc;
            }
        }
        for (int y = 0; y < ah; ++y) {
            for (int x = 0; x < aw; ++x) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) {
                    acc += smooth_kernel_[k + r] * tmp_[static_cast<std::size_t>(std::clamp(y + k, 0, ah - 1)) * aw + x];
                }
                out[static_cast<std::size_t>(y) * aw + x] = acc;
            }
        }
    }

    const std::vector<double>& linear(int c) const { return lin_[c]; }

    // Forward first difference or central second difference of `v` at p.
    bool difference(const std::vector<double>& v, const Px& p, int axis, double& out) const {
        const std::size_t stride = axis == 0 ? 1 : static_cast<std::size_t>(area_.width());
        const bool fwd = axis == 0 ? p.right : p.down;
        if (!fwd) return false;
        if (cfg_.derivative_order == 1) {
            out = v[p.i + stride] - v[p.i];
            return true;
        }
        const bool back = axis == 0 ? p.left : p.up;
        if (!back) return false;
        out = v[p.i + stride] - 2.0 * v[p.i] + v[p.i - stride];
        return true;
    }

    const std::vector<Px>& pixels() const { return px_; }

private:
    const Image& blurred(double sigma) {
        auto it = cache_.find(sigma);
        if (it != cache_.end()) return it->second;
        if (cache_.size() > 64) cache_.clear();
        return cache_.emplace(sigma, gaussian_blur(pattern_, sigma)).first->second;
    }

    RemovalConfig cfg_;
    int w_, h_;
    bool empty_ = true;
    Box area_;
    Box pattern_box_;
    double noise_ = 0.0;
    double presmooth_ = 0.0;
    Planes lin_;
    Planes lin_smooth_;
    std::vector<double> smooth_kernel_;
    mutable std::vector<double> tmp_;
    Planes smoothed_;
    std::vector<Px> px_;
    Image pattern_;
    std::map<double, Image> cache_;
    Planes scratch_;
};

constexpr double kInvPhi = 0.6180339887498949;
constexpr double kMinStepGain = 1e-9;

// Minimises f on [lo, hi] by golden-section search; returns the best point
// evaluated.
template <class F>
std::pair<double, double> golden_section(F&& f, double lo, double hi, double tol) {
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    double best_x = fc <= fd ? c : d;
    double best_f = std::min(fc, fd);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            if (fc < best_f) best_f = fc, best_x = c;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            if (fd < best_f) best_f = fd, best_x = d;
        }
    }
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (fm < best_f) best_f = fm, best_x = mid;
    return {best_x, best_f};
}

std::vector<double> grid_values(double lo, double hi, double step) {
    std::vector<double> v;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) v.push_back(lo + i * step);
    return v;
}

} // namespace

void RemovalConfig::validate() const {
    if (!(sat_threshold > 0.0 && sat_threshold <= 1.0)) throw std::invalid_argument("sat_threshold must lie in (0, 1]");
    if (dilation < 0) throw std::invalid_argument("dilation must be >= 0");
    if (!(search_window >= 0.0)) throw std::invalid_argument("search_window must be >= 0");
    if (!(offset_step > 0.0) || !(sigma_step > 0.0)) throw std::invalid_argument("grid steps must be positive");
    if (!(sigma_max >= 0.0)) throw std::invalid_argument("sigma_max must be >= 0");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_sweeps < 0) throw std::invalid_argument("max_sweeps must be >= 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (derivative_order != 1 && derivative_order != 2) throw std::invalid_argument("derivative_order must be 1 or 2");
    if (norm != 1 && norm != 2) throw std::invalid_argument("norm must be 1 or 2");
    if (!(clip_level > 0.0 && clip_level <= 1.0)) throw std::invalid_argument("clip_level must lie in (0, 1]");
    if (!std::isfinite(presmooth)) throw std::invalid_argument("presmooth must be finite");
    if (!(noise_floor >= 0.0)) throw std::invalid_argument("noise_floor must be >= 0");
    if (max_sources < 1) throw std::invalid_argument("max_sources must be >= 1");
    if (!(prior_gamma > 0.0)) throw std::invalid_argument("prior_gamma must be positive");
    if (!(min_relative_improvement >= 0.0)) throw std::invalid_argument("min_relative_improvement must be >= 0");
}

std::vector<Mask> saturated_sources(const Image& input, double sat_threshold) {
    const Mask seeds = threshold_max_channel(input, sat_threshold);
    const int w = input.width();
    const int h = input.height();
    std::vector<int> label(seeds.pixel_count(), -1);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < label.size(); ++start) {
        if (!seeds.bits()[start] || label[start] >= 0) continue;
        const int id = static_cast<int>(comps.size());
        comps.emplace_back();
        label[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            comps[id].push_back(p);
            const int px = static_cast<int>(p % w);
            const int py = static_cast<int>(p / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = px + dx;
                    const int y = py + dy;
                    if (x < 0 || y < 0 || x >= w || y >= h) continue;
                    const std::size_t q = static_cast<std::size_t>(y) * w + x;
                    if (!seeds.bits()[q] || label[q] >= 0) continue;
                    label[q] = id;
                    stack.push_back(q);
                }
            }
        }
    }
    std::vector<std::size_t> order(comps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // components are discovered in raster order, so a stable sort breaks ties by position
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return comps[a].size() > comps[b].size(); });
    std::vector<Mask> out;
    for (std::size_t i : order) {
        Mask m(w, h);
        for (std::size_t p : comps[i]) m.bits()[p] = 1;
        out.push_back(std::move(m));
    }
    return out;
}

Mask seed_proposal(const Mask& seeds, const OpticalCenter& center, int dilation) {
    if (!seeds.any()) return Mask(seeds.width(), seeds.height());
    return dilate_disk(rotate180_about(seeds, center), dilation);
}

Mask proposal_region(const Image& input, const OpticalCenter& center, double sat_threshold, int dilation) {
    return seed_proposal(threshold_max_channel(input, sat_threshold), center, dilation);
}

namespace {

void check_seeds(const Image& input, const Mask& seeds) {
    if (seeds.width() != input.width() || seeds.height() != input.height()) {
        throw std::invalid_argument("seed mask shape differs from the image");
    }
}

Mask dominant_source(const Image& input, double sat_threshold) {
    auto sources = saturated_sources(input, sat_threshold);
    if (sources.empty()) return Mask(input.width(), input.height());
    return std::move(sources.front());
}

} // namespace

double flare_objective(const Image& input, const OpticalCenter& center, const Mask& seeds,
                       const FlareFitParams& params, const RemovalConfig& cfg) {
    cfg.validate();
    require_encoded_unit(input, "flare_objective");
    check_seeds(input, seeds);
    FitContext ctx(input, center, cfg, seed_proposal(seeds, center, cfg.dilation));
    if (ctx.empty()) return 0.0;
    FitContext::Planes unit;
    ctx.unit_model(params.blur_sigma, params.dx, params.dy, unit);
    return ctx.objective(unit, params.gains);
}

double flare_objective(const Image& input, const OpticalCenter& center, const FlareFitParams& params,
                       const RemovalConfig& cfg) {
    return flare_objective(input, center, dominant_source(input, cfg.sat_threshold), params, cfg);
}

Image render_flare_model(const Image& input, const OpticalCenter& center, const Mask& seeds,
                         const FlareFitParams& params, const RemovalConfig& cfg) {
    cfg.validate();
    require_encoded_unit(input, "render_flare_model");
    check_seeds(input, seeds);
    const Mask proposal = seed_proposal(seeds, center, cfg.dilation);
    Image out(input.width(), input.height(), Domain::linear());
    FitContext ctx(input, center, cfg, proposal);
    if (ctx.empty()) return out;
    FitContext::Planes unit;
    ctx.unit_model(params.blur_sigma, params.dx, params.dy, unit);
    const Box& a = ctx.area();
    for (int y = a.y0; y <= a.y1; ++y) {
        for (int x = a.x0; x <= a.x1; ++x) {
            if (!proposal.at(x, y)) continue;
            const std::size_t i = static_cast<std::size_t>(y - a.y0) * a.width() + (x - a.x0);
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(params.gains[c] * unit[c][i]);
        }
    }
    return out;
}

FitResult fit_flare(const Image& input, const OpticalCenter& center, const Mask& seeds, const RemovalConfig& cfg) {
    cfg.validate();
    require_encoded_unit(input, "fit_flare");
    validate_center(center, input.width(), input.height());
    check_seeds(input, seeds);
    FitResult res;
    res.proposal = seed_proposal(seeds, center, cfg.dilation);
    FitContext ctx(input, center, cfg, res.proposal);
    if (ctx.empty() || ctx.pixels().empty()) return res;

    res.null_objective = ctx.null_objective();
    res.noise_sigma = ctx.noise();
    res.presmooth = ctx.presmooth();

    const auto sigmas = grid_values(0.0, cfg.sigma_max, cfg.sigma_step);
    const auto offsets = grid_values(-cfg.search_window, cfg.search_window, cfg.offset_step);

    FlareFitParams best;
    double best_j = std::numeric_limits<double>::infinity();
    ChannelGains gains;
    for (double s : sigmas) {
        for (double dy : offsets) {
            for (double dx : offsets) {
                const double j = ctx.evaluate(s, dx, dy, gains);
                if (j < best_j) {
                    best_j = j;
                    best = {gains, s, dx, dy};
                }
            }
        }
    }
    res.grid_objective = best_j;
    res.trace.push_back(best_j);

    // coordinate descent: sigma, dx, dy in turn, each over +-one grid step
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        bool improved = false;
        for (int k = 0; k < 3; ++k) {
            double* slot = k == 0 ? &best.blur_sigma : (k == 1 ? &best.dx : &best.dy);
            const double step = k == 0 ? cfg.sigma_step : cfg.offset_step;
            const double lo_bound = k == 0 ? 0.0 : -cfg.search_window;
            const double hi_bound = k == 0 ? cfg.sigma_max : cfg.search_window;
            const double lo = std::max(lo_bound, *slot - step);
            const double hi = std::min(hi_bound, *slot + step);
            if (hi - lo <= cfg.tolerance) continue;
            FlareFitParams probe = best;
            double* pslot = k == 0 ? &probe.blur_sigma : (k == 1 ? &probe.dx : &probe.dy);
            auto f = [&](double v) {
                *pslot = v;
                ChannelGains g;
                return ctx.evaluate(probe.blur_sigma, probe.dx, probe.dy, g);
            };
            const auto [x, fx] = golden_section(f, lo, hi, cfg.tolerance);
            // steps this small against the no-flare objective are float32 noise
            if (fx < best_j - kMinStepGain * res.null_objective) {
                *slot = x;
                best_j = ctx.evaluate(best.blur_sigma, best.dx, best.dy, best.gains);
                res.trace.push_back(best_j);
                improved = true;
                res.refined = true;
            }
        }
        if (!improved) break;
    }

    res.objective = best_j;
    res.found = res.null_objective > 0.0 &&
                (res.null_objective - best_j) >= cfg.min_relative_improvement * res.null_objective;
    res.params = best;
    if (!res.found) {
        res.params.gains = {0.0, 0.0, 0.0};
        res.objective = res.null_objective;
    }
    return res;
}

FitResult fit_flare(const Image& input, const OpticalCenter& center, const RemovalConfig& cfg) {
    return fit_flare(input, center, dominant_source(input, cfg.sat_threshold), cfg);
}

RemovalResult remove_flare(const Image& input, const OpticalCenter& center, const RemovalConfig& cfg) {
    cfg.validate();
    require_encoded_unit(input, "remove_flare");
    RemovalResult out;
    out.flare_free_est = input;
    out.flare_est = Image(input.width(), input.height(), input.domain());
    out.proposal = Mask(input.width(), input.height());

    const double g = input.domain().gamma;
    Image flare_lin(input.width(), input.height(), Domain::linear());
    bool any = false;

    auto sources = saturated_sources(input, cfg.sat_threshold);
    if (sources.size() > static_cast<std::size_t>(cfg.max_sources)) sources.resize(cfg.max_sources);
    for (const Mask& seeds : sources) {
        FitResult fit = fit_flare(out.flare_free_est, center, seeds, cfg);
        for (std::size_t i = 0; i < fit.proposal.pixel_count(); ++i) {
            if (fit.proposal.bits()[i]) out.proposal.bits()[i] = 1;
        }
        if (fit.found) {
            any = true;
            const Image model = render_flare_model(out.flare_free_est, center, seeds, fit.params, cfg);
            for (int y = 0; y < input.height(); ++y) {
                for (int x = 0; x < input.width(); ++x) {
                    if (!fit.proposal.at(x, y)) continue;
                    for (int c = 0; c < 3; ++c) {
                        const double v = out.flare_free_est.at(x, y, c);
                        const double lin = v == 0.0 ? 0.0 : std::pow(v, g);
                        const double f = std::min<double>(model.at(x, y, c), lin);
                        if (f <= 0.0) continue;
                        flare_lin.at(x, y, c) += static_cast<float>(f);
                        out.flare_free_est.at(x, y, c) = encode_sample(lin - f, g);
                    }
                }
            }
        }
        out.fits.push_back(std::move(fit));
    }
    if (any) {
        auto src = flare_lin.samples();
        auto dst = out.flare_est.samples();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = encode_sample(src[i], g);
    }
    return out;
}

Image hdr_merge(const Image& input, const Image& flare_est, const OpticalCenter& center, double ev_step,
                double sat_threshold) {
    if (!input.same_shape(flare_est)) throw std::invalid_argument("hdr_merge: image shapes differ");
    if (!input.domain().is_encoded() || !flare_est.domain().is_encoded()) {
        throw DomainError("hdr_merge: both images must be Encoded");
    }
    Image out = decode_gamma(input);
    const Image flare_back = rotate180_about(decode_gamma(flare_est), center);
    const Mask sat = threshold_max_channel_at_least(input, sat_threshold);
    const double k = std::exp2(ev_step);
    for (int y = 0; y < input.height(); ++y) {
        for (int x = 0; x < input.width(); ++x) {
            if (!sat.at(x, y)) continue;
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(flare_back.at(x, y, c) * k);
        }
    }
    return out;
}

// --- config files -----------------------------------------------------------

RemovalConfig removal_config_from_json(std::string_view text) {
    using json = nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("removal config: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("removal config: expected a JSON object");
    RemovalConfig cfg;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "sat_threshold") cfg.sat_threshold = v.get<double>();
            else if (key == "dilation") cfg.dilation = v.get<int>();
            else if (key == "search_window") cfg.search_window = v.get<double>();
            else if (key == "offset_step") cfg.offset_step = v.get<double>();
            else if (key == "sigma_max") cfg.sigma_max = v.get<double>();
            else if (key == "sigma_step") cfg.sigma_step = v.get<double>();
            else if (key == "tolerance") cfg.tolerance = v.get<double>();
            else if (key == "max_sweeps") cfg.max_sweeps = v.get<int>();
            else if (key == "lambda") cfg.lambda = v.get<double>();
            else if (key == "derivative_order") cfg.derivative_order = v.get<int>();
            else if (key == "norm") cfg.norm = v.get<int>();
            else if (key == "presmooth") cfg.presmooth = v.get<double>();
            else if (key == "noise_floor") cfg.noise_floor = v.get<double>();
            else if (key == "clip_level") cfg.clip_level = v.get<double>();
            else if (key == "max_sources") cfg.max_sources = v.get<int>();
            else if (key == "prior_gamma") cfg.prior_gamma = v.get<double>();
            else if (key == "min_relative_improvement") cfg.min_relative_improvement = v.get<double>();
            else throw std::invalid_argument("removal config: unknown key '" + key + "'");
        }
    } catch (const json::type_error& e) {
        throw std::invalid_argument(std::string("removal config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string removal_config_to_json(const RemovalConfig& cfg) {
    nlohmann::json j;
    j["sat_threshold"] = cfg.sat_threshold;
    j["dilation"] = cfg.dilation;
    j["search_window"] = cfg.search_window;
    j["offset_step"] = cfg.offset_step;
    j["sigma_max"] = cfg.sigma_max;
    j["sigma_step"] = cfg.sigma_step;
    j["tolerance"] = cfg.tolerance;
    j["max_sweeps"] = cfg.max_sweeps;
    j["lambda"] = cfg.lambda;
    j["derivative_order"] = cfg.derivative_order;
    j["norm"] = cfg.norm;
    j["presmooth"] = cfg.presmooth;
    j["noise_floor"] = cfg.noise_floor;
    j["clip_level"] = cfg.clip_level;
    j["max_sources"] = cfg.max_sources;
    j["prior_gamma"] = cfg.prior_gamma;
    j["min_relative_improvement"] = cfg.min_relative_improvement;
    return j.dump(2);
}

} // namespace flarekit
